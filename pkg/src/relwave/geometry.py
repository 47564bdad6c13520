"""Planar curve geometry for relativistic waveguides.

A waveguide is a tubular neighborhood of half-width ``eps`` around an
arc-length parametrized planar curve.  The curve enters every computation
only through its signed curvature ``kappa(s)`` and the first two
derivatives, so the central object here is :class:`CurveProfile`: a bundle
of callables ``kappa, kappa', kappa''`` together with the sup/L2 norms and
a decay window that make the admissibility checks computable.

Orientation convention: the unit normal ``nu`` is the tangent rotated by
+pi/2, so ``(gamma', nu)`` is positively oriented and a counterclockwise
circle of radius R has curvature +1/R.  The spectral quantities computed
downstream depend on kappa only through kappa**2, so the sign convention
is a bookkeeping choice, fixed here once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

__all__ = [
    "CurveProfile",
    "TubularParams",
    "ValidationReport",
    "CurvePath",
    "zero_curvature",
    "gaussian_bump",
    "compact_bump",
    "profile_from_samples",
    "curvature_from_parametrization",
    "epsilon0",
    "validate_assumptions",
    "tubular_map",
    "curvature_primitive",
    "read_curve_file",
    "read_profile_file",
]

# Gauss-Legendre rule reused for per-cell cumulative integration.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class CurveProfile:
    """Curvature data of a planar curve.

    Parameters
    ----------
    kappa, kappa_prime, kappa_double_prime : callable
        Signed curvature and its first two derivatives, vectorized over s.
    sup_kappa, sup_kappa_prime, sup_kappa_double_prime : float
        Supremum norms (over the real line) of the three functions.
    l2_kappa_squared : float
        The integral of kappa**2 over the real line.
    decay_window : float
        Half-width S of the window outside which ``|kappa| <= tail_bound``.
    tail_bound : float
        Declared bound on the curvature tail beyond the decay window.
    name : str
        Identifier used in reports and file names.
    """

    kappa: Callable
    kappa_prime: Callable
    kappa_double_prime: Callable
    sup_kappa: float
    sup_kappa_prime: float
    sup_kappa_double_prime: float
    l2_kappa_squared: float
    decay_window: float
    tail_bound: float = 1e-8
    name: str = "profile"

    def __post_init__(self):
        if self.sup_kappa < 0 or self.l2_kappa_squared < 0:
            raise ValueError("norms must be nonnegative")
        if self.decay_window <= 0:
            raise ValueError("decay_window must be positive")


@dataclass(frozen=True)
class TubularParams:
    """Half-width scale and mass of a waveguide run."""

    epsilon: float
    m: float = 0.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.m < 0:
            raise ValueError("mass must be nonnegative")

    def validate(self, profile: CurveProfile) -> None:
        """Reject half-widths at or beyond the fold-over threshold."""
        if self.epsilon >= epsilon0(profile):
            raise ValueError(
                f"epsilon = {self.epsilon} >= epsilon0 = {epsilon0(profile)}"
            )


@dataclass
class ValidationReport:
    """Outcome of the admissibility checks on a (profile, epsilon) pair."""

    decay_ok: bool          # curvature tail below the declared bound
    derivatives_ok: bool    # kappa', kappa'' bounded on the sampling window
    injective: bool         # no self-intersection among tube cross-sections
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.decay_ok and self.derivatives_ok and self.injective


# ---------------------------------------------------------------------------
# built-in profiles (analytic derivatives)
# ---------------------------------------------------------------------------

def zero_curvature() -> CurveProfile:
    """Straight line: kappa identically zero."""
    z = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    return CurveProfile(z, z, z, 0.0, 0.0, 0.0, 0.0,
                        decay_window=1.0, name="zero")


def gaussian_bump(a: float, sigma: float = 1.0) -> CurveProfile:
    """Gaussian curvature bump ``kappa = a * exp(-s**2/sigma**2)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    a = float(a)

    def kappa(s):
        s = np.asarray(s, dtype=float)
        return a * np.exp(-(s / sigma) ** 2)

    def kp(s):
        s = np.asarray(s, dtype=float)
        return a * (-2.0 * s / sigma**2) * np.exp(-(s / sigma) ** 2)

    def kpp(s):
        s = np.asarray(s, dtype=float)
        return a * (4.0 * s**2 / sigma**4 - 2.0 / sigma**2) * np.exp(-(s / sigma) ** 2)

    tail = 1e-8
    # |kappa| <= tail for |s| > S
    window = sigma * math.sqrt(max(math.log(abs(a) / tail), 1.0))
    return CurveProfile(
        kappa, kp, kpp,
        sup_kappa=abs(a),
        sup_kappa_prime=abs(a) * math.sqrt(2.0) * math.exp(-0.5) / sigma,
        sup_kappa_double_prime=2.0 * abs(a) / sigma**2,
        l2_kappa_squared=a**2 * sigma * math.sqrt(math.pi / 2.0),
        decay_window=window,
        tail_bound=tail,
        name=f"gaussian_a{a:g}" + (f"_s{sigma:g}" if sigma != 1.0 else ""),
    )


def compact_bump(a: float, w: float) -> CurveProfile:
    """C2 curvature bump ``a * (1 - (s/w)**2)**3`` supported on [-w, w]."""
    if w <= 0:
        raise ValueError("support half-width must be positive")
    a = float(a)

    def kappa(s):
        x = np.asarray(s, dtype=float) / w
        return np.where(np.abs(x) < 1.0, a * (1.0 - x**2) ** 3, 0.0)

    def kp(s):
        x = np.asarray(s, dtype=float) / w
        return np.where(np.abs(x) < 1.0, -6.0 * a * x * (1.0 - x**2) ** 2 / w, 0.0)

    def kpp(s):
        x = np.asarray(s, dtype=float) / w
        return np.where(
            np.abs(x) < 1.0,
            6.0 * a * (1.0 - x**2) * (5.0 * x**2 - 1.0) / w**2,
            0.0,
        )

    # extrema of x(1-x^2)^2 at x = 1/sqrt(5); of (1-x^2)(5x^2-1) at x = 0
    sup_kp = 6.0 * abs(a) * (16.0 / (25.0 * math.sqrt(5.0))) / w
    l2 = quad(lambda s: kappa(s) ** 2, -w, w, epsabs=1e-14, epsrel=1e-13)[0]
    return CurveProfile(
        kappa, kp, kpp,
        sup_kappa=abs(a),
        sup_kappa_prime=sup_kp,
        sup_kappa_double_prime=6.0 * abs(a) / w**2,
        l2_kappa_squared=l2,
        decay_window=w,
        tail_bound=0.0,
        name=f"compact_a{a:g}_w{w:g}",
    )


def profile_from_samples(s: np.ndarray, kappa: np.ndarray,
                         tail_bound: float = 1e-8,
                         name: str = "sampled") -> CurveProfile:
    """Build a profile from curvature samples on a uniform grid.

    Derivatives use 5-point central stencils in the interior and one-sided
    second-order stencils at the edges; evaluation between samples is by
    cubic spline.
    """
    s = np.asarray(s, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if s.ndim != 1 or s.size < 7:
        raise ValueError("need at least 7 samples on a 1-d grid")
    h = s[1] - s[0]
    if not np.allclose(np.diff(s), h, rtol=0.0, atol=1e-9 * max(abs(h), 1.0)):
        raise ValueError("samples must lie on a uniform grid")

    kp = _stencil_derivative(kappa, h, order=1)
    kpp = _stencil_derivative(kappa, h, order=2)

    sp_k = CubicSpline(s, kappa, extrapolate=False)
    sp_kp = CubicSpline(s, kp, extrapolate=False)
    sp_kpp = CubicSpline(s, kpp, extrapolate=False)

    def _wrap(spline):
        def f(x):
            x = np.asarray(x, dtype=float)
            out = spline(x)
            return np.where(np.isnan(out), 0.0, out)
        return f

    over = np.abs(kappa) > tail_bound
    window = float(np.max(np.abs(s[over]))) if over.any() else float(s[-1])
    return CurveProfile(
        _wrap(sp_k), _wrap(sp_kp), _wrap(sp_kpp),
        sup_kappa=float(np.max(np.abs(kappa))),
        sup_kappa_prime=float(np.max(np.abs(kp))),
        sup_kappa_double_prime=float(np.max(np.abs(kpp))),
        l2_kappa_squared=float(np.trapezoid(kappa**2, s)),
        decay_window=window,
        tail_bound=tail_bound,
        name=name,
    )


def _stencil_derivative(f: np.ndarray, h: float, order: int) -> np.ndarray:
    """5-point central differences, one-sided O(h^2) at the two edge pairs."""
    n = f.size
    out = np.empty(n)
    if order == 1:
        out[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
        out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
        out[1] = (f[2] - f[0]) / (2 * h)
        out[-2] = (f[-1] - f[-3]) / (2 * h)
        out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    elif order == 2:
        out[2:-2] = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2]
                     + 16 * f[1:-3] - f[:-4]) / (12 * h**2)
        out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
        out[1] = (f[2] - 2 * f[1] + f[0]) / h**2
        out[-2] = (f[-1] - 2 * f[-2] + f[-3]) / h**2
        out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    else:
        raise ValueError("order must be 1 or 2")
    return out


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def epsilon0(profile: CurveProfile) -> float:
    """Fold-over threshold 1/sup|kappa| (+inf for a straight line)."""
    if profile.sup_kappa == 0.0:
        return math.inf
    return 1.0 / profile.sup_kappa


def curvature_primitive(profile: CurveProfile, s) -> float | np.ndarray:
    """Antiderivative of the curvature, vanishing at s = 0.

    Composite adaptive quadrature from 0 to s; for array input the values
    are accumulated cell by cell with a Gauss rule, matching the scalar
    path to quadrature accuracy.
    """
    s_arr = np.asarray(s, dtype=float)
    if s_arr.ndim == 0:
        val, _ = quad(profile.kappa, 0.0, float(s_arr),
                      epsabs=1e-13, epsrel=1e-13, limit=400)
        return val
    order = np.argsort(s_arr)
    pts = np.concatenate(([0.0], s_arr[order]))
    out = np.empty(s_arr.size)
    acc = 0.0
    for i in range(s_arr.size):
        lo, hi = pts[i], pts[i + 1]
        if hi != lo:
            nsub = max(1, int(math.ceil(abs(hi - lo) / 0.05)))
            edges = np.linspace(lo, hi, nsub + 1)
            mids = 0.5 * (edges[:-1] + edges[1:])
            halfs = 0.5 * (edges[1:] - edges[:-1])
            nodes = mids[:, None] + halfs[:, None] * _GL_NODES[None, :]
            acc += float(np.sum(halfs * (profile.kappa(nodes) @ _GL_WEIGHTS)))
        out[order[i]] = acc
    return out


class CurvePath:
    """Sampled curve reconstructed from a curvature profile.

    The tangent angle is the curvature primitive; the position is obtained
    by integrating the unit tangent, both with per-cell Gauss rules on a
    dense grid, then splined for evaluation at arbitrary arc length.
    """

    def __init__(self, s: np.ndarray, xy: np.ndarray, theta: np.ndarray):
        self.s = s
        self.xy = xy
        self.theta = theta
        self._sx = CubicSpline(s, xy[:, 0])
        self._sy = CubicSpline(s, xy[:, 1])
        self._st = CubicSpline(s, theta)

    @classmethod
    def from_profile(cls, profile: CurveProfile, s_max: float,
                     ds: float = 0.01) -> "CurvePath":
        n = int(math.ceil(2.0 * s_max / ds))
        n += n % 2            # even cell count so s = 0 is a grid node
        s = np.linspace(-s_max, s_max, n + 1)
        theta = curvature_primitive(profile, s)
        # tangent angle at the Gauss nodes of every cell: theta at the left
        # node plus a nested Gauss integral of kappa over [s_i, x]
        mid = 0.5 * (s[:-1] + s[1:])
        half = 0.5 * (s[1:] - s[:-1])
        xg = mid[:, None] + half[:, None] * _GL_NODES[None, :]      # (n, g)
        hg = 0.5 * (xg - s[:-1, None])                               # (n, g)
        inner = 0.5 * (s[:-1, None, None] + xg[:, :, None]) \
            + hg[:, :, None] * _GL_NODES[None, None, :]              # (n, g, g)
        partial = hg * np.einsum('q,cgq->cg', _GL_WEIGHTS, profile.kappa(inner))
        th = theta[:-1, None] + partial
        dxy = np.stack([
            half * (np.cos(th) @ _GL_WEIGHTS),
            half * (np.sin(th) @ _GL_WEIGHTS),
        ], axis=-1)
        xy = np.zeros((n + 1, 2))
        xy[1:] = np.cumsum(dxy, axis=0)
        xy -= xy[n // 2]      # anchor gamma(0) = (0, 0)
        return cls(s, xy, theta)

    def gamma(self, s):
        return np.stack([self._sx(s), self._sy(s)], axis=-1)

    def tangent(self, s):
        th = self._st(s)
        return np.stack([np.cos(th), np.sin(th)], axis=-1)

    def normal(self, s):
        """Tangent rotated by +pi/2."""
        th = self._st(s)
        return np.stack([-np.sin(th), np.cos(th)], axis=-1)


def tubular_map(path: CurvePath, eps: float, s, t):
    """Point gamma(s) + eps*t*nu(s) of the tube; requires |t| <= 1."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.abs(t_arr) > 1.0 + 1e-14):
        raise ValueError("transverse coordinate t must satisfy |t| <= 1")
    return path.gamma(s) + eps * t_arr[..., None] * path.normal(s)


def validate_assumptions(profile: CurveProfile, eps: float,
                         s_max: float | None = None,
                         ds: float = 0.05) -> ValidationReport:
    """Check decay, derivative bounds and tube injectivity by sampling.

    Injectivity is established constructively: the normal fibers of the
    tube are sampled with spacing ``ds`` and tested pairwise for segment
    intersections.  A half-width at or beyond the fold-over threshold is
    reported as a failed check rather than an exception.
    """
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if s_max is None:
        s_max = max(20.0, profile.decay_window)

    details: dict = {"s_max": s_max, "ds": ds}

    # (A) sampled tail decay beyond the decay window
    tail_s = np.linspace(profile.decay_window, 2.0 * s_max, 200)
    tail_s = tail_s[tail_s > profile.decay_window]
    tail_vals = np.abs(np.concatenate([profile.kappa(tail_s),
                                       profile.kappa(-tail_s)]))
    decay_ok = bool(np.all(tail_vals <= profile.tail_bound * (1 + 1e-12)))
    details["max_tail"] = float(tail_vals.max()) if tail_vals.size else 0.0

    # (B) derivative bounds finite on the window
    grid = np.arange(-s_max, s_max + ds, ds)
    kp = profile.kappa_prime(grid)
    kpp = profile.kappa_double_prime(grid)
    derivatives_ok = bool(np.all(np.isfinite(kp)) and np.all(np.isfinite(kpp)))
    details["sup_kappa_prime_sampled"] = float(np.max(np.abs(kp)))
    details["sup_kappa_double_prime_sampled"] = float(np.max(np.abs(kpp)))

    # (C) injectivity of the tubular map
    if eps >= epsilon0(profile):
        details["injectivity_reason"] = "fold-over: eps*sup|kappa| >= 1"
        return ValidationReport(decay_ok, derivatives_ok, False, details)

    path = CurvePath.from_profile(profile, s_max, ds=min(ds, 0.02))
    p = tubular_map(path, eps, grid, np.full_like(grid, -1.0))
    q = tubular_map(path, eps, grid, np.full_like(grid, 1.0))
    hit = _segments_intersect_pairwise(p, q)
    if hit is not None:
        details["injectivity_reason"] = (
            f"fibers at s = {grid[hit[0]]:.3f} and s = {grid[hit[1]]:.3f} intersect"
        )
        return ValidationReport(decay_ok, derivatives_ok, False, details)
    return ValidationReport(decay_ok, derivatives_ok, True, details)


def _segments_intersect_pairwise(p: np.ndarray, q: np.ndarray):
    """First properly intersecting pair among segments p[i]-q[i], or None.

    Strict orientation tests: touching endpoints and collinear overlap do
    not count, which is the right notion for detecting tube fold-over.
    """
    n = p.shape[0]
    chunk = 256
    for i0 in range(0, n, chunk):
        i1 = min(i0 + chunk, n)
        a = p[i0:i1, None, :]   # (ci, 1, 2)
        b = q[i0:i1, None, :]
        c = p[None, :, :]       # (1, n, 2)
        d = q[None, :, :]

        def cross(u, v):
            return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

        d1 = cross(d - c, a - c)
        d2 = cross(d - c, b - c)
        d3 = cross(b - a, c - a)
        d4 = cross(b - a, d - a)
        inter = (d1 * d2 < 0) & (d3 * d4 < 0)
        # only pairs with j > i + 1 (adjacent fibers share no interior point
        # for admissible widths; exclude them to avoid roundoff artifacts)
        ii = np.arange(i0, i1)[:, None]
        jj = np.arange(n)[None, :]
        inter &= jj > ii + 1
        if inter.any():
            w = np.argwhere(inter)[0]
            return (int(w[0] + i0), int(w[1]))
    return None


def curvature_from_parametrization(gamma_samples: np.ndarray,
                                   arclength_tol: float = 1e-6,
                                   tail_bound: float = 1e-8,
                                   name: str = "curve") -> CurveProfile:
    """Curvature profile from (s, x, y) samples of an arc-length curve.

    The tangent and second derivative come from 5-point stencils; the
    curvature is the projection of the second derivative on the normal.

    Raises
    ------
    ValueError
        If the s-grid is not uniform, there are fewer than 7 samples, or
        ``|gamma'|`` deviates from 1 beyond ``arclength_tol``.
    """
    arr = np.asarray(gamma_samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 7:
        raise ValueError("expected at least 7 rows of (s, x, y)")
    s, x, y = arr[:, 0], arr[:, 1], arr[:, 2]
    h = s[1] - s[0]
    if h <= 0 or not np.allclose(np.diff(s), h, rtol=0.0,
                                 atol=1e-9 * max(abs(h), 1.0)):
        raise ValueError("samples must lie on a uniform s-grid")

    xp = _stencil_derivative(x, h, 1)
    yp = _stencil_derivative(y, h, 1)
    speed = np.hypot(xp, yp)
    # edge stencils are lower order; enforce the arc-length contract on the
    # interior where the declared accuracy holds
    if np.max(np.abs(speed[2:-2] - 1.0)) > arclength_tol:
        raise ValueError(
            "not arc-length: |gamma'| deviates from 1 beyond tolerance"
        )
    xpp = _stencil_derivative(x, h, 2)
    ypp = _stencil_derivative(y, h, 2)
    # nu = tangent rotated by +pi/2 = (-y', x')
    kappa = xpp * (-yp) + ypp * xp
    return profile_from_samples(s, kappa, tail_bound=tail_bound, name=name)


# ---------------------------------------------------------------------------
# file interfaces: "s x y" curve files, "s kappa" profile files
# ---------------------------------------------------------------------------

def read_curve_file(path) -> np.ndarray:
    """Load (s, x, y) rows from a whitespace-delimited text file."""
    arr = np.loadtxt(path, comments="#", ndmin=2)
    if arr.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns 's x y'")
    return arr


def read_profile_file(path) -> CurveProfile:
    """Load a sampled curvature profile from 's kappa' rows."""
    arr = np.loadtxt(path, comments="#", ndmin=2)
    if arr.shape[1] != 2:
        raise ValueError(f"{path}: expected 2 columns 's kappa'")
    return profile_from_samples(arr[:, 0], arr[:, 1], name=str(path))
