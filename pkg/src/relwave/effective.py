"""The effective 1-d Schrodinger operator of the thin waveguide.

In the thin-width limit the eigenvalue splitting of the waveguide is
driven by the scalar operator ``-d^2/ds^2 - kappa(s)^2/pi^2`` on the
line.  This module discretizes its quadratic form (Dirichlet truncation
to [-L, L]), counts the bound states J, cross-checks the ground state
with an independent shooting integration, and provides the vector-valued
gauged twin of the form together with the unitary gauge map that
identifies the two spectra.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .eigensolve import lowest_eigenpairs
from .forms import DiscretizedForm
from .geometry import CurveProfile, curvature_primitive

__all__ = [
    "Grid1D",
    "EffectiveSpectrum",
    "assemble_qe",
    "effective_spectrum",
    "shooting_mu1",
    "assemble_qe_tilde",
    "gauge_transform",
    "link_gauge_phases",
    "psi_theta_witness",
    "qe_pair_value",
    "qe_tilde_value",
    "gauge_transform_callable",
    "composite_gauss",
]


@dataclass(frozen=True)
class Grid1D:
    """Uniform Dirichlet grid on [-L, L] with n interior nodes."""

    half_length: float
    n: int
    bc: str = "dirichlet"

    def __post_init__(self):
        if self.half_length <= 0 or self.n < 2:
            raise ValueError("need positive half-length and at least 2 nodes")
        if self.bc != "dirichlet":
            raise ValueError("only Dirichlet truncation is supported")

    @property
    def h(self) -> float:
        return 2.0 * self.half_length / (self.n + 1)

    def nodes(self) -> np.ndarray:
        return -self.half_length + self.h * np.arange(1, self.n + 1)

    def midpoints(self) -> np.ndarray:
        return -self.half_length + self.h * (np.arange(self.n + 1) + 0.5)


@dataclass
class EffectiveSpectrum:
    """Lowest min-max values of the effective operator.

    ``J`` counts the strictly negative values (below -tol_zero); the pair
    (mu[J-1], mu[J]) around the zero threshold is kept in ``details`` to
    flag borderline classifications.
    """

    mu: np.ndarray
    J: int
    residuals: np.ndarray
    provenance: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["j", "mu_j", "residual"])
            for j, (mu, r) in enumerate(zip(self.mu, self.residuals), start=1):
                writer.writerow([j, f"{mu:.16e}", f"{r:.3e}"])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({
                "mu": self.mu.tolist(),
                "J": self.J,
                "residuals": self.residuals.tolist(),
                "provenance": self.provenance,
                "details": self.details,
            }, fh, indent=2)


def _potential(profile: CurveProfile, s: np.ndarray) -> np.ndarray:
    return profile.kappa(s) ** 2 / math.pi**2


def assemble_qe(profile: CurveProfile, grid: Grid1D) -> DiscretizedForm:
    """Stiffness/mass pencil of the scalar effective form.

    The stiffness is h times the central-difference operator (Laplacian
    minus the curvature-induced potential on the diagonal), the mass is
    h times the identity, so the pencil's eigenvalues are the operator's.
    A too-short truncation (curvature tail above the profile's declared
    bound at the endpoints) is recorded as a provenance warning.
    """
    h = grid.h
    s = grid.nodes()
    V = _potential(profile, s)
    main = h * (2.0 / h**2 - V)
    offd = h * np.full(grid.n - 1, -1.0 / h**2)
    A = sp.diags([offd, main, offd], [-1, 0, 1], format="csr")
    B = sp.identity(grid.n, format="csr") * h
    warnings = []
    edge = max(abs(float(profile.kappa(grid.half_length))),
               abs(float(profile.kappa(-grid.half_length))))
    if edge > profile.tail_bound:
        warnings.append(
            f"curvature tail {edge:.2e} at |s| = {grid.half_length} exceeds "
            f"the declared bound {profile.tail_bound:.1e}"
        )
    pot_max = float(np.max(V)) if grid.n else 0.0
    return DiscretizedForm(
        stiffness=A, mass=B,
        dof_map={"kind": "scalar-1d", "n": grid.n, "h": h,
                 "half_length": grid.half_length},
        provenance={"form": "qe", "profile": profile.name,
                    "L": grid.half_length, "n": grid.n,
                    "pot_max": pot_max,
                    "suggested_sigma": -1.1 * pot_max - 1e-3,
                    "warnings": warnings},
    )


def effective_spectrum(form: DiscretizedForm, n_ev: int, tol: float = 1e-10,
                       tol_zero: float = 1e-10, seed: int = 0) -> EffectiveSpectrum:
    """Lowest eigenvalues of the effective form and the bound-state count."""
    if n_ev < 1:
        raise ValueError("n_ev must be >= 1")
    res = lowest_eigenpairs(form, n_ev, tol=tol, seed=seed)
    mu = res.eigenvalues
    J = int(np.sum(mu < -tol_zero))
    details = {"tol_zero": tol_zero}
    if 0 < J < mu.size:
        details["mu_J"] = float(mu[J - 1])
        details["mu_J_plus_1"] = float(mu[J])
    return EffectiveSpectrum(mu=mu, J=J, residuals=res.residuals,
                             provenance=dict(form.provenance), details=details)


def shooting_mu1(profile: CurveProfile, bracket=None, half_length: float = 40.0,
                 rtol: float = 1e-11) -> float:
    """Ground state of the effective operator by two-sided shooting.

    Integrates ``-f'' - (kappa^2/pi^2) f = mu f`` from both Dirichlet
    endpoints and matches logarithmic derivatives at s = 0; the matching
    Wronskian changes sign at an eigenvalue.  Independent of the
    finite-difference route: same truncation, different discretization.
    """
    pot_max = profile.sup_kappa**2 / math.pi**2
    if bracket is None:
        bracket = (-pot_max, -1e-12)
    lo, hi = bracket
    if not (lo < hi < 0.0):
        raise ValueError("bracket must satisfy lo < hi < 0")
    L = half_length

    def wronskian(mu: float) -> float:
        def rhs(s, y):
            return [y[1], -(mu + _potential(profile, np.asarray(s))) * y[0]]

        left = solve_ivp(rhs, [-L, 0.0], [0.0, 1.0], method="DOP853",
                         rtol=rtol, atol=1e-300)
        right = solve_ivp(rhs, [L, 0.0], [0.0, -1.0], method="DOP853",
                          rtol=rtol, atol=1e-300)
        fl, dfl = left.y[0, -1], left.y[1, -1]
        fr, dfr = right.y[0, -1], right.y[1, -1]
        return dfl * fr - dfr * fl

    wlo, whi = wronskian(lo), wronskian(hi)
    if wlo * whi > 0:
        raise ValueError("no bound state in bracket")
    return float(brentq(wronskian, lo, hi, xtol=1e-14, rtol=8.9e-16))


# ---------------------------------------------------------------------------
# gauged vector form
# ---------------------------------------------------------------------------

def link_gauge_phases(profile: CurveProfile, grid: Grid1D) -> np.ndarray:
    """Nodal gauge angles accumulated from per-cell curvature increments.

    The increment over a cell is h*kappa(midpoint)/pi; accumulating these
    keeps the discrete covariant derivative exactly gauge-covariant, so
    the gauged pencil is exactly unitarily equivalent to two decoupled
    scalar pencils.
    """
    alpha = grid.h * profile.kappa(grid.midpoints()) / math.pi
    return np.cumsum(alpha[:-1])


def assemble_qe_tilde(profile: CurveProfile, grid: Grid1D) -> DiscretizedForm:
    """Pencil of the vector-valued gauged form on 2-spinor grid functions.

    The first-order covariant difference carries the per-cell phase
    increment h*kappa(mid)/pi with opposite signs on the two components;
    the curvature potential sits on the diagonal.  DOF layout is
    node-major: (node 0, comp 1), (node 0, comp 2), (node 1, comp 1), ...
    """
    h = grid.h
    n = grid.n
    s = grid.nodes()
    V = _potential(profile, s)
    alpha = h * profile.kappa(grid.midpoints()) / math.pi   # (n+1,)

    N = 2 * n
    rows, cols, vals = [], [], []

    node = np.arange(n)
    for c, sgn in ((0, 1.0), (1, -1.0)):
        d = 2 * node + c
        # gradient diagonal: every node touches its two cells
        rows.append(d); cols.append(d)
        vals.append(np.full(n, 2.0 / h) + h * (-V))
        # covariant off-diagonal over interior cells 1..n-1
        link = -np.exp(1j * sgn * alpha[1:n]) / h
        rows.append(d[:-1]); cols.append(d[1:] + 0); vals.append(np.conj(link))
        rows.append(d[1:]); cols.append(d[:-1]); vals.append(link)

    A = sp.csr_matrix(
        (np.concatenate([np.asarray(v, dtype=complex) for v in vals]),
         (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    B = sp.identity(N, format="csr") * h
    pot_max = float(np.max(V)) if n else 0.0
    return DiscretizedForm(
        stiffness=A, mass=B,
        dof_map={"kind": "spinor-1d", "n": n, "h": h,
                 "half_length": grid.half_length, "layout": "node-major"},
        provenance={"form": "qe_tilde", "profile": profile.name,
                    "L": grid.half_length, "n": grid.n,
                    "pot_max": pot_max,
                    "suggested_sigma": -1.1 * pot_max - 1e-3},
    )


def gauge_transform(profile: CurveProfile, grid: Grid1D, f: np.ndarray,
                    phases: np.ndarray | None = None) -> np.ndarray:
    """Apply the diagonal unitary ``exp(i*theta(s)*sigma3)`` nodewise.

    ``f`` has shape (n, 2).  By default theta is the curvature primitive
    divided by pi; pass ``phases`` (e.g. from :func:`link_gauge_phases`)
    to use the discretely covariant convention instead.  Either way the
    map preserves the mass norm exactly.
    """
    f = np.asarray(f, dtype=complex)
    if f.shape != (grid.n, 2):
        raise ValueError(f"expected grid function of shape ({grid.n}, 2)")
    if phases is None:
        theta = np.asarray(curvature_primitive(profile, grid.nodes())) / math.pi
    else:
        theta = np.asarray(phases, dtype=float)
    out = np.empty_like(f)
    out[:, 0] = np.exp(1j * theta) * f[:, 0]
    out[:, 1] = np.exp(-1j * theta) * f[:, 1]
    return out


# ---------------------------------------------------------------------------
# continuum (quadrature) form values
# ---------------------------------------------------------------------------

def composite_gauss(f, lo: float, hi: float, panel: float = 0.25,
                    order: int = 16) -> float:
    """Composite Gauss rule with fixed panel width; f is vectorized."""
    x, w = np.polynomial.legendre.leggauss(order)
    npan = max(1, int(math.ceil((hi - lo) / panel)))
    edges = np.linspace(lo, hi, npan + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    nodes = mids[:, None] + halfs[:, None] * x[None, :]
    return float(np.sum(halfs[:, None] * w[None, :] * f(nodes)))


def qe_pair_value(profile: CurveProfile, f, df, support) -> float:
    """Quadrature value of the scalar effective form, summed over the
    components of a (possibly vector-valued) function.

    ``f`` and ``df`` map an array of shape (...,) to (..., k).
    """
    lo, hi = support

    def integrand(s):
        v = f(s)
        dv = df(s)
        dens = np.sum(np.abs(dv) ** 2, axis=-1) \
            - _potential(profile, s) * np.sum(np.abs(v) ** 2, axis=-1)
        return dens

    return composite_gauss(integrand, lo, hi)


def qe_tilde_value(profile: CurveProfile, g, dg, support) -> float:
    """Quadrature value of the gauged vector form for a 2-spinor g."""
    lo, hi = support

    def integrand(s):
        v = g(s)
        dv = dg(s)
        kap = profile.kappa(s) / math.pi
        c0 = dv[..., 0] - 1j * kap * v[..., 0]
        c1 = dv[..., 1] + 1j * kap * v[..., 1]
        return (np.abs(c0) ** 2 + np.abs(c1) ** 2
                - kap**2 * (np.abs(v[..., 0]) ** 2 + np.abs(v[..., 1]) ** 2))

    return composite_gauss(integrand, lo, hi)


def gauge_transform_callable(profile: CurveProfile, f, df):
    """Gauged function and derivative, as callables.

    Returns (g, dg) with ``g = exp(i*theta*sigma3) f`` and theta the
    curvature primitive over pi, evaluated by quadrature at the requested
    points.  The derivative picks up the covariant phase term.
    """

    def theta_of(s):
        s = np.asarray(s, dtype=float)
        th = np.asarray(curvature_primitive(profile, s.ravel())) / math.pi
        return th.reshape(s.shape)

    def g(s):
        v = np.asarray(f(s), dtype=complex)
        th = theta_of(s)
        out = np.empty_like(v)
        out[..., 0] = np.exp(1j * th) * v[..., 0]
        out[..., 1] = np.exp(-1j * th) * v[..., 1]
        return out

    def dg(s):
        v = np.asarray(f(s), dtype=complex)
        dv = np.asarray(df(s), dtype=complex)
        th = theta_of(s)
        kap = profile.kappa(s) / math.pi
        out = np.empty_like(v)
        out[..., 0] = np.exp(1j * th) * (dv[..., 0] + 1j * kap * v[..., 0])
        out[..., 1] = np.exp(-1j * th) * (dv[..., 1] - 1j * kap * v[..., 1])
        return out

    return g, dg


def psi_theta_witness(profile: CurveProfile, theta: float,
                      half_length: float = 40.0) -> float:
    """Form value of the plateau-ramp trial function of width theta.

    The trial function is 1 on [-theta, theta], ramps linearly to zero at
    +-2*theta, and vanishes outside; its form value is
    ``2/theta - (1/pi^2) * integral(kappa^2 |psi|^2)``, which certifies a
    bound state once it is negative.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if theta >= half_length / 2.0:
        raise ValueError("theta must be below half the truncation length")

    def k2(s):
        return profile.kappa(s) ** 2

    mid, _ = quad(k2, -theta, theta, epsabs=1e-13, epsrel=1e-13, limit=400)
    left, _ = quad(lambda s: k2(s) * ((s + 2 * theta) / theta) ** 2,
                   -2 * theta, -theta, epsabs=1e-13, epsrel=1e-13, limit=400)
    right, _ = quad(lambda s: k2(s) * ((s - 2 * theta) / theta) ** 2,
                    theta, 2 * theta, epsabs=1e-13, epsrel=1e-13, limit=400)
    return 2.0 / theta - (mid + left + right) / math.pi**2
