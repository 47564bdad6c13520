"""Spectrum of the transverse confinement operator of the waveguide.

On the reference cross-section (-1, 1) the relevant operator is the 1-d
Dirac operator ``-i*sigma2*d/dt + m*sigma3`` with the infinite-mass
boundary condition ``u2(+-1) = -+u1(+-1)``.  Its eigenvalues come in pairs
``+-E_p(m)`` with ``E_p = sqrt(m**2 + k_p**2)``, where the wavenumber
``k_p(m)`` is the unique root of

    m*sin(2k) + k*cos(2k) = 0

in the bracket ``[(2p-1)*pi/4, p*pi/2]``.  The normalized eigenfunctions
are explicit trigonometric 2-spinors; everything else in this module
(projectors, matrix elements, the squared-operator identity) is quadrature
on top of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SIGMA1",
    "SIGMA2",
    "SIGMA3",
    "TransverseMode",
    "dispersion",
    "transverse_root",
    "k1_series",
    "transverse_energy",
    "essential_threshold",
    "sigma3_matrix_elements",
    "transverse_form_identity_check",
    "project_pi_delta",
    "gauss_legendre_adaptive",
]

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

_GL_CACHE: dict = {}


def _gl_rule(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def gauss_legendre_adaptive(f, a: float = -1.0, b: float = 1.0,
                            n0: int = 64, tol: float = 1e-12,
                            max_doublings: int = 6) -> float:
    """Integrate ``f`` on [a, b], doubling the Gauss order until two
    successive values agree to ``tol`` (absolute+relative)."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    n = n0
    x, w = _gl_rule(n)
    prev = half * np.dot(w, f(mid + half * x))
    for _ in range(max_doublings):
        n *= 2
        x, w = _gl_rule(n)
        cur = half * np.dot(w, f(mid + half * x))
        if abs(cur - prev) <= tol * (1.0 + abs(cur)):
            return float(cur)
        prev = cur
    return float(prev)


def dispersion(k, m: float):
    """Transverse quantization relation; zero exactly at the mode roots."""
    return m * np.sin(2.0 * k) + k * np.cos(2.0 * k)


def _dispersion_deriv(k, m: float):
    return 2.0 * m * np.cos(2.0 * k) + np.cos(2.0 * k) - 2.0 * k * np.sin(2.0 * k)


def transverse_root(p: int, m: float) -> float:
    """Wavenumber k_p(m): bisection to 1e-10 then Newton polish.

    For m = 0 the root sits exactly at the left bracket endpoint
    (2p-1)*pi/4, which is returned without iteration.
    """
    if p < 1 or int(p) != p:
        raise ValueError("mode index p must be a positive integer")
    if not (m >= 0.0 and math.isfinite(m)):
        raise ValueError("mass must be finite and nonnegative")
    lo = (2 * p - 1) * math.pi / 4.0
    hi = p * math.pi / 2.0
    if m == 0.0:
        return lo
    flo, fhi = dispersion(lo, m), dispersion(hi, m)
    if flo == 0.0:
        return lo
    if flo * fhi > 0.0:
        raise RuntimeError(
            f"no sign change on bracket for p={p}, m={m}: "
            f"f({lo})={flo}, f({hi})={fhi}"
        )
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        fmid = dispersion(mid, m)
        if fmid == 0.0:
            lo = hi = mid
            break
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    k = 0.5 * (lo + hi)
    for _ in range(5):
        dk = dispersion(k, m) / _dispersion_deriv(k, m)
        k -= dk
        if abs(dk) < 1e-15 * k:
            break
    return float(k)


def k1_series(m: float) -> float:
    """Second-order small-mass expansion of the first wavenumber.

    Documented validity m <= 0.3; the remainder is cubic in m.
    """
    return math.pi / 4.0 + 2.0 * m / math.pi - 16.0 * m**2 / math.pi**3


def transverse_energy(p: int, m: float) -> float:
    """Mode energy E_p(m) = sqrt(m**2 + k_p(m)**2)."""
    return math.hypot(m, transverse_root(p, m))


def essential_threshold(m: float, eps: float) -> float:
    """Edge E_1(m*eps)/eps of the essential spectrum at half-width eps."""
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    return transverse_energy(1, m * eps) / eps


@dataclass(frozen=True)
class TransverseMode:
    """One normalized transverse eigenspinor.

    ``sign=+1`` is the mode with energy ``+E_p``; ``sign=-1`` is its
    component-swapped partner with energy ``-E_p``.
    """

    p: int
    m: float
    k: float
    energy: float
    normalization: float
    sign: int = +1

    @classmethod
    def compute(cls, p: int, m: float, sign: int = +1) -> "TransverseMode":
        if sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")
        k = transverse_root(p, m)
        E = math.hypot(m, k)

        def density(t):
            tau = k * (t + 1.0)
            u1 = k * np.cos(tau) + (E + m) * np.sin(tau)
            u2 = k * np.cos(tau) - (E - m) * np.sin(tau)
            return u1 * u1 + u2 * u2

        norm_sq = gauss_legendre_adaptive(density)
        return cls(p=p, m=m, k=k, energy=E,
                   normalization=1.0 / math.sqrt(norm_sq), sign=sign)

    def eval(self, t):
        """Spinor value(s) at t in [-1, 1]; complex array (..., 2)."""
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > 1.0 + 1e-14):
            raise ValueError("|t| <= 1 required")
        tau = self.k * (t + 1.0)
        u1 = self.k * np.cos(tau) + (self.energy + self.m) * np.sin(tau)
        u2 = self.k * np.cos(tau) - (self.energy - self.m) * np.sin(tau)
        out = self.normalization * np.stack([u1, u2], axis=-1).astype(complex)
        if self.sign < 0:
            out = out[..., ::-1]
        return out

    def eval_deriv(self, t):
        """d/dt of the spinor; same shape conventions as :meth:`eval`."""
        t = np.asarray(t, dtype=float)
        tau = self.k * (t + 1.0)
        du1 = -self.k**2 * np.sin(tau) + self.k * (self.energy + self.m) * np.cos(tau)
        du2 = -self.k**2 * np.sin(tau) - self.k * (self.energy - self.m) * np.cos(tau)
        out = self.normalization * np.stack([du1, du2], axis=-1).astype(complex)
        if self.sign < 0:
            out = out[..., ::-1]
        return out

    def to_record(self) -> dict:
        return {"p": self.p, "m": self.m, "k": self.k,
                "E": self.energy, "N": self.normalization,
                "sign": "+" if self.sign > 0 else "-"}

    @classmethod
    def from_record(cls, rec: dict) -> "TransverseMode":
        return cls(p=int(rec["p"]), m=float(rec["m"]), k=float(rec["k"]),
                   energy=float(rec["E"]), normalization=float(rec["N"]),
                   sign=+1 if rec["sign"] == "+" else -1)


def sigma3_matrix_elements(m: float) -> np.ndarray:
    """2x2 matrix of sigma3 between the two first-band modes.

    Entry (a, b) is the cross-section integral of ``phi_a^dagger sigma3
    phi_b`` with a, b running over the (+, -) pair of the p = 1 modes.  At
    m = 0 the diagonal is (+2/pi, -2/pi) and the off-diagonal vanishes.
    """
    if m < 0:
        raise ValueError("mass must be nonnegative")
    plus = TransverseMode.compute(1, m, +1)
    minus = TransverseMode.compute(1, m, -1)
    pair = (plus, minus)
    out = np.zeros((2, 2), dtype=complex)
    for i, ma in enumerate(pair):
        for j, mb in enumerate(pair):
            def integrand(t, ma=ma, mb=mb):
                va = ma.eval(t)
                vb = mb.eval(t)
                return np.real(np.conj(va[..., 0]) * vb[..., 0]
                               - np.conj(va[..., 1]) * vb[..., 1])
            out[i, j] = gauss_legendre_adaptive(integrand)
    return out


def transverse_form_identity_check(u, du, m: float,
                                   bc_tol: float = 1e-8) -> float:
    """Residual of the squared-operator identity for a spinor u on (-1, 1).

    The squared norm of ``(-i*sigma2 d/dt + m*sigma3) u`` must equal
    ``||u'||^2 + m^2 ||u||^2 + m(|u(1)|^2 + |u(-1)|^2)`` whenever u
    satisfies the infinite-mass boundary condition.  ``u`` and ``du`` are
    callables returning arrays of shape (..., 2).

    Raises
    ------
    ValueError
        If u violates the boundary condition beyond ``bc_tol``.
    """
    scale = float(np.max(np.abs(u(np.array([-1.0, 0.0, 1.0]))))) or 1.0
    top = u(np.array(1.0))
    bot = u(np.array(-1.0))
    if abs(top[1] + top[0]) > bc_tol * scale or abs(bot[1] - bot[0]) > bc_tol * scale:
        raise ValueError("u violates the boundary condition u2(+-1) = -+u1(+-1)")

    def lhs(t):
        v = u(t)
        dv = du(t)
        a1 = -dv[..., 1] + m * v[..., 0]
        a2 = dv[..., 0] - m * v[..., 1]
        return np.abs(a1) ** 2 + np.abs(a2) ** 2

    def rhs_bulk(t):
        v = u(t)
        dv = du(t)
        return (np.abs(dv[..., 0]) ** 2 + np.abs(dv[..., 1]) ** 2
                + m**2 * (np.abs(v[..., 0]) ** 2 + np.abs(v[..., 1]) ** 2))

    left = gauss_legendre_adaptive(lhs)
    right = gauss_legendre_adaptive(rhs_bulk) + m * (
        float(np.sum(np.abs(top) ** 2)) + float(np.sum(np.abs(bot) ** 2)))
    return abs(left - right)


def project_pi_delta(u, delta: float):
    """Coefficients of u on the first-band pair at mass ``delta``.

    Returns ``(c_plus, c_minus)`` with ``c_a`` the cross-section inner
    product of the mode ``phi_a`` with u.  The reconstruction
    ``c_plus*phi_plus + c_minus*phi_minus`` is the rank-two spectral
    projection of u.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    plus = TransverseMode.compute(1, delta, +1)
    minus = TransverseMode.compute(1, delta, -1)

    coeffs = []
    for mode in (plus, minus):
        def re_part(t, mode=mode):
            v = mode.eval(t)
            w = u(t)
            return np.real(np.conj(v[..., 0]) * w[..., 0]
                           + np.conj(v[..., 1]) * w[..., 1])

        def im_part(t, mode=mode):
            v = mode.eval(t)
            w = u(t)
            return np.imag(np.conj(v[..., 0]) * w[..., 0]
                           + np.conj(v[..., 1]) * w[..., 1])

        coeffs.append(gauss_legendre_adaptive(re_part)
                      + 1j * gauss_legendre_adaptive(im_part))
    return coeffs[0], coeffs[1]
