"""Quadratic form of the squared waveguide operator on the strip.

The waveguide operator is unitarily equivalent to a first-order operator
on the flat strip R x (-1, 1) with a curvature-dependent metric factor
``1 - eps*t*kappa(s)``.  Discretizing the first-order operator invites
spectral pollution, so this module assembles the quadratic form of its
SQUARE, which is nonnegative and safe for Rayleigh-Ritz:

* a weighted covariant s-derivative term (weight ``1/(1-eps*t*kappa)^2``),
* the exact transverse energy ``(1/eps^2)||T(m*eps) u||^2`` (t-derivative,
  boundary traces, and mass term combined),
* three curvature potential corrections (kappa^2, kappa'^2, kappa'').

Two interchangeable backends discretize it: a transverse-mode Galerkin
expansion (spectral in t, finite differences in s) and a tensor-product
finite-difference grid with the infinite-mass boundary condition imposed
by elimination.  The sandwich forms bracket the squared form between two
curvature-free comparison forms at distance O(eps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .forms import DiscretizedForm
from .geometry import CurveProfile, epsilon0
from .transverse import TransverseMode, transverse_energy

__all__ = [
    "StripDiscretization",
    "assemble_fqunit",
    "assemble_a_pm",
    "estimate_sandwich_constant",
    "sandwich_constant_breakdown",
]


@dataclass(frozen=True)
class StripDiscretization:
    """Discretization plan for the strip forms.

    ``backend='galerkin'`` expands in ``n_modes`` transverse eigenspinor
    pairs at mass ``m*epsilon`` (2*n_modes spinor channels); ``'tensor'``
    uses ``n_t`` uniform transverse intervals with endpoint nodes.  The
    s-direction is always a uniform Dirichlet grid on [-L, L] with ``n_s``
    interior nodes.
    """

    epsilon: float
    m: float = 0.0
    half_length: float = 40.0
    n_s: int = 800
    backend: str = "galerkin"
    n_modes: int = 6
    n_t: int = 48
    t_quad: int = 64

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.m < 0:
            raise ValueError("mass must be nonnegative")
        if self.backend not in ("galerkin", "tensor"):
            raise ValueError("backend must be 'galerkin' or 'tensor'")
        if self.backend == "galerkin" and not (1 <= self.n_modes <= 32):
            raise ValueError("n_modes must be between 1 and 32")
        if self.backend == "tensor" and self.n_t < 8:
            raise ValueError("n_t must be at least 8")
        if self.n_s < 4 or self.half_length <= 0:
            raise ValueError("need n_s >= 4 interior nodes on a positive window")

    @property
    def h_s(self) -> float:
        return 2.0 * self.half_length / (self.n_s + 1)

    def s_nodes(self) -> np.ndarray:
        return -self.half_length + self.h_s * np.arange(1, self.n_s + 1)

    def s_midpoints(self) -> np.ndarray:
        return -self.half_length + self.h_s * (np.arange(self.n_s + 1) + 0.5)


def _check_metric(profile: CurveProfile, eps: float) -> None:
    if 1.0 - eps * profile.sup_kappa <= 0.0:
        raise ValueError("1 - eps*t*kappa <= 0 on grid")


def _suggested_sigma(m: float, eps: float) -> float:
    thr = transverse_energy(1, m * eps) / eps
    # just below the bound-state cluster under the essential edge; keeps the
    # shift-inverted spectrum well separated at every sweep width
    return thr**2 - 2.0


# ---------------------------------------------------------------------------
# transverse-mode Galerkin backend
# ---------------------------------------------------------------------------

def _mode_tables(disc: StripDiscretization):
    """Mode values at the Gauss nodes of (-1, 1) plus energies.

    Returns (tq, wq, phi, energies) with phi of shape (2P, 2, n_q); the
    channel order is (p=1,+), (p=1,-), (p=2,+), ...
    """
    tq, wq = np.polynomial.legendre.leggauss(disc.t_quad)
    delta = disc.m * disc.epsilon
    nA = 2 * disc.n_modes
    phi = np.empty((nA, 2, disc.t_quad))
    energies = np.empty(nA)
    for p in range(1, disc.n_modes + 1):
        plus = TransverseMode.compute(p, delta, +1)
        vals = plus.eval(tq)            # (n_q, 2) complex with zero imag
        phi[2 * p - 2, 0] = vals[:, 0].real
        phi[2 * p - 2, 1] = vals[:, 1].real
        phi[2 * p - 1, 0] = vals[:, 1].real   # sigma1-partner
        phi[2 * p - 1, 1] = vals[:, 0].real
        energies[2 * p - 2] = plus.energy
        energies[2 * p - 1] = plus.energy
    return tq, wq, phi, energies


def _block_csr(diag: np.ndarray, off: np.ndarray, nA: int) -> sp.csr_matrix:
    """Hermitian block-tridiagonal CSR from (n,nA,nA) diag and (n-1,nA,nA)
    upper off-diagonal blocks."""
    n = diag.shape[0]
    ii, jj = np.meshgrid(np.arange(nA), np.arange(nA), indexing="ij")
    base = nA * np.arange(n)[:, None, None]
    rows = [(base + ii[None]).ravel()]
    cols = [(base + jj[None]).ravel()]
    vals = [diag.ravel()]
    if n > 1:
        base_u = nA * np.arange(n - 1)[:, None, None]
        rows.append((base_u + ii[None]).ravel())
        cols.append((base_u + nA + jj[None]).ravel())
        vals.append(off.ravel())
        rows.append((base_u + nA + ii[None]).ravel())
        cols.append((base_u + jj[None]).ravel())
        vals.append(np.conj(np.swapaxes(off, 1, 2)).ravel())
    N = n * nA
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(N, N))


def _assemble_galerkin(profile: CurveProfile, disc: StripDiscretization,
                       weighted: bool, prefactor: float,
                       extra_diag: float, with_curvature_potentials: bool,
                       tag: str) -> DiscretizedForm:
    """Shared assembly of the squared form and the sandwich forms.

    ``weighted=True`` uses the metric weights of the squared form;
    ``False`` uses flat weights (the sandwich forms).  ``prefactor``
    multiplies the covariant-gradient/potential part, ``extra_diag`` adds
    a multiple of the mass to the stiffness.
    """
    eps, m = disc.epsilon, disc.m
    _check_metric(profile, eps)
    tq, wq, phi, energies = _mode_tables(disc)
    nA = 2 * disc.n_modes
    h = disc.h_s
    s_n = disc.s_nodes()
    s_m = disc.s_midpoints()
    kap_n = profile.kappa(s_n)
    kap_m = profile.kappa(s_m)

    # pointwise channel products at the quadrature nodes
    PP = np.einsum("acq,bcq->abq", phi, phi)
    S3 = np.einsum("acq,c,bcq->abq", phi, np.array([1.0, -1.0]), phi)

    def tmats(kap, powers):
        base = 1.0 / (1.0 - eps * np.outer(kap, tq))
        out = {}
        for key, (pw, extra) in powers.items():
            out[key] = np.einsum("sq,abq,q->sab", base**pw,
                                 S3 if key == "S2" else PP, wq * extra)
        return out

    if weighted:
        mats_m = tmats(kap_m, {"W2": (2, 1.0), "S2": (2, 1.0)})
        mats_n = tmats(kap_n, {"W2": (2, 1.0), "W3t": (3, tq), "W4t2": (4, tq**2)})
        W2m, S2m = mats_m["W2"], mats_m["S2"]
        W2n, W3n, W4n = mats_n["W2"], mats_n["W3t"], mats_n["W4t2"]
    else:
        eye = np.eye(nA)
        S0 = np.einsum("abq,q->ab", S3, wq)
        W2m = np.broadcast_to(eye, (disc.n_s + 1, nA, nA))
        S2m = np.broadcast_to(S0, (disc.n_s + 1, nA, nA))
        W2n = np.broadcast_to(eye, (disc.n_s, nA, nA))
        W3n = W4n = np.zeros((disc.n_s, nA, nA))

    kp_n = profile.kappa_prime(s_n)
    kpp_n = profile.kappa_double_prime(s_n)

    diag = np.zeros((disc.n_s, nA, nA), dtype=complex)
    transverse = np.diag(energies**2 / eps**2)
    diag += h * transverse[None, :, :]
    pot = -prefactor * (kap_n**2 / 4.0)[:, None, None] * W2n
    if with_curvature_potentials:
        pot = pot - 1.25 * ((eps * kp_n) ** 2)[:, None, None] * W4n \
                  - 0.5 * (eps * kpp_n)[:, None, None] * W3n
    diag += h * pot
    if extra_diag:
        diag += h * extra_diag * np.eye(nA)[None, :, :]

    # covariant s-derivative over the n_s + 1 cells (Dirichlet clamps the
    # outermost nodes): gradient, midpoint-average square, sigma3 cross term
    G = prefactor * W2m / h
    Q = prefactor * h * (kap_m**2 / 16.0)[:, None, None] * W2m
    X = prefactor * (0.5j) * kap_m[:, None, None] * S2m
    diag += (G + Q)[: disc.n_s]
    diag += (G + Q)[1:]
    off = (-G + Q + X)[1: disc.n_s].astype(complex)

    A = _block_csr(diag, off, nA)
    B = sp.identity(disc.n_s * nA, format="csr") * h
    return DiscretizedForm(
        stiffness=A, mass=B,
        dof_map={"kind": "strip-galerkin", "n_s": disc.n_s, "n_modes": disc.n_modes,
                 "h_s": h, "half_length": disc.half_length,
                 "channels": [(p, sgn) for p in range(1, disc.n_modes + 1)
                              for sgn in ("+", "-")],
                 "layout": "node-major"},
        provenance={"form": tag, "backend": "galerkin", "profile": profile.name,
                    "epsilon": eps, "m": m, "n_s": disc.n_s,
                    "n_modes": disc.n_modes, "half_length": disc.half_length,
                    "t_quad": disc.t_quad,
                    "suggested_sigma": _suggested_sigma(m, eps)},
    )


# ---------------------------------------------------------------------------
# tensor-product finite-difference backend
# ---------------------------------------------------------------------------

def _assemble_tensor(profile: CurveProfile, disc: StripDiscretization,
                     weighted: bool, prefactor: float, extra_diag: float,
                     with_curvature_potentials: bool, tag: str) -> DiscretizedForm:
    eps, m = disc.epsilon, disc.m
    _check_metric(profile, eps)
    h = disc.h_s
    nt = disc.n_t
    ht = 2.0 / nt
    ns = disc.n_s
    s_n = disc.s_nodes()
    s_m = disc.s_midpoints()
    t = -1.0 + ht * np.arange(nt + 1)
    rho = np.full(nt + 1, ht)
    rho[0] = rho[-1] = 0.5 * ht
    nT = nt + 1

    kap_n = profile.kappa(s_n)
    kap_m = profile.kappa(s_m)
    kp_n = profile.kappa_prime(s_n)
    kpp_n = profile.kappa_double_prime(s_n)

    if weighted:
        W2m = 1.0 / (1.0 - eps * np.outer(kap_m, t)) ** 2       # (ns+1, nT)
        W2n = 1.0 / (1.0 - eps * np.outer(kap_n, t)) ** 2
        W3n = 1.0 / (1.0 - eps * np.outer(kap_n, t)) ** 3
        W4n = 1.0 / (1.0 - eps * np.outer(kap_n, t)) ** 4
    else:
        W2m = np.ones((ns + 1, nT))
        W2n = np.ones((ns, nT))
        W3n = W4n = np.zeros((ns, nT))

    def idx(i, j, c):
        return (i * nT + j) * 2 + c

    rows, cols, vals = [], [], []

    def add(r, c_, v):
        rows.append(np.asarray(r).ravel())
        cols.append(np.asarray(c_).ravel())
        vals.append(np.asarray(v, dtype=complex).ravel())

    node_i = np.arange(ns)
    tj = np.arange(nT)

    # --- covariant s-derivative term, per component (sigma3 sign) --------
    for c, sgn in ((0, 1.0), (1, -1.0)):
        wcell = W2m * rho[None, :]                                # (ns+1, nT)
        gw = prefactor * wcell / h
        qw = prefactor * h * wcell * (kap_m**2 / 16.0)[:, None]
        xw = prefactor * 1j * (0.5 * sgn * kap_m)[:, None] * wcell

        # right node of cells 0..ns-1  (node index = cell)
        i_r = np.repeat(node_i, nT)
        j_r = np.tile(tj, ns)
        add(idx(i_r, j_r, c), idx(i_r, j_r, c), (gw + qw)[:ns].ravel())
        # left node of cells 1..ns (node index = cell-1)
        add(idx(i_r, j_r, c), idx(i_r, j_r, c), (gw + qw)[1:].ravel())
        # interior couplings: cells 1..ns-1 join node il=cell-1, ir=cell
        if ns > 1:
            cell = np.arange(1, ns)
            il = np.repeat(cell - 1, nT)
            ir = np.repeat(cell, nT)
            jc = np.tile(tj, ns - 1)
            up = (-gw + qw + xw)[1:ns].ravel()
            add(idx(il, jc, c), idx(ir, jc, c), up)
            add(idx(ir, jc, c), idx(il, jc, c), np.conj(up))

    # --- transverse derivative (1/eps^2) over t-cells ---------------------
    g = h / (ht * eps * eps)
    for c in (0, 1):
        i_all = np.repeat(node_i, nt)
        j_lo = np.tile(np.arange(nt), ns)
        add(idx(i_all, j_lo, c), idx(i_all, j_lo, c), np.full(ns * nt, g))
        add(idx(i_all, j_lo + 1, c), idx(i_all, j_lo + 1, c), np.full(ns * nt, g))
        add(idx(i_all, j_lo, c), idx(i_all, j_lo + 1, c), np.full(ns * nt, -g))
        add(idx(i_all, j_lo + 1, c), idx(i_all, j_lo, c), np.full(ns * nt, -g))

    # --- mass term, potentials, boundary traces ---------------------------
    V = np.full((ns, nT), m * m, dtype=float)
    V -= prefactor * (kap_n**2 / 4.0)[:, None] * W2n
    if with_curvature_potentials:
        V -= 1.25 * ((eps * kp_n) ** 2)[:, None] * (t**2)[None, :] * W4n
        V -= 0.5 * (eps * kpp_n)[:, None] * t[None, :] * W3n
    if extra_diag:
        V += extra_diag
    for c in (0, 1):
        i_all = np.repeat(node_i, nT)
        j_all = np.tile(tj, ns)
        add(idx(i_all, j_all, c), idx(i_all, j_all, c),
            (h * rho[None, :] * V).ravel())
        if m > 0:
            add(idx(node_i, 0, c), idx(node_i, 0, c), np.full(ns, h * m / eps))
            add(idx(node_i, nt, c), idx(node_i, nt, c), np.full(ns, h * m / eps))

    Nfull = ns * nT * 2
    A_full = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(Nfull, Nfull))
    mass_diag = np.tile(np.repeat(h * rho, 2), ns)
    B_full = sp.diags(mass_diag).tocsr()

    # --- eliminate u2 at t = -1 and t = +1 via the boundary condition ----
    keep_mask = np.ones((ns, nT, 2), dtype=bool)
    keep_mask[:, 0, 1] = False
    keep_mask[:, nt, 1] = False
    red_index = -np.ones((ns, nT, 2), dtype=np.int64)
    red_index[keep_mask] = np.arange(keep_mask.sum())
    Nred = int(keep_mask.sum())

    er, ec, ev = [], [], []
    full_flat = np.arange(Nfull).reshape(ns, nT, 2)
    er.append(full_flat[keep_mask])
    ec.append(red_index[keep_mask])
    ev.append(np.ones(Nred))
    # u2(t=-1) = +u1(t=-1); u2(t=+1) = -u1(t=+1)
    er.append(full_flat[:, 0, 1])
    ec.append(red_index[:, 0, 0])
    ev.append(np.ones(ns))
    er.append(full_flat[:, nt, 1])
    ec.append(red_index[:, nt, 0])
    ev.append(-np.ones(ns))
    E = sp.csr_matrix(
        (np.concatenate(ev), (np.concatenate(er), np.concatenate(ec))),
        shape=(Nfull, Nred))

    A = (E.getH() @ A_full @ E).tocsr()
    B = (E.getH() @ B_full @ E).tocsr()
    return DiscretizedForm(
        stiffness=A, mass=B,
        dof_map={"kind": "strip-tensor", "n_s": ns, "n_t": nt, "h_s": h,
                 "h_t": ht, "half_length": disc.half_length,
                 "eliminated": "u2 at t=-1 (+u1) and t=+1 (-u1)",
                 "layout": "s-major, then t, then component"},
        provenance={"form": tag, "backend": "tensor", "profile": profile.name,
                    "epsilon": eps, "m": m, "n_s": ns, "n_t": nt,
                    "half_length": disc.half_length,
                    "suggested_sigma": _suggested_sigma(m, eps)},
    )


# ---------------------------------------------------------------------------
# public assembly entry points
# ---------------------------------------------------------------------------

def assemble_fqunit(profile: CurveProfile, disc: StripDiscretization) -> DiscretizedForm:
    """Squared-operator form with all curvature terms and metric weights."""
    fn = _assemble_galerkin if disc.backend == "galerkin" else _assemble_tensor
    return fn(profile, disc, weighted=True, prefactor=1.0, extra_diag=0.0,
              with_curvature_potentials=True, tag="fqunit")


def assemble_a_pm(profile: CurveProfile, disc: StripDiscretization,
                  c: float, sign: int) -> DiscretizedForm:
    """Sandwich form: flat-weight covariant part scaled by (1 +- c*eps),
    exact transverse energy, and +-c*eps times the mass."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if c < 0:
        raise ValueError("sandwich constant must be nonnegative")
    pref = 1.0 + sign * c * disc.epsilon
    extra = sign * c * disc.epsilon
    fn = _assemble_galerkin if disc.backend == "galerkin" else _assemble_tensor
    form = fn(profile, disc, weighted=False, prefactor=pref, extra_diag=extra,
              with_curvature_potentials=False,
              tag="a_plus" if sign > 0 else "a_minus")
    form.provenance["sandwich_constant"] = c
    form.provenance["sandwich_breakdown"] = sandwich_constant_breakdown(
        profile, disc.epsilon)
    return form


def sandwich_constant_breakdown(profile: CurveProfile, eps: float) -> dict:
    """Sup-norm ingredients of the sandwich constant at half-width eps."""
    delta = eps * profile.sup_kappa
    if delta >= 1.0:
        raise ValueError("eps beyond the fold-over threshold")
    envelope = max(1.0 / (1.0 - delta) ** 2 - 1.0,
                   1.0 - 1.0 / (1.0 + delta) ** 2)
    w3 = 1.0 / (1.0 - delta) ** 3
    w4 = 1.0 / (1.0 - delta) ** 4
    return {
        "delta": delta,
        "weight_envelope": envelope,
        "weight_term": envelope / eps,
        "kappa_prime_term": 1.25 * eps * profile.sup_kappa_prime**2 * w4,
        "kappa_double_prime_term": 0.5 * profile.sup_kappa_double_prime * w3,
    }


def estimate_sandwich_constant(profile: CurveProfile, eps: float) -> float:
    """Explicit comparison constant for the sandwich forms.

    Aggregates sup-norm bounds on the three curvature effects that
    distinguish the squared form from the flat comparison forms: the
    metric-weight envelope ``|1/(1-eps*t*kappa)^2 - 1|`` on the covariant
    part (whose kappa^2/4 piece cancels exactly against the potential
    term), and the kappa' and kappa'' potentials.  The returned value is
    monotone in eps, hence usable as a single constant for every smaller
    half-width; validity is certified a posteriori at matrix level by the
    ordering checks.

    Requires ``eps <= epsilon0(profile)/2``.
    """
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if eps > 0.5 * epsilon0(profile):
        raise ValueError("eps must not exceed half the fold-over threshold")
    if profile.sup_kappa == 0.0:
        return 0.0
    parts = sandwich_constant_breakdown(profile, eps)
    return (parts["weight_term"] + parts["kappa_prime_term"]
            + parts["kappa_double_prime_term"])
