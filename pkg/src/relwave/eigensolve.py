"""Lowest generalized eigenpairs of a discretized form, with certificates.

The solver realizes the variational min-max values of a pencil (A, B):
dense LAPACK for small problems, shift-invert Lanczos (ARPACK) with a
sparse factorization for large ones.  Results carry per-pair residual
norms and are deterministic for a fixed starting-vector seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forms import DiscretizedForm

__all__ = ["SpectralResult", "lowest_eigenpairs", "rayleigh_quotient"]

_DENSE_CUTOFF = 2000


@dataclass
class SpectralResult:
    """Sorted eigenvalues with B-orthonormal eigenvectors and residuals.

    ``residuals[i]`` is ``||A x_i - lam_i B x_i|| / ||B x_i||``; the
    convergence contract is residual <= tol * max(1, |lam_i|).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    solver: str
    iterations: Optional[int] = None

    def check(self, tol: float) -> None:
        bad = self.residuals > tol * np.maximum(1.0, np.abs(self.eigenvalues))
        if np.any(bad):
            raise RuntimeError(
                f"eigenpairs {np.nonzero(bad)[0].tolist()} exceed the "
                f"residual tolerance {tol}"
            )


def lowest_eigenpairs(form: DiscretizedForm, n_ev: int, tol: float = 1e-10,
                      sigma: Optional[float] = None, seed: int = 0,
                      verbose: bool = False) -> SpectralResult:
    """Smallest ``n_ev`` generalized eigenvalues of the form's pencil.

    Parameters
    ----------
    form : DiscretizedForm
        Hermitian stiffness and Hermitian positive-definite mass.
    n_ev : int
        Number of eigenpairs, counted from the bottom of the spectrum.
    tol : float
        Residual contract, relative to max(1, |eigenvalue|).
    sigma : float, optional
        Shift for the shift-invert solve.  Defaults to the assembling
        module's suggestion recorded in the form provenance.
    seed : int
        Seed of the deterministic starting vector.
    """
    if n_ev < 1:
        raise ValueError("n_ev must be >= 1")
    A = form.stiffness.tocsc()
    B = form.mass.tocsc()
    n = A.shape[0]
    if n_ev > n:
        raise ValueError("n_ev exceeds the number of degrees of freedom")

    if n <= _DENSE_CUTOFF or n_ev > n // 3:
        w, v = sla.eigh(A.toarray(), B.toarray(),
                        subset_by_index=[0, n_ev - 1])
        result = _package(A, B, w, v, "dense-eigh")
        result.check(tol)
        return result

    if sigma is None:
        sigma = form.provenance.get("suggested_sigma")
    if sigma is None:
        raise ValueError(
            "no shift available: pass sigma= or assemble a form whose "
            "provenance suggests one"
        )

    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    ncv = min(n - 1, max(4 * n_ev + 16, 40))
    arpack_tol = max(tol * 1e-2, 1e-14)

    shift = float(sigma)
    last_err = None
    for attempt in range(3):
        try:
            w, v = spla.eigsh(A, k=n_ev, M=B, sigma=shift, which='LM',
                              v0=v0, ncv=ncv, tol=arpack_tol)
            break
        except spla.ArpackNoConvergence as err:
            ritz = getattr(err, "eigenvalues", None)
            raise RuntimeError(
                f"shift-invert Lanczos did not converge at sigma={shift}; "
                f"converged Ritz values: {ritz}"
            ) from err
        except RuntimeError as err:   # singular factorization at the shift
            last_err = err
            shift = shift - max(1.0, 0.05 * abs(shift))
            if verbose:
                print(f"factorization failed, lowering shift to {shift}")
    else:
        raise RuntimeError(
            f"factorization failed at shifted pencils down to sigma={shift}"
        ) from last_err

    order = np.argsort(w)
    result = _package(A, B, w[order], v[:, order], "arpack-shift-invert")
    result.check(tol)
    return result


def _package(A, B, w, v, solver: str) -> SpectralResult:
    """B-orthonormalize, compute residuals, and wrap."""
    G = v.conj().T @ (B @ v)
    off = G - np.diag(np.diag(G).real)
    if np.max(np.abs(off)) > 1e-12 or np.max(np.abs(np.diag(G).real - 1.0)) > 1e-12:
        L = np.linalg.cholesky(0.5 * (G + G.conj().T))
        v = sla.solve_triangular(L, v.conj().T, lower=True).conj().T
    Av = A @ v
    Bv = B @ v
    res = np.linalg.norm(Av - Bv * w[None, :], axis=0) / np.linalg.norm(Bv, axis=0)
    return SpectralResult(eigenvalues=np.asarray(w, dtype=float),
                          eigenvectors=v, residuals=res, solver=solver)


def rayleigh_quotient(form: DiscretizedForm, v: np.ndarray) -> float:
    """Form value of v relative to its mass norm.

    The imaginary residue of v*Av (pure rounding for Hermitian A) is
    checked and discarded.
    """
    v = np.asarray(v)
    if not np.any(v):
        raise ValueError("v must be nonzero")
    den = np.vdot(v, form.mass @ v)
    if den.real <= 0 or abs(den.imag) > 1e-12 * den.real:
        raise ValueError("mass is not positive definite on the input vector")
    num = np.vdot(v, form.stiffness @ v)
    if abs(num.imag) > 1e-12 * max(abs(num.real), den.real):
        raise ValueError("non-Hermitian stiffness: imaginary Rayleigh quotient")
    return float(num.real / den.real)
