"""Container for discretized quadratic forms.

Every operator in the toolkit is discretized as a Hermitian stiffness
matrix paired with a Hermitian positive-definite mass matrix; generalized
eigenvalues of the pencil are Rayleigh-Ritz approximations of the
operator's min-max values.  The container also carries a dof map and a
provenance dict so results stay auditable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = ["DiscretizedForm", "write_coordinate_text"]


@dataclass(frozen=True)
class DiscretizedForm:
    stiffness: sp.spmatrix
    mass: sp.spmatrix
    dof_map: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def n_dof(self) -> int:
        return self.stiffness.shape[0]

    def hermiticity_residual(self) -> float:
        """Largest entry of |A - A^H|, zero for a structurally Hermitian
        assembly."""
        d = self.stiffness - self.stiffness.getH()
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0

    def validate(self, herm_tol: float = 1e-14) -> None:
        """Check Hermiticity of both matrices and positivity of the mass.

        The Hermiticity tolerance is entrywise, relative to the largest
        stiffness entry.  Positive definiteness of a diagonal mass is read
        off the diagonal; other sparsity patterns fall back to a smallest-
        eigenvalue probe.
        """
        scale = float(np.max(np.abs(self.stiffness.data))) if self.stiffness.nnz else 1.0
        if self.hermiticity_residual() > herm_tol * max(scale, 1.0):
            raise ValueError("stiffness matrix is not Hermitian")
        dm = self.mass - self.mass.getH()
        if dm.nnz and np.max(np.abs(dm.data)) > herm_tol * max(scale, 1.0):
            raise ValueError("mass matrix is not Hermitian")
        offdiag = self.mass - sp.diags(self.mass.diagonal())
        if offdiag.nnz == 0:
            if np.min(self.mass.diagonal().real) <= 0:
                raise ValueError("mass matrix is not positive definite")
        else:
            from scipy.sparse.linalg import eigsh
            w = eigsh(self.mass, k=1, which='SA', return_eigenvectors=False)
            if w[0] <= 0:
                raise ValueError("mass matrix is not positive definite")

    def export(self, stiffness_path, mass_path=None) -> None:
        """Write the matrices in coordinate text format."""
        write_coordinate_text(self.stiffness, stiffness_path)
        if mass_path is not None:
            write_coordinate_text(self.mass, mass_path)


def write_coordinate_text(mat: sp.spmatrix, path) -> None:
    """One 'row col real imag' line per stored entry."""
    coo = mat.tocoo()
    with open(path, "w") as fh:
        fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            z = complex(v)
            fh.write(f"{r} {c} {z.real:.17g} {z.imag:.17g}\n")
