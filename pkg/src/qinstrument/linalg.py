"""Dense complex-matrix kernel.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Functions never modify their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ValidationError

HERM_TOL = 1e-9
EIG_TOL = 1e-9
PSD_TOL = 1e-9
ISOMETRY_TOL = 1e-10
# candidates whose residual falls below this are skipped in unitary_completion
COMPLETION_SKIP = 1e-8


def as_cmatrix(a, name="matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array (copying only if needed)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("not-finite", f"{name} has NaN or Inf entries")
    return m


def _require_square(a, name="matrix"):
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")


def frob(a) -> float:
    return float(np.linalg.norm(a))


def adjoint(a) -> np.ndarray:
    return as_cmatrix(a).conj().T


def trace(a) -> complex:
    a = as_cmatrix(a)
    _require_square(a)
    return complex(np.trace(a))


def tensor_product(a, b) -> np.ndarray:
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def partial_trace(a, dim_first: int, dim_second: int, keep: str = "first") -> np.ndarray:
    """Trace out one factor of an operator on ``C^dim_first ⊗ C^dim_second``.

    ``keep`` selects the factor that survives: ``"first"`` or ``"second"``.
    """
    a = as_cmatrix(a)
    n = dim_first * dim_second
    if a.shape != (n, n):
        raise DimensionMismatch(
            f"partial_trace expects a {n}x{n} matrix for dims ({dim_first}, {dim_second}), "
            f"got {a.shape}"
        )
    t = a.reshape(dim_first, dim_second, dim_first, dim_second)
    if keep == "first":
        return np.einsum("ikjk->ij", t)
    if keep == "second":
        return np.einsum("kikj->ij", t)
    raise ValueError(f"keep must be 'first' or 'second', got {keep!r}")


def hermitian_defect(a) -> float:
    """Relative Frobenius asymmetry ``‖a − a†‖ / max(1, ‖a‖)``."""
    return frob(a - a.conj().T) / max(1.0, frob(a))


def require_hermitian(a, name="matrix", tol=HERM_TOL) -> np.ndarray:
    a = as_cmatrix(a, name)
    _require_square(a, name)
    defect = hermitian_defect(a)
    if defect > tol:
        raise ValidationError(
            "not-Hermitian", f"{name} asymmetry {defect:.3e} exceeds {tol:.0e}", defect=defect
        )
    return a


def hermitize(a) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eig_hermitian(a) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises ``ValidationError("not-Hermitian")`` carrying the measured
    asymmetry when ``a`` is not Hermitian within ``HERM_TOL``.
    """
    a = require_hermitian(a)
    # eigh returns ascending eigenvalues; a stable argsort pins the tie order
    w, v = np.linalg.eigh(hermitize(a))
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    w.flags.writeable = False
    v.flags.writeable = False
    return EigenDecomposition(w, v)


def min_eigenvalue(a) -> float:
    return float(eig_hermitian(a).eigenvalues[0])


def is_psd(a, tol: float = PSD_TOL) -> bool:
    a = require_hermitian(a)
    return min_eigenvalue(a) >= -tol * max(1.0, frob(a))


def sqrt_psd(a, tol: float = PSD_TOL) -> np.ndarray:
    a = require_hermitian(a)
    eig = eig_hermitian(a)
    lo = float(eig.eigenvalues[0])
    if lo < -tol * max(1.0, frob(a)):
        raise ValidationError("not-PSD", f"minimum eigenvalue {lo:.3e} is negative", defect=-lo)
    v = eig.eigenvectors
    return (v * np.sqrt(np.clip(eig.eigenvalues, 0.0, None))) @ v.conj().T


def gram_defect(columns) -> float:
    c = as_cmatrix(columns)
    return frob(c.conj().T @ c - np.eye(c.shape[1]))


def unitary_completion(isometry_columns) -> np.ndarray:
    """Extend orthonormal columns to a square unitary.

    The input columns are kept verbatim as the leading columns.  Remaining
    columns come from Gram-Schmidt on the canonical basis vectors e_0, e_1,
    ... in order, skipping candidates whose residual norm is below
    ``COMPLETION_SKIP``; the result is therefore deterministic.
    """
    v = as_cmatrix(isometry_columns, "isometry")
    rows, cols = v.shape
    if cols > rows:
        raise DimensionMismatch(f"cannot complete {cols} columns in dimension {rows}")
    defect = gram_defect(v)
    if defect > ISOMETRY_TOL:
        raise ValidationError(
            "not-isometric", f"Gram defect ‖V†V − I‖ = {defect:.3e}", defect=defect
        )
    basis = [v[:, j] for j in range(cols)]
    for k in range(rows):
        if len(basis) == rows:
            break
        cand = np.zeros(rows, dtype=np.complex128)
        cand[k] = 1.0
        # two passes of classical Gram-Schmidt keep orthogonality near machine precision
        for _ in range(2):
            for b in basis:
                cand = cand - b * np.vdot(b, cand)
        norm = np.linalg.norm(cand)
        if norm < COMPLETION_SKIP:
            continue
        basis.append(cand / norm)
    return np.column_stack(basis)


def evolution_unitary(h, tau: float, hbar: float = 1.0) -> np.ndarray:
    """``exp(−i·tau·h/hbar)`` through the spectral decomposition of ``h``."""
    if not hbar > 0:
        raise ValidationError("bad-hbar", f"hbar must be positive, got {hbar}")
    eig = eig_hermitian(h)
    v = eig.eigenvectors
    phases = np.exp(-1j * tau * eig.eigenvalues / hbar)
    return (v * phases) @ v.conj().T


def vec(a) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def matrix_unit(i: int, j: int, dim: int) -> np.ndarray:
    e = np.zeros((dim, dim), dtype=np.complex128)
    e[i, j] = 1.0
    return e
