"""Dense complex linear algebra on small square matrices.

Operators and density matrices are plain ``numpy`` complex128 arrays of
shape ``(dim, dim)``; nothing here keeps state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.linalg as npl

ComplexMatrix = np.ndarray

HERMITIAN_TOL = 1e-10
EXPECTATION_IMAG_TOL = 1e-10


class LinalgError(ValueError):
    pass


def as_matrix(a) -> ComplexMatrix:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise LinalgError(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def _check_same_dim(a: ComplexMatrix, b: ComplexMatrix) -> None:
    if a.shape != b.shape:
        raise LinalgError(f"dimension mismatch: {a.shape} vs {b.shape}")


def matmul(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    _check_same_dim(a, b)
    return a @ b


def commutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Return ``ab - ba``."""
    a, b = as_matrix(a), as_matrix(b)
    _check_same_dim(a, b)
    return a @ b - b @ a


def anticommutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    _check_same_dim(a, b)
    return a @ b + b @ a


def dagger(a: ComplexMatrix) -> ComplexMatrix:
    return np.conj(a).T


def trace(a: ComplexMatrix) -> complex:
    return complex(np.trace(as_matrix(a)))


def hermiticity_error(a: ComplexMatrix) -> float:
    """Largest entry of ``|a - a^dagger|``."""
    return float(np.max(np.abs(a - dagger(a))))


def expectation(op: ComplexMatrix, rho: ComplexMatrix) -> float:
    """Real expectation value ``Tr(op rho)``.

    Raises if the imaginary part is above ``EXPECTATION_IMAG_TOL``; that only
    happens for a non-Hermitian operator or a corrupted state.
    """
    op, rho = as_matrix(op), as_matrix(rho)
    _check_same_dim(op, rho)
    # Tr(AB) = sum_ij A_ij B_ji without forming the product
    value = np.sum(op * rho.T)
    if abs(value.imag) > EXPECTATION_IMAG_TOL:
        raise LinalgError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


@dataclass(frozen=True)
class HermitianEigenDecomposition:
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> ComplexMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def hermitian_eigen(h: ComplexMatrix) -> HermitianEigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Backed by LAPACK ``zheevd`` through ``numpy.linalg.eigh``; the input is
    symmetrized before the call so round-off asymmetry below the tolerance
    does not leak into the result.
    """
    h = as_matrix(h)
    err = hermiticity_error(h)
    if err > HERMITIAN_TOL:
        raise LinalgError(f"matrix is not Hermitian (max |h - h^dagger| = {err:.3e})")
    try:
        w, v = npl.eigh(0.5 * (h + dagger(h)))
    except npl.LinAlgError as exc:  # pragma: no cover - LAPACK convergence failure
        raise LinalgError(f"eigensolver did not converge: {exc}") from exc
    return HermitianEigenDecomposition(eigenvalues=w, eigenvectors=v)


def hermitian_eigvals(h: ComplexMatrix) -> np.ndarray:
    h = as_matrix(h)
    err = hermiticity_error(h)
    if err > HERMITIAN_TOL:
        raise LinalgError(f"matrix is not Hermitian (max |h - h^dagger| = {err:.3e})")
    return npl.eigvalsh(0.5 * (h + dagger(h)))
