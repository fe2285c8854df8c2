__all__ = [
    "Kernel",
    "EigenBasis",
    "KERNEL_LABELS",
]

import numpy as np

from typing import Optional
from icefill.exceptions import InvalidInputError


KERNEL_LABELS = ("perfect", "statistical", "exponential", "bessel", "sample", "posterior")

HERMITIAN_TOL = 1e-10
PSD_TOL       = 1e-8


def _frozen(array : np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


class Kernel:

    def __init__(self,
                 matrix    : np.ndarray,
                 label     : str="perfect",
                 check_psd : bool=True,
        ):
            """
            Hermitian positive semi-definite channel covariance (prior kernel).

            Parameters:
            ----------
            matrix : np.ndarray
                M x M complex matrix.
            label : str
                Provenance tag, one of KERNEL_LABELS.
            check_psd : bool
                Verify the smallest eigenvalue is >= -1e-8 times the largest.

            Raises:
            ------
            InvalidInputError
                If the matrix is not square, not Hermitian within 1e-10 of its
                largest entry, has a negative or complex diagonal, or is indefinite.
            """
            matrix = np.asarray(matrix)
            if matrix.ndim == 0:
                matrix = matrix.reshape(1, 1)
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise InvalidInputError("Kernel", f"matrix must be square, got shape {matrix.shape}")
            if label not in KERNEL_LABELS:
                raise InvalidInputError("Kernel", f"unknown label '{label}'")
            if not np.all(np.isfinite(matrix)):
                raise InvalidInputError("Kernel", "matrix has non-finite entries")

            scale = np.max(np.abs(matrix)) if matrix.size else 0.0
            if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
                raise InvalidInputError("Kernel", "matrix is not Hermitian")
            diag = np.diag(matrix)
            if np.any(np.abs(np.imag(diag)) > HERMITIAN_TOL * max(scale, 1.0)) or np.any(np.real(diag) < -HERMITIAN_TOL * scale):
                raise InvalidInputError("Kernel", "diagonal entries must be real and nonnegative")
            if check_psd and matrix.size:
                eigenvalues = np.linalg.eigvalsh(matrix)
                if eigenvalues[0] < -PSD_TOL * max(eigenvalues[-1], 0.0):
                    raise InvalidInputError("Kernel", f"matrix is indefinite (smallest eigenvalue {eigenvalues[0]:.3e})")

            self.matrix = _frozen(matrix)
            self.label = label

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def relabel(self, label : str) -> 'Kernel':
        return Kernel(self.matrix, label=label, check_psd=False)

    def __repr__(self) -> str:
        return f"Kernel(M={self.size}, label={self.label}, trace={self.trace:.4g})"


class EigenBasis:

    def __init__(self,
                 eigenvectors : np.ndarray,
                 eigenvalues  : np.ndarray,
                 dimension    : Optional[int]=None,
        ):
            """
            Rank-truncated eigendecomposition U_K Λ_K U_K^H of a kernel.

            Parameters:
            ----------
            eigenvectors : np.ndarray
                M x K matrix with orthonormal columns.
            eigenvalues : np.ndarray
                K strictly positive values sorted descending.
            dimension : int, optional
                Ambient dimension M; needed when K = 0.
            """
            eigenvalues = np.asarray(eigenvalues, dtype=float).reshape(-1)
            eigenvectors = np.asarray(eigenvectors, dtype=complex)
            if dimension is None:
                dimension = eigenvectors.shape[0]
            eigenvectors = eigenvectors.reshape(dimension, eigenvalues.size)
            if np.any(eigenvalues <= 0):
                raise InvalidInputError("EigenBasis", "eigenvalues must be strictly positive")
            if np.any(np.diff(eigenvalues) > 0):
                raise InvalidInputError("EigenBasis", "eigenvalues must be sorted descending")
            gram = eigenvectors.conj().T @ eigenvectors
            if np.max(np.abs(gram - np.eye(eigenvalues.size)), initial=0.0) > 1e-10:
                raise InvalidInputError("EigenBasis", "eigenvectors are not orthonormal")

            self.eigenvectors = _frozen(eigenvectors)
            self.eigenvalues = np.array(eigenvalues, copy=True)
            self.eigenvalues.setflags(write=False)
            self.dimension = int(dimension)

    @property
    def rank(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> np.ndarray:
        """U_K Λ_K U_K^H as a dense matrix."""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T

    def __repr__(self) -> str:
        return f"EigenBasis(M={self.dimension}, K={self.rank})"
