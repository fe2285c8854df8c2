"""
Prior kernel construction and eigendecomposition.

Kernels are Hermitian PSD channel covariances over a uniform planar array. The
artificial kernels (exponential and Bessel) are built per axis from centered
index vectors and combined as Σ_x ⊗ Σ_y, which matches the row-major antenna
linearization of UpaGeometry.
"""

__all__ = [
    "evd_hermitian",
    "statistical_kernel",
    "exponential_kernel",
    "bessel_kernel",
    "sample_covariance",
    "kernel_from_basis",
    "mean_eigenvalue",
]

import numpy as np
import scipy.linalg
import scipy.special

from typing import Union, Sequence, Optional
from loguru import logger

from icefill.models import Kernel, EigenBasis, UpaGeometry
from icefill.exceptions import InvalidInputError


def _as_kernel(kernel : Union[Kernel, np.ndarray], label : str="perfect") -> Kernel:
    return kernel if isinstance(kernel, Kernel) else Kernel(kernel, label=label)


def evd_hermitian(kernel : Union[Kernel, np.ndarray], rank_tol : float=1e-10) -> EigenBasis:
    """
    Eigendecomposition of a kernel, truncated to the eigenvalues above rank_tol * λ_max.

    Eigenpairs come out sorted descending; equal eigenvalues keep the ascending
    order LAPACK returns them in, and every eigenvector is rotated so that its
    largest-magnitude entry (first one on ties) is real and positive.

    Raises:
    ------
    InvalidInputError
        If the input is not Hermitian within tolerance.
    """
    kernel = _as_kernel(kernel)
    if kernel.size == 0:
        return EigenBasis(np.zeros((0, 0)), np.zeros(0), dimension=0)

    eigenvalues, eigenvectors = scipy.linalg.eigh(kernel.matrix)
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]

    largest = eigenvalues[0]
    keep = eigenvalues > rank_tol * largest if largest > 0 else np.zeros(eigenvalues.size, dtype=bool)
    eigenvalues = eigenvalues[keep]
    eigenvectors = eigenvectors[:, keep]

    pivots = np.argmax(np.abs(eigenvectors), axis=0)
    phases = eigenvectors[pivots, np.arange(eigenvectors.shape[1])]
    eigenvectors = eigenvectors * (np.abs(phases) / phases)
    logger.debug(f"evd: M={kernel.size}, K={eigenvalues.size}, λ_max={largest:.4g}")
    return EigenBasis(eigenvectors, eigenvalues, dimension=kernel.size)


def statistical_kernel(true_kernel : Kernel, sigma_h2 : float) -> Kernel:
    """Σ_h + σ_h² I, the kernel estimated from noisy historical channels."""
    if sigma_h2 < 0:
        raise InvalidInputError("statistical_kernel", f"sigma_h2 must be nonnegative, got {sigma_h2}")
    matrix = true_kernel.matrix + sigma_h2 * np.eye(true_kernel.size)
    return Kernel(matrix, label="statistical")


def _axis_separation(count : int) -> np.ndarray:
    m = UpaGeometry.centered(count)
    return np.abs(m[:, None] - m[None, :])


def exponential_kernel(geom : UpaGeometry, eta1 : float) -> Kernel:
    """Σ_exp,x ⊗ Σ_exp,y with entries exp(-η1² (2πd/λ)² (m_i - m_j)²)."""
    if not eta1 > 0:
        raise InvalidInputError("exponential_kernel", f"eta1 must be positive, got {eta1}")
    scale = (eta1 * geom.wavenumber_spacing) ** 2
    kx = np.exp(-scale * _axis_separation(geom.mx) ** 2)
    ky = np.exp(-scale * _axis_separation(geom.my) ** 2)
    return Kernel(np.kron(kx, ky), label="exponential")


def bessel_kernel(geom : UpaGeometry, eta2 : float) -> Kernel:
    """Σ_bes,x ⊗ Σ_bes,y with entries J0(η2 (2πd/λ) |m_i - m_j|)."""
    if not eta2 > 0:
        raise InvalidInputError("bessel_kernel", f"eta2 must be positive, got {eta2}")
    scale = eta2 * geom.wavenumber_spacing
    kx = scipy.special.j0(scale * _axis_separation(geom.mx))
    ky = scipy.special.j0(scale * _axis_separation(geom.my))
    return Kernel(np.kron(kx, ky), label="bessel")


def sample_covariance(samples : Union[np.ndarray, Sequence[np.ndarray]]) -> Kernel:
    """(1/N) Σ_n h_n h_n^H over the rows of `samples`."""
    samples = np.asarray(samples, dtype=complex)
    if samples.size == 0:
        raise InvalidInputError("sample_covariance", "at least one sample is required")
    if samples.ndim == 1:
        samples = samples.reshape(1, -1)
    if samples.ndim != 2:
        raise InvalidInputError("sample_covariance", "samples must all have the same length M")
    matrix = samples.T @ samples.conj() / samples.shape[0]
    matrix = 0.5 * (matrix + matrix.conj().T)
    return Kernel(matrix, label="sample")


def kernel_from_basis(basis : EigenBasis, rank : Optional[int]=None, label : str="perfect") -> Kernel:
    """Rebuild U_K Λ_K U_K^H, keeping only the top `rank` eigenpairs when given."""
    if rank is not None:
        if rank < 0:
            raise InvalidInputError("kernel_from_basis", f"rank must be nonnegative, got {rank}")
        basis = EigenBasis(basis.eigenvectors[:, :rank], basis.eigenvalues[:rank], dimension=basis.dimension)
    matrix = basis.reconstruct()
    matrix = 0.5 * (matrix + matrix.conj().T)
    return Kernel(matrix, label=label)


def mean_eigenvalue(kernel : Kernel) -> float:
    """Tr(Σ)/M, the reference level of the kernel estimation error in dB."""
    return kernel.trace / kernel.size
