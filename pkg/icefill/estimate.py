"""
Channel estimators on received pilots y = W^H h + n.
"""

__all__ = [
    "posterior_covariance",
    "MmseEstimator",
    "mmse_estimate",
    "ls_estimate",
    "omp_estimate",
    "dft_dictionary",
]

import numpy as np
import scipy.linalg

from typing import Optional, Union
from loguru import logger

from icefill.models import Kernel, ObservationMatrix, EstimateResult
from icefill.exceptions import InvalidInputError, NumericError

# refits beyond this condition number are rejected
OMP_MAX_CONDITION = 1e12


def _as_matrix(W : Union[ObservationMatrix, np.ndarray]) -> np.ndarray:
    matrix = W.matrix if isinstance(W, ObservationMatrix) else np.asarray(W, dtype=complex)
    return matrix.reshape(matrix.shape[0], -1)


def _squared_error(estimate : np.ndarray, truth : Optional[np.ndarray]) -> Optional[float]:
    if truth is None:
        return None
    return float(np.sum(np.abs(estimate - np.asarray(truth).reshape(-1)) ** 2))


class MmseEstimator:

    def __init__(self,
                 W      : Union[ObservationMatrix, np.ndarray],
                 prior  : Kernel,
                 sigma2 : float,
        ):
            """
            Posterior mean estimator with the weight G = Σ W (W^H Σ W + σ² I_Q)^{-1}
            factored once and shared by every trial.

            Parameters:
            ----------
            W : ObservationMatrix or np.ndarray
                M x Q observation matrix.
            prior : Kernel
                Kernel the estimator believes in (not necessarily the true one).
            sigma2 : float
                Noise variance, positive.
            """
            matrix = _as_matrix(W)
            if matrix.shape[0] != prior.size:
                raise InvalidInputError("mmse_estimate", f"W has {matrix.shape[0]} rows for a kernel of size {prior.size}")
            if not sigma2 > 0:
                raise InvalidInputError("mmse_estimate", f"noise variance must be positive, got {sigma2}")

            self.W = matrix
            self.prior = prior
            self.sigma2 = float(sigma2)
            SW = prior.matrix @ matrix
            A = matrix.conj().T @ SW + sigma2 * np.eye(matrix.shape[1])
            A = 0.5 * (A + A.conj().T)
            try:
                factor = scipy.linalg.cho_factor(A, lower=True)
            except np.linalg.LinAlgError as e:
                raise NumericError("mmse_estimate", f"Q x Q system is not positive definite ({e})")
            # G^H = A^{-1} W^H Σ
            self.weight = scipy.linalg.cho_solve(factor, SW.conj().T).conj().T
            self.weight.setflags(write=False)
            self.posterior_trace = max(float(prior.trace - np.real(np.trace(self.weight @ SW.conj().T))), 0.0)

    @property
    def num_pilots(self) -> int:
        return self.W.shape[1]

    def __call__(self, y : np.ndarray, truth : Optional[np.ndarray]=None) -> EstimateResult:
        y = np.asarray(y, dtype=complex).reshape(-1)
        if y.size != self.num_pilots:
            raise InvalidInputError("mmse_estimate", f"expected {self.num_pilots} pilots, got {y.size}")
        estimate = self.weight @ y
        return EstimateResult(estimate, self.posterior_trace, _squared_error(estimate, truth))

    def estimate_batch(self, Y : np.ndarray) -> np.ndarray:
        """Row-wise estimates for a trials x Q block of received pilots."""
        return np.asarray(Y, dtype=complex) @ self.weight.T

    def __repr__(self) -> str:
        return f"MmseEstimator(M={self.W.shape[0]}, Q={self.num_pilots}, kernel={self.prior.label}, trace={self.posterior_trace:.6g})"


def posterior_covariance(W : Union[ObservationMatrix, np.ndarray], prior : Kernel, sigma2 : float) -> Kernel:
    """Σ_{h|y} = Σ - Σ W (W^H Σ W + σ² I)^{-1} W^H Σ."""
    estimator = MmseEstimator(W, prior, sigma2)
    matrix = prior.matrix - estimator.weight @ (prior.matrix @ estimator.W).conj().T
    matrix = 0.5 * (matrix + matrix.conj().T)
    return Kernel(matrix, label="posterior", check_psd=False)


def mmse_estimate(W      : Union[ObservationMatrix, np.ndarray],
                  prior  : Kernel,
                  sigma2 : float,
                  y      : np.ndarray,
                  truth  : Optional[np.ndarray]=None,
    ) -> EstimateResult:
    return MmseEstimator(W, prior, sigma2)(y, truth)


def ls_estimate(W : Union[ObservationMatrix, np.ndarray], y : np.ndarray) -> np.ndarray:
    """ĥ = (W^H)^+ y for a square, invertible observation matrix."""
    matrix = _as_matrix(W)
    M, Q = matrix.shape
    if M != Q:
        raise InvalidInputError("ls_estimate", f"W must be square, got {M}x{Q}")
    if np.linalg.matrix_rank(matrix) < M:
        raise InvalidInputError("ls_estimate", "W is rank deficient")
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] != Q:
        raise InvalidInputError("ls_estimate", f"expected {Q} pilots, got {y.shape[-1]}")
    inverse = np.linalg.pinv(matrix.conj().T)
    return y @ inverse.T if y.ndim == 2 else inverse @ y


def dft_dictionary(mx : int, my : int) -> np.ndarray:
    """Unitary 2-D DFT of an mx x my array, kron(F_mx, F_my)."""
    return np.kron(scipy.linalg.dft(mx, scale="sqrtn"), scipy.linalg.dft(my, scale="sqrtn"))


def omp_estimate(W          : Union[ObservationMatrix, np.ndarray],
                 dictionary : np.ndarray,
                 y          : np.ndarray,
                 sparsity   : int,
    ) -> np.ndarray:
    """
    Orthogonal matching pursuit in the sensed domain A = W^H D.

    Each step picks the atom most correlated with the residual (column-normalized),
    refits all chosen atoms by least squares and updates the residual.
    Returns D x coefficients.
    """
    matrix = _as_matrix(W)
    dictionary = np.asarray(dictionary, dtype=complex)
    M, Q = matrix.shape
    if dictionary.shape[0] != M:
        raise InvalidInputError("omp_estimate", f"dictionary has {dictionary.shape[0]} rows for M={M}")
    if sparsity < 0 or sparsity > Q:
        raise InvalidInputError("omp_estimate", f"sparsity must lie in [0, {Q}], got {sparsity}")
    y = np.asarray(y, dtype=complex).reshape(-1)
    if sparsity == 0:
        return np.zeros(M, dtype=complex)

    A = matrix.conj().T @ dictionary
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = np.inf
    support = []
    residual = y.copy()
    coefficients = np.zeros(0, dtype=complex)
    for _ in range(sparsity):
        correlation = np.abs(A.conj().T @ residual) / norms
        correlation[support] = -1
        support.append(int(np.argmax(correlation)))
        sub = A[:, support]
        if np.linalg.cond(sub) > OMP_MAX_CONDITION:
            raise NumericError("omp_estimate", f"refit on {len(support)} atoms is ill-conditioned")
        coefficients = np.linalg.lstsq(sub, y, rcond=None)[0]
        residual = y - sub @ coefficients
        if np.linalg.norm(residual) <= 1e-12 * max(np.linalg.norm(y), 1e-300):
            break
    logger.debug(f"OMP: support={support}, residual={np.linalg.norm(residual):.3e}")
    return dictionary[:, support] @ coefficients
