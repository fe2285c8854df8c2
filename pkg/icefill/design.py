"""
Observation matrix designers.

- water_fill / water_fill_matrix: ideal continuous power allocation over the
  kernel eigenvectors (total-power relaxation).
- ice_fill: greedy eigenvector assignment, one pilot slot at a time, squeezing
  only the selected working eigenvalue.
- mm_design: phase-only combiners by majorization-minimization on the
  posterior kernel of every slot.
- random_matrix, top_q_matrix, dft_matrix: baselines.

Mutual information is measured in nats throughout.
"""

__all__ = [
    "water_fill",
    "pilot_water_fill",
    "water_fill_matrix",
    "ice_fill",
    "ice_fill_spectrum",
    "posterior_kernel_update",
    "mutual_information",
    "mi_increment",
    "mm_surrogate",
    "mm_timeslot",
    "mm_design",
    "random_matrix",
    "top_q_matrix",
    "dft_matrix",
    "design_matrix",
]

import numpy as np
import scipy.linalg
import scipy.optimize

from typing import Tuple, List, Optional, Union
from loguru import logger

from icefill.models import Kernel, EigenBasis, ObservationMatrix, PowerAllocation, PilotAllocation, Mode, DESIGNERS, MAJORIZERS
from icefill.kernels import evd_hermitian
from icefill.exceptions import InvalidInputError, NumericError, UnknownMethodError


def water_fill(eigenvalues : np.ndarray, sigma2 : float, Q : float) -> PowerAllocation:
    """
    Water-filling powers p_k = (β - σ²/λ_k)^+ with Σ p_k = Q.

    The water level is bracketed by bisection on [min σ²/λ_k, max σ²/λ_k + Q] and
    then set exactly on the resulting active set, β = (Q + Σ_active σ²/λ_k)/|active|.

    Raises:
    ------
    InvalidInputError
        If the spectrum is empty or not positive, or the budget is not positive.
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float).reshape(-1)
    if eigenvalues.size == 0:
        raise InvalidInputError("water_fill", "empty spectrum")
    if np.any(eigenvalues <= 0):
        raise InvalidInputError("water_fill", "eigenvalues must be positive")
    if not Q > 0:
        raise InvalidInputError("water_fill", f"budget must be positive, got {Q}")
    if sigma2 < 0:
        raise InvalidInputError("water_fill", f"noise variance must be nonnegative, got {sigma2}")

    levels = sigma2 / eigenvalues
    excess = lambda beta: np.sum(np.maximum(beta - levels, 0)) - Q
    beta = scipy.optimize.bisect(excess, levels.min(), levels.max() + Q, xtol=1e-12 * Q)

    active = levels < beta
    for _ in range(levels.size):
        beta = (Q + levels[active].sum()) / active.sum()
        updated = levels < beta
        if np.array_equal(updated, active):
            break
        active = updated
    powers = np.where(active, beta - levels, 0.0)
    logger.debug(f"water-filling: K={levels.size}, Q={Q}, β={beta:.12g}, active={int(active.sum())}")
    return PowerAllocation(powers, beta, eigenvalues, sigma2, Q)


def pilot_water_fill(eigenvalues : np.ndarray, sigma2 : float, Q : int) -> PowerAllocation:
    """
    Water-filling that wets at most Q directions. When the full allocation
    keeps more than Q directions active, the budget is refilled over the top Q
    eigenvalues only, so the allocation has Q entries.
    """
    alloc = water_fill(eigenvalues, sigma2, Q)
    if alloc.active <= Q:
        return alloc
    logger.debug(f"water-filling: {alloc.active} active directions for Q={Q}, refilling the top {int(Q)}")
    return water_fill(alloc.eigenvalues[:int(Q)], sigma2, Q)


def water_fill_matrix(basis : EigenBasis, alloc : PowerAllocation, Q : int) -> ObservationMatrix:
    """
    W = U_K P with P = [diag(sqrt(p)), 0]: one scaled eigenvector per direction,
    zero columns up to Q. The matrix always has Q columns and ‖W‖_F² = Q; an
    allocation wetting more than Q directions is refilled over the top Q.
    """
    K = basis.rank
    Q = int(Q)
    if alloc.powers.size != K and not alloc.powers.size == Q < K:
        raise InvalidInputError("water_fill_matrix", f"allocation has {alloc.powers.size} powers for a rank-{K} basis")
    if not np.allclose(alloc.eigenvalues, basis.eigenvalues[:alloc.powers.size]):
        raise InvalidInputError("water_fill_matrix", "allocation was computed on another spectrum")
    if alloc.active > Q:
        alloc = water_fill(alloc.eigenvalues[:Q], alloc.sigma2, alloc.budget)
    emitted = min(alloc.powers.size, Q)
    W = np.zeros((basis.dimension, Q), dtype=complex)
    W[:, :emitted] = basis.eigenvectors[:, :emitted] * np.sqrt(alloc.powers[:emitted])
    if abs(np.sum(np.abs(W) ** 2) - alloc.budget) > 1e-8 * max(1.0, alloc.budget):
        raise InvalidInputError("water_fill_matrix", "total power of the matrix differs from the budget")
    selected = np.concatenate([np.arange(emitted), -np.ones(Q - emitted, dtype=int)])
    return ObservationMatrix(W, Mode.SCALED_EIGEN, selected=selected)


def ice_fill_spectrum(eigenvalues : np.ndarray, sigma2 : float, Q : int) -> PilotAllocation:
    """
    Greedy reuse frequencies on a positive spectrum.

    Each slot takes k_t = argmax_k λ_k^t (smallest index on ties) and squeezes only
    that working eigenvalue, λ ← λσ²/(λ + σ²), which raises its ice level σ²/λ by
    exactly one.
    """
    if not sigma2 > 0:
        raise InvalidInputError("ice_fill", f"noise variance must be positive, got {sigma2}")
    if int(Q) != Q or Q < 1:
        raise InvalidInputError("ice_fill", f"pilot count must be a positive integer, got {Q}")
    eigenvalues = np.asarray(eigenvalues, dtype=float).reshape(-1)
    if eigenvalues.size == 0:
        raise InvalidInputError("ice_fill", "kernel has no positive eigenvalue")
    if np.any(eigenvalues <= 0):
        raise InvalidInputError("ice_fill", "eigenvalues must be positive")
    Q = int(Q)

    working = eigenvalues.copy()
    trajectory = np.empty((Q + 1, working.size))
    trajectory[0] = working
    order = np.empty(Q, dtype=int)
    for t in range(Q):
        k = int(np.argmax(working))
        order[t] = k
        working[k] = working[k] * sigma2 / (working[k] + sigma2)
        trajectory[t + 1] = working

    allocation = PilotAllocation(np.bincount(order, minlength=working.size), order, eigenvalues, sigma2, trajectory)
    logger.debug(f"ice-filling: K={working.size}, Q={Q}, n={allocation.reuse.tolist()}")
    return allocation


def ice_fill(basis : EigenBasis, sigma2 : float, Q : int) -> Tuple[ObservationMatrix, PilotAllocation]:
    """
    Greedy eigenvector assignment: slot t emits w = u_{k_t}, with k_t picked by
    ice_fill_spectrum on the basis eigenvalues.

    Returns:
    -------
    (W, allocation) with W in unit-norm-columns mode and the allocation carrying
    the selection order and the (Q+1) x K working eigenvalue trajectory.
    """
    allocation = ice_fill_spectrum(basis.eigenvalues, sigma2, Q)
    W = ObservationMatrix(basis.eigenvectors[:, allocation.order], Mode.UNIT_NORM, selected=allocation.order)
    return W, allocation


def posterior_kernel_update(Sigma : Kernel, w : np.ndarray, sigma2 : float) -> Kernel:
    """Σ_t = Σ_{t-1} - Σ_{t-1} w w^H Σ_{t-1} / (w^H Σ_{t-1} w + σ²)."""
    w = np.asarray(w, dtype=complex).reshape(-1)
    if w.size != Sigma.size:
        raise InvalidInputError("posterior_kernel_update", f"vector length {w.size} does not match kernel size {Sigma.size}")
    if np.linalg.norm(w) == 0:
        raise InvalidInputError("posterior_kernel_update", "observation vector has zero norm")
    if not sigma2 > 0:
        raise InvalidInputError("posterior_kernel_update", f"noise variance must be positive, got {sigma2}")
    s = Sigma.matrix @ w
    denominator = np.real(np.vdot(w, s)) + sigma2
    matrix = Sigma.matrix - np.outer(s, s.conj()) / denominator
    matrix = 0.5 * (matrix + matrix.conj().T)
    return Kernel(matrix, label="posterior", check_psd=False)


def _as_matrix(W : Union[ObservationMatrix, np.ndarray]) -> np.ndarray:
    matrix = W.matrix if isinstance(W, ObservationMatrix) else np.asarray(W, dtype=complex)
    return matrix.reshape(matrix.shape[0], -1)


def mutual_information(W : Union[ObservationMatrix, np.ndarray], kernel : Kernel, sigma2 : float) -> float:
    """ln det(I_Q + W^H Σ W / σ²) through a Cholesky factor."""
    if not sigma2 > 0:
        raise InvalidInputError("mutual_information", f"noise variance must be positive, got {sigma2}")
    matrix = _as_matrix(W)
    if matrix.shape[1] == 0:
        return 0.0
    A = np.eye(matrix.shape[1]) + matrix.conj().T @ kernel.matrix @ matrix / sigma2
    A = 0.5 * (A + A.conj().T)
    try:
        L = scipy.linalg.cholesky(A, lower=True)
    except np.linalg.LinAlgError as e:
        raise NumericError("mutual_information", str(e))
    value = 2.0 * float(np.sum(np.log(np.real(np.diag(L)))))
    if not np.isfinite(value):
        raise NumericError("mutual_information", "determinant is not finite")
    return value


def mi_increment(Sigma_t : Kernel, w : np.ndarray, sigma2 : float) -> float:
    """ln(1 + w^H Σ_t w / σ²), the information one more pilot adds."""
    w = np.asarray(w, dtype=complex).reshape(-1)
    return float(np.log1p(np.real(np.vdot(w, Sigma_t.matrix @ w)) / sigma2))


def _unit_modulus(b : np.ndarray) -> np.ndarray:
    """exp(j∠b)/sqrt(M); zero entries keep phase 0."""
    magnitude = np.abs(b)
    phase = np.divide(b, magnitude, out=np.ones(b.shape, dtype=complex), where=magnitude != 0)
    return phase / np.sqrt(b.size)


def mm_surrogate(Sigma_t : Kernel, majorizer : str="spectral") -> np.ndarray:
    """
    B = X - λ_max I + Σ_t for the scalar majorizer X·I of λ_max I - Σ_t.

    'trace' takes X = Tr(λ_max I - Σ_t), 'spectral' the tightest scalar
    X = λ_max - λ_min, which leaves B = Σ_t - λ_min I. B is PSD for both, so
    the linearized surrogate stays a minorizer of the objective.
    """
    if majorizer not in MAJORIZERS:
        raise UnknownMethodError(majorizer, MAJORIZERS)
    S = Sigma_t.matrix
    M = Sigma_t.size
    spectrum = scipy.linalg.eigh(S, eigvals_only=True)
    lambda_max = float(spectrum[-1])
    if majorizer == "trace":
        x = M * lambda_max - Sigma_t.trace
    else:
        x = lambda_max - max(float(spectrum[0]), 0.0)
    return S + (x - lambda_max) * np.eye(M)


def mm_timeslot(Sigma_t    : Kernel,
                w0         : np.ndarray,
                max_iter   : int=200,
                rel_tol    : float=1e-6,
                majorizer  : str="spectral",
                accelerate : bool=True,
    ) -> Tuple[np.ndarray, List[float], bool]:
    """
    Phase-only maximization of w^H Σ_t w by majorization-minimization.

    The surrogate is tight at v = w, so every step w ← exp(j∠(B v))/sqrt(M)
    does not decrease the objective. With `accelerate`, each iteration takes
    two steps and tries a squared extrapolation of them; the extrapolated
    point is kept only when it beats the plain double step.

    Returns:
    -------
    (w, objectives, converged) where objectives[0] is the value at w0 and
    objectives[i] the value after iteration i.
    """
    S = Sigma_t.matrix
    B = mm_surrogate(Sigma_t, majorizer)
    value = lambda v: float(np.real(np.vdot(v, S @ v)))

    w = np.asarray(w0, dtype=complex).reshape(-1)
    objective = value(w)
    objectives = [objective]
    converged = False
    for _ in range(max_iter):
        w1 = _unit_modulus(B @ w)
        if accelerate:
            w2 = _unit_modulus(B @ w1)
            updated = value(w2)
            r = w1 - w
            v = w2 - w1 - r
            if np.linalg.norm(v) > 0:
                alpha = min(-np.linalg.norm(r) / np.linalg.norm(v), -1.0)
                candidate = _unit_modulus(B @ _unit_modulus(w - 2 * alpha * r + alpha ** 2 * v))
                extrapolated = value(candidate)
                if extrapolated > updated:
                    w2, updated = candidate, extrapolated
            w = w2
        else:
            w = w1
            updated = value(w)
        objectives.append(updated)
        if abs(updated - objective) <= rel_tol * abs(objective):
            converged = True
            break
        objective = updated
    return w, objectives, converged


def mm_design(kernel     : Kernel,
              sigma2     : float,
              Q          : int,
              max_iter   : int=200,
              rel_tol    : float=1e-6,
              rng        : Optional[np.random.Generator]=None,
              majorizer  : str="spectral",
              accelerate : bool=True,
    ) -> ObservationMatrix:
    """
    Phase-only observation matrix, one MM solve per slot followed by the
    posterior kernel downdate. The per-slot objective traces are kept in
    `history` of the returned matrix.
    """
    if int(Q) != Q or Q < 1:
        raise InvalidInputError("mm_design", f"pilot count must be a positive integer, got {Q}")
    if not sigma2 > 0:
        raise InvalidInputError("mm_design", f"noise variance must be positive, got {sigma2}")
    rng = rng if rng is not None else np.random.default_rng()
    M = kernel.size
    W = np.empty((M, int(Q)), dtype=complex)
    history = []
    Sigma_t = kernel
    for t in range(int(Q)):
        w0 = np.exp(1j * rng.uniform(-np.pi, np.pi, M)) / np.sqrt(M)
        w, objectives, converged = mm_timeslot(Sigma_t, w0, max_iter=max_iter, rel_tol=rel_tol,
                                               majorizer=majorizer, accelerate=accelerate)
        history.append({"objective" : objectives, "converged" : converged, "iterations" : len(objectives) - 1})
        W[:, t] = w
        Sigma_t = posterior_kernel_update(Sigma_t, w, sigma2)
    stalled = sum(not h["converged"] for h in history)
    if stalled:
        logger.warning(f"MM design: {stalled} of {Q} slots stopped at max_iter={max_iter}")
    logger.debug(f"MM design: M={M}, Q={Q}, majorizer={majorizer}, iterations={[h['iterations'] for h in history]}")
    return ObservationMatrix(W, Mode.UNIT_MODULUS, history=history)


def random_matrix(M : int, Q : int, mode : str, rng : np.random.Generator) -> ObservationMatrix:
    """Random baseline: 'gaussian-unit-norm' columns or 'phase-only' entries."""
    if mode == "gaussian-unit-norm":
        W = (rng.standard_normal((M, Q)) + 1j * rng.standard_normal((M, Q))) / np.sqrt(2 * M)
        W = W / np.linalg.norm(W, axis=0)
        return ObservationMatrix(W, Mode.UNIT_NORM)
    elif mode == "phase-only":
        W = np.exp(1j * rng.uniform(-np.pi, np.pi, (M, Q))) / np.sqrt(M)
        return ObservationMatrix(W, Mode.UNIT_MODULUS)
    raise UnknownMethodError(mode, ("gaussian-unit-norm", "phase-only"))


def top_q_matrix(basis : EigenBasis, Q : int) -> ObservationMatrix:
    """The Q principal eigenvectors; beyond the rank, an orthonormal completion of the eigenbasis."""
    M, K = basis.dimension, basis.rank
    if Q > M:
        raise InvalidInputError("top_q_matrix", f"cannot take {Q} orthonormal columns in dimension {M}")
    if Q <= K:
        W = basis.eigenvectors[:, :Q]
    else:
        completion = scipy.linalg.null_space(basis.eigenvectors.conj().T) if K else np.eye(M, dtype=complex)
        W = np.hstack([basis.eigenvectors, completion[:, :Q - K]])
    return ObservationMatrix(W, Mode.UNIT_NORM, selected=np.arange(Q))


def dft_matrix(M : int) -> ObservationMatrix:
    """Unitary M x M DFT, unit-norm columns with entries of modulus 1/sqrt(M)."""
    return ObservationMatrix(scipy.linalg.dft(M, scale="sqrtn"), Mode.UNIT_NORM)


def design_matrix(method     : str,
                  kernel     : Kernel,
                  sigma2     : float,
                  Q          : int,
                  rng        : Optional[np.random.Generator]=None,
                  basis      : Optional[EigenBasis]=None,
                  max_iter   : int=200,
                  rel_tol    : float=1e-6,
                  majorizer  : str="spectral",
                  accelerate : bool=True,
    ) -> ObservationMatrix:
    """
    Run the named designer on a prior kernel.

    Parameters:
    ----------
    method : str
        One of wf, if, mm, random-gaussian, random-phase, topq, dft.
    basis : EigenBasis, optional
        Precomputed eigenbasis of `kernel`.
    """
    if method not in DESIGNERS:
        raise UnknownMethodError(method, DESIGNERS)
    rng = rng if rng is not None else np.random.default_rng()
    M = kernel.size
    if method in ("wf", "if", "topq") and basis is None:
        basis = evd_hermitian(kernel)

    if method == "wf":
        return water_fill_matrix(basis, pilot_water_fill(basis.eigenvalues, sigma2, Q), Q)
    elif method == "if":
        return ice_fill(basis, sigma2, Q)[0]
    elif method == "mm":
        return mm_design(kernel, sigma2, Q, max_iter=max_iter, rel_tol=rel_tol, rng=rng,
                         majorizer=majorizer, accelerate=accelerate)
    elif method == "random-gaussian":
        return random_matrix(M, Q, "gaussian-unit-norm", rng)
    elif method == "random-phase":
        return random_matrix(M, Q, "phase-only", rng)
    elif method == "topq":
        return top_q_matrix(basis, Q)
    else:
        if Q != M:
            logger.warning(f"DFT observation needs Q = M, using Q={M} instead of {Q}")
        return dft_matrix(M)
