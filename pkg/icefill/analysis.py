"""
Closed-form MSE of the designers and the checks built on them.

Perfect kernel: water-filling, ice-filling and random observation MSE on the
eigenvalues of the prior. Mismatched kernel: the exact MSE of an MMSE estimator
that believes in the wrong kernel, either from W or from the Gram matrix W W^H,
and its diagonal form when the estimation error is white (Σ_h + σ_h² I).
"""

__all__ = [
    "MismatchOperators",
    "ScalingReport",
    "mismatch_operators",
    "mse_waterfilling",
    "mse_icefilling",
    "mse_gap_bound",
    "mse_random",
    "mse_mismatched",
    "mse_mismatched_gram",
    "statistical_powers",
    "mse_statistical",
    "mse_rank_forced",
    "verify_quantization",
    "asymptotic_mse",
    "analytic_rows",
    "switch_matrix",
    "ice_level_gap_violation",
    "nmse_db",
    "ANALYTIC_METHODS",
    "REGIMES",
]

import math
import numpy as np
import scipy.linalg

from dataclasses import dataclass, field
from typing import Union, Optional, Dict, List, Sequence
from loguru import logger

from icefill.models import Kernel, ObservationMatrix, PowerAllocation, PilotAllocation
from icefill.design import water_fill, ice_fill_spectrum
from icefill.exceptions import InvalidInputError, NumericError, BoundNotApplicableError, UnknownMethodError, ConfigError


ANALYTIC_METHODS = ("wf", "if", "rnd")
REGIMES          = ("perfect", "statistical", "statistical-infinite-error")

# σ_h² used for the infinite-error regime when none is given
INFINITE_ERROR_SIGMA_H2 = 1e6


def _as_matrix(W : Union[ObservationMatrix, np.ndarray]) -> np.ndarray:
    matrix = W.matrix if isinstance(W, ObservationMatrix) else np.asarray(W, dtype=complex)
    return matrix.reshape(matrix.shape[0], -1)


def _spectrum(eigenvalues) -> np.ndarray:
    return np.asarray(eigenvalues, dtype=float).reshape(-1)


def _check_noise(what : str, sigma2 : float):
    if not sigma2 > 0:
        raise InvalidInputError(what, f"noise variance must be positive, got {sigma2}")


@dataclass
class MismatchOperators:
    Pi    : np.ndarray   # Q x M, (W^H Σ W + σ² I)^{-1} W^H Σ
    Omega : np.ndarray   # M x M, W (W^H Σ W + σ² I)^{-1} W^H
    Xi    : np.ndarray   # M x M, W (W^H Σ W + σ² I)^{-2} W^H


@dataclass
class ScalingReport:
    method    : str
    regime    : str
    slope     : float
    prefactor : float
    grid      : List[float] = field(default_factory=list)
    deltas    : List[float] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {"method" : self.method, "regime" : self.regime, "slope" : self.slope, "prefactor" : self.prefactor}


def _gram_operators(gram : np.ndarray, used : np.ndarray, sigma2 : float):
    """Ω and Ξ written with G = W W^H only, C = (I + Σ G/σ²)^{-1} Σ."""
    M = used.shape[0]
    C = np.linalg.solve(np.eye(M) + used @ gram / sigma2, used)
    GC = gram @ C
    Omega = gram / sigma2 - GC @ gram / sigma2 ** 2
    Xi = gram / sigma2 ** 2 - 2 * GC @ gram / sigma2 ** 3 + GC @ GC @ gram / sigma2 ** 4
    return Omega, Xi


def mismatch_operators(W : Union[ObservationMatrix, np.ndarray], used_kernel : Kernel, sigma2 : float) -> MismatchOperators:
    _check_noise("mismatch_operators", sigma2)
    matrix = _as_matrix(W)
    if matrix.shape[0] != used_kernel.size:
        raise InvalidInputError("mismatch_operators", f"W has {matrix.shape[0]} rows for a kernel of size {used_kernel.size}")
    A = matrix.conj().T @ used_kernel.matrix @ matrix + sigma2 * np.eye(matrix.shape[1])
    A = 0.5 * (A + A.conj().T)
    try:
        factor = scipy.linalg.cho_factor(A, lower=True)
    except np.linalg.LinAlgError as e:
        raise NumericError("mismatch_operators", str(e))
    Pi = scipy.linalg.cho_solve(factor, matrix.conj().T @ used_kernel.matrix)
    Omega, Xi = _gram_operators(matrix @ matrix.conj().T, used_kernel.matrix, sigma2)
    return MismatchOperators(Pi, Omega, Xi)


def mse_waterfilling(eigenvalues, p : Union[PowerAllocation, np.ndarray], sigma2 : float) -> float:
    """Σ_k λ_k σ²/(p_k λ_k + σ²)."""
    lam = _spectrum(eigenvalues)
    p = _spectrum(p.powers if isinstance(p, PowerAllocation) else p)
    if p.size != lam.size:
        raise InvalidInputError("mse_waterfilling", f"{p.size} powers for {lam.size} eigenvalues")
    _check_noise("mse_waterfilling", sigma2)
    return math.fsum(lam * sigma2 / (p * lam + sigma2))


def mse_icefilling(eigenvalues, n : Union[PilotAllocation, np.ndarray], sigma2 : float) -> float:
    """Σ_k λ_k σ²/(n_k λ_k + σ²)."""
    lam = _spectrum(eigenvalues)
    n = _spectrum(n.reuse if isinstance(n, PilotAllocation) else n)
    if n.size != lam.size:
        raise InvalidInputError("mse_icefilling", f"{n.size} reuse frequencies for {lam.size} eigenvalues")
    _check_noise("mse_icefilling", sigma2)
    return math.fsum(lam * sigma2 / (n * lam + sigma2))


def mse_gap_bound(eigenvalues, p : Union[PowerAllocation, np.ndarray], sigma2 : float) -> float:
    """
    Upper bound on |δ_wf - δ_if| from |n_k - p_k| < 1,
    Σ_k λ_k² σ² / ((p_k λ_k + σ²)((p_k - 1) λ_k + σ²)).

    Raises:
    ------
    BoundNotApplicableError
        When some p_k ≤ 1.
    """
    lam = _spectrum(eigenvalues)
    p = _spectrum(p.powers if isinstance(p, PowerAllocation) else p)
    if p.size != lam.size:
        raise InvalidInputError("mse_gap_bound", f"{p.size} powers for {lam.size} eigenvalues")
    if np.any(p <= 1):
        raise BoundNotApplicableError(f"requires every p_k > 1, smallest is {p.min():.6g}")
    return math.fsum(lam ** 2 * sigma2 / ((p * lam + sigma2) * ((p - 1) * lam + sigma2)))


def mse_random(eigenvalues, Q : float, M : int, sigma2 : float) -> float:
    """Σ_k λ_k σ²/((Q/M) λ_k + σ²), the large-Q MSE of a random W."""
    lam = _spectrum(eigenvalues)
    if Q < 0 or M < 1:
        raise InvalidInputError("mse_random", f"need Q >= 0 and M >= 1, got Q={Q}, M={M}")
    _check_noise("mse_random", sigma2)
    return math.fsum(lam * sigma2 / ((Q / M) * lam + sigma2))


def mse_mismatched(W           : Union[ObservationMatrix, np.ndarray],
                   used_kernel : Kernel,
                   true_kernel : Kernel,
                   sigma2      : float,
    ) -> float:
    """Tr((Π^H W^H - I) Σ_h (W Π - I)) + σ² Tr(Π^H Π)."""
    if used_kernel.size != true_kernel.size:
        raise InvalidInputError("mse_mismatched", "kernels differ in size")
    matrix = _as_matrix(W)
    ops = mismatch_operators(matrix, used_kernel, sigma2)
    E = matrix @ ops.Pi - np.eye(true_kernel.size)
    bias = np.real(np.trace(E.conj().T @ true_kernel.matrix @ E))
    noise = sigma2 * np.real(np.sum(np.abs(ops.Pi) ** 2))
    return float(bias + noise)


def mse_mismatched_gram(WWH                : np.ndarray,
                        statistical_kernel : Kernel,
                        true_kernel        : Kernel,
                        sigma2             : float,
    ) -> float:
    """
    Same MSE as mse_mismatched, from the Gram matrix alone:
    Tr((Σ̂ Ω^H - I) Σ_h (Ω Σ̂ - I)) + σ² Tr(Σ̂ Ξ Σ̂).
    """
    _check_noise("mse_mismatched_gram", sigma2)
    gram = np.asarray(WWH, dtype=complex)
    M = statistical_kernel.size
    if gram.shape != (M, M) or true_kernel.size != M:
        raise InvalidInputError("mse_mismatched_gram", f"Gram matrix of shape {gram.shape} for kernels of size {M}")
    used = statistical_kernel.matrix
    Omega, Xi = _gram_operators(gram, used, sigma2)
    E = Omega @ used - np.eye(M)
    bias = np.real(np.trace(E.conj().T @ true_kernel.matrix @ E))
    noise = sigma2 * np.real(np.trace(used @ Xi @ used))
    return float(bias + noise)


def statistical_powers(method : str, eigenvalues, sigma_h2 : float, sigma2 : float, Q : int, M : int) -> np.ndarray:
    """
    Per-direction observation energies ψ_m under the kernel Σ_h + σ_h² I:
    water-filling or ice-filling on the shifted levels λ_m + σ_h², or Q/M for rnd.
    """
    if Q <= 0:
        raise InvalidInputError("mse_statistical", f"pilot count must be positive, got {Q}")
    if sigma_h2 < 0:
        raise InvalidInputError("mse_statistical", f"sigma_h2 must be nonnegative, got {sigma_h2}")
    lam = np.zeros(M)
    given = _spectrum(eigenvalues)
    if given.size > M:
        raise InvalidInputError("mse_statistical", f"{given.size} eigenvalues for M={M}")
    lam[:given.size] = given
    if np.any(np.diff(lam) > 0):
        raise InvalidInputError("mse_statistical", "eigenvalues must be sorted descending")
    mu = lam + sigma_h2
    live = mu > 0
    powers = np.zeros(M)
    if method == "wf":
        powers[live] = water_fill(mu[live], sigma2, Q).powers
    elif method == "if":
        powers[live] = ice_fill_spectrum(mu[live], sigma2, Q).reuse
    elif method == "rnd":
        powers[:] = Q / M
    else:
        raise UnknownMethodError(method, ANALYTIC_METHODS)
    return powers


def _unified_mse(lam : np.ndarray, mu : np.ndarray, powers : np.ndarray, sigma2 : float) -> float:
    """σ² Σ_m (λ_m σ² + ψ_m μ_m²)/(ψ_m μ_m + σ²)²."""
    return math.fsum(sigma2 * (lam * sigma2 + powers * mu ** 2) / (powers * mu + sigma2) ** 2)


def mse_statistical(method : str, eigenvalues, sigma_h2 : float, sigma2 : float, Q : int, M : int) -> float:
    """
    MSE of a designer run on the statistical kernel Σ_h + σ_h² I while the channel
    follows Σ_h. `eigenvalues` are the true ones, padded with zeros to M when shorter.
    """
    _check_noise("mse_statistical", sigma2)
    powers = statistical_powers(method, eigenvalues, sigma_h2, sigma2, Q, M)
    lam = np.zeros(M)
    given = _spectrum(eigenvalues)
    lam[:given.size] = given
    return _unified_mse(lam, lam + sigma_h2, powers, sigma2)


def mse_rank_forced(eigenvalues, sigma_h2 : float, sigma2 : float, Q : int) -> float:
    """
    MSE under the statistical kernel when only the K true eigen-directions get
    power, the powers being the perfect-kernel water-filling ones.
    """
    _check_noise("mse_rank_forced", sigma2)
    if Q <= 0:
        raise InvalidInputError("mse_rank_forced", f"pilot count must be positive, got {Q}")
    lam = _spectrum(eigenvalues)
    powers = water_fill(lam, sigma2, Q).powers
    return _unified_mse(lam, lam + sigma_h2, powers, sigma2)


def verify_quantization(n : Union[PilotAllocation, np.ndarray], p : Union[PowerAllocation, np.ndarray]) -> float:
    """max_k |n_k - p_k|; stays below one for matched allocations."""
    n = _spectrum(n.reuse if isinstance(n, PilotAllocation) else n)
    p = _spectrum(p.powers if isinstance(p, PowerAllocation) else p)
    if n.size != p.size:
        raise InvalidInputError("verify_quantization", f"{n.size} reuse frequencies for {p.size} powers")
    return float(np.max(np.abs(n - p), initial=0.0))


def _method_mse(method : str, regime : str, lam : np.ndarray, sigma2 : float, Q : int, M : int, sigma_h2 : float) -> float:
    if regime == "perfect":
        if method == "wf":
            return mse_waterfilling(lam, water_fill(lam, sigma2, Q), sigma2)
        elif method == "if":
            return mse_icefilling(lam, ice_fill_spectrum(lam, sigma2, Q), sigma2)
        elif method == "rnd":
            return mse_random(lam, Q, M, sigma2)
        raise UnknownMethodError(method, ANALYTIC_METHODS)
    return mse_statistical(method, lam, sigma_h2, sigma2, Q, M)


def asymptotic_mse(method : str, regime : str, params : Dict) -> ScalingReport:
    """
    Fit ln δ = slope · ln Q + ln prefactor over a grid of pilot counts.

    Parameters:
    ----------
    method : str
        wf, if or rnd.
    regime : str
        perfect, statistical or statistical-infinite-error.
    params : dict
        `eigenvalues` (required), `q_grid` (at least 5 values), `sigma2` (default 1),
        `M` (default: number of eigenvalues), `sigma_h2` (statistical regimes).
    """
    if regime not in REGIMES:
        raise UnknownMethodError(regime, REGIMES)
    if method not in ANALYTIC_METHODS:
        raise UnknownMethodError(method, ANALYTIC_METHODS)
    if "eigenvalues" not in params:
        raise ConfigError("asymptotic_mse needs 'eigenvalues'")
    lam = _spectrum(params["eigenvalues"])
    grid = [int(q) for q in params.get("q_grid", [64, 128, 256, 512, 1024, 2048, 4096])]
    if len(grid) < 5:
        raise InvalidInputError("asymptotic_mse", f"slope fits need at least 5 grid points, got {len(grid)}")
    sigma2 = float(params.get("sigma2", 1.0))
    M = int(params.get("M", lam.size))
    if regime == "perfect":
        sigma_h2 = 0.0
    elif regime == "statistical":
        sigma_h2 = float(params.get("sigma_h2", 0.0))
    else:
        sigma_h2 = float(params.get("sigma_h2", INFINITE_ERROR_SIGMA_H2))

    deltas = [_method_mse(method, regime, lam, sigma2, Q, M, sigma_h2) for Q in grid]
    slope, intercept = np.polyfit(np.log(grid), np.log(deltas), 1)
    logger.debug(f"asymptotic fit {method}/{regime}: slope={slope:.4f}, prefactor={math.exp(intercept):.6g}")
    return ScalingReport(method, regime, float(slope), float(math.exp(intercept)), grid, deltas)


def analytic_rows(method     : str,
                  eigenvalues,
                  q_grid     : Sequence[int],
                  sigma2     : float,
                  sigma_h2   : float=0.0,
                  M          : Optional[int]=None,
    ) -> List[Dict]:
    """
    Analytic MSE over a pilot grid as CSV-ready rows
    (method, Q, sigma2, sigma_h2, delta). The statistical formulas are used when
    σ_h² > 0 and reduce to the perfect ones at σ_h² = 0.
    """
    if method not in ANALYTIC_METHODS:
        raise UnknownMethodError(method, ANALYTIC_METHODS)
    lam = _spectrum(eigenvalues)
    if lam.size == 0 or np.any(lam < 0):
        raise InvalidInputError("analytic_rows", "spectrum must be non-empty and nonnegative")
    if method == "rnd" and M is None:
        raise ConfigError("method rnd needs the number of antennas M")
    M = lam.size if M is None else int(M)
    positive = lam[lam > 0]
    rows = []
    for Q in q_grid:
        if sigma_h2 > 0:
            delta = mse_statistical(method, lam, sigma_h2, sigma2, Q, M)
        else:
            delta = _method_mse(method, "perfect", positive, sigma2, Q, M, 0.0)
        rows.append({"method" : method, "Q" : int(Q), "sigma2" : float(sigma2), "sigma_h2" : sigma_h2, "delta" : delta})
    return rows


def switch_matrix(allocation : PilotAllocation) -> np.ndarray:
    """K x Q 0/1 matrix S with S[k_t, t] = 1, so that W_if = U_K S and S S^H = diag(n)."""
    S = np.zeros((allocation.reuse.size, allocation.num_pilots))
    S[allocation.order, np.arange(allocation.num_pilots)] = 1.0
    return S


def ice_level_gap_violation(allocation : PilotAllocation, sigma2 : Optional[float]=None) -> float:
    """
    Largest amount by which an assigned direction's ice level, minus the unit
    step it last took, exceeds the lowest final ice level. Nonpositive when the
    ice levels of assigned directions stay within one step of the floor.
    """
    sigma2 = allocation.sigma2 if sigma2 is None else sigma2
    levels = allocation.reuse + sigma2 / allocation.eigenvalues
    assigned = allocation.reuse > 0
    if not np.any(assigned):
        return -math.inf
    return float(np.max(levels[assigned] - 1.0) - levels.min())


def nmse_db(delta : float, trace : float) -> float:
    """10 log10(δ / Tr Σ_h)."""
    if not trace > 0:
        raise InvalidInputError("nmse_db", f"channel power must be positive, got {trace}")
    if not delta > 0:
        return -math.inf
    return 10.0 * math.log10(delta / trace)
