"""
Channel realizations and pilot reception.

Two sources are available: Gaussian draws from a kernel eigenbasis, and a
narrowband clustered multipath model with the 3GPP TR 38.901 style parameters
of the desk-scale protocol (23 clusters of 20 rays, uniform cluster angles in
(-90°, 90°), ±5° ray offsets, ±30 ns cluster delays at 3.5 GHz).
"""

__all__ = [
    "ClusteredChannelParams",
    "steering_vector",
    "draw_clustered_channel",
    "draw_clustered_batch",
    "draw_gaussian_channel",
    "draw_gaussian_batch",
    "receive_pilots",
    "channel_power",
    "noise_variance",
]

import numpy as np

from dataclasses import dataclass
from typing      import Union
from loguru      import logger

from icefill.models import UpaGeometry, EigenBasis, ObservationMatrix
from icefill.exceptions import InvalidInputError


# rays per vectorized chunk when drawing clustered channels
CHUNK = 256


@dataclass(frozen=True)
class ClusteredChannelParams:
    carrier_freq     : float = 3.5e9
    num_clusters     : int = 23
    rays_per_cluster : int = 20
    angle_spread_deg : float = 5.0
    delay_spread_ns  : float = 30.0
    max_angle_deg    : float = 90.0

    def __post_init__(self):
        if self.num_clusters < 1 or self.rays_per_cluster < 1:
            raise InvalidInputError("ClusteredChannelParams", "cluster and ray counts must be >= 1")
        if self.angle_spread_deg < 0 or self.delay_spread_ns < 0:
            raise InvalidInputError("ClusteredChannelParams", "spreads must be nonnegative")


def _axis_phases(geom : UpaGeometry, theta : np.ndarray, phi : np.ndarray):
    mx, my = geom.centered_indices()
    k = geom.wavenumber_spacing
    u = np.sin(theta) * np.cos(phi)
    v = np.sin(phi)
    ax = np.exp(1j * k * mx[..., :, None] * u[..., None, :])
    ay = np.exp(1j * k * my[..., :, None] * v[..., None, :])
    return ax, ay


def steering_vector(geom : UpaGeometry, theta : float, phi : float) -> np.ndarray:
    """UPA response a(θ, φ) with entries exp(j 2πd/λ (m_x sinθ cosφ + m_y sinφ))."""
    ax, ay = _axis_phases(geom, np.atleast_1d(theta), np.atleast_1d(phi))
    return np.kron(ax[:, 0], ay[:, 0])


def draw_clustered_batch(geom : UpaGeometry, params : ClusteredChannelParams, rng : np.random.Generator, count : int) -> np.ndarray:
    """
    Draw `count` clustered channels, one per row.

    h = 1/sqrt(C R) Σ_c Σ_r g_c e^{-j2π f_c τ_c} e^{jΦ_{c,r}} a(θ_c + δθ_r, φ_c + δφ_r)

    with g_c ~ CN(0,1), θ_c, φ_c uniform on the maximum angle range, τ_c uniform
    on the delay spread, per-ray offsets uniform on the angle spread and per-ray
    initial phases Φ uniform on (-π, π). The steering vector separates as
    a_x ⊗ a_y, so each ray costs Mx + My exponentials.
    """
    C, R = params.num_clusters, params.rays_per_cluster
    max_angle = np.deg2rad(params.max_angle_deg)
    spread = np.deg2rad(params.angle_spread_deg)
    delay = params.delay_spread_ns * 1e-9
    channels = np.empty((count, geom.num_antennas), dtype=complex)

    for start in range(0, count, CHUNK):
        n = min(CHUNK, count - start)
        gains = (rng.standard_normal((n, C)) + 1j * rng.standard_normal((n, C))) / np.sqrt(2)
        theta_c = rng.uniform(-max_angle, max_angle, (n, C))
        phi_c = rng.uniform(-max_angle, max_angle, (n, C))
        tau = rng.uniform(-delay, delay, (n, C))
        theta = theta_c[:, :, None] + rng.uniform(-spread, spread, (n, C, R))
        phi = phi_c[:, :, None] + rng.uniform(-spread, spread, (n, C, R))
        ray_phase = rng.uniform(-np.pi, np.pi, (n, C, R))

        coef = (gains * np.exp(-2j * np.pi * params.carrier_freq * tau))[:, :, None] * np.exp(1j * ray_phase)
        coef = coef.reshape(n, C * R) / np.sqrt(C * R)
        ax, ay = _axis_phases(geom, theta.reshape(n, C * R), phi.reshape(n, C * R))
        # (n, Mx, CR) @ (n, CR, My) -> (n, Mx, My), row-major over (x, y)
        H = (ax * coef[:, None, :]) @ np.transpose(ay, (0, 2, 1))
        channels[start:start + n] = H.reshape(n, -1)
    return channels


def draw_clustered_channel(geom : UpaGeometry, params : ClusteredChannelParams, rng : np.random.Generator) -> np.ndarray:
    """One clustered realization h (length M)."""
    return draw_clustered_batch(geom, params, rng, 1)[0]


def draw_gaussian_batch(basis : EigenBasis, rng : np.random.Generator, count : int) -> np.ndarray:
    """`count` draws of h = U_K Λ_K^{1/2} g, g ~ CN(0, I_K), one per row."""
    K = basis.rank
    if K == 0:
        return np.zeros((count, basis.dimension), dtype=complex)
    g = (rng.standard_normal((count, K)) + 1j * rng.standard_normal((count, K))) / np.sqrt(2)
    return (g * np.sqrt(basis.eigenvalues)) @ basis.eigenvectors.T


def draw_gaussian_channel(basis : EigenBasis, rng : np.random.Generator) -> np.ndarray:
    """One draw h ~ CN(0, Σ_h) from the kernel eigenbasis."""
    return draw_gaussian_batch(basis, rng, 1)[0]


def receive_pilots(h : np.ndarray, W : Union[ObservationMatrix, np.ndarray], sigma2 : float, rng : np.random.Generator) -> np.ndarray:
    """y = W^H h + z with z ~ CN(0, σ² I_Q)."""
    matrix = W.matrix if isinstance(W, ObservationMatrix) else np.asarray(W)
    h = np.asarray(h).reshape(-1)
    if matrix.ndim != 2 or matrix.shape[1] < 1:
        raise InvalidInputError("receive_pilots", "observation matrix needs at least one column")
    if matrix.shape[0] != h.size:
        raise InvalidInputError("receive_pilots", f"channel length {h.size} does not match {matrix.shape[0]} antennas")
    if sigma2 < 0:
        raise InvalidInputError("receive_pilots", f"noise variance must be nonnegative, got {sigma2}")
    y = matrix.conj().T @ h
    if sigma2 > 0:
        Q = matrix.shape[1]
        y = y + np.sqrt(sigma2 / 2) * (rng.standard_normal(Q) + 1j * rng.standard_normal(Q))
    return y


def channel_power(geom : UpaGeometry, params : ClusteredChannelParams, rng : np.random.Generator, num_samples : int=10000) -> float:
    """Empirical E‖h‖² of the clustered model."""
    channels = draw_clustered_batch(geom, params, rng, num_samples)
    power = float(np.mean(np.sum(np.abs(channels) ** 2, axis=1)))
    logger.debug(f"clustered channel power over {num_samples} draws: {power:.6g}")
    return power


def noise_variance(power : float, snr_db : float) -> float:
    """σ² = E‖h‖² / SNR."""
    return power / 10 ** (snr_db / 10)
