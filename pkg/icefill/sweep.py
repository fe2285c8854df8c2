"""
Config-driven Monte-Carlo sweeps.

For every axis value the runner builds the true kernel and the prior kernel,
designs one observation matrix per designer, then runs the trials: trial i
draws its channel and noise from default_rng(base_seed + i), so every designer
sees the same channel realizations and a rerun reproduces the same numbers.
"""

__all__ = [
    "SweepPoint",
    "clustered_kernel",
    "build_point",
    "run_sweep",
    "dump",
    "dumps",
    "load",
    "print_results",
    "CSV_VERSION",
]

import os
import io
import csv
import math
import numpy as np

from dataclasses import dataclass
from typing      import Optional, Dict, List, Tuple
from filelock    import FileLock
from tabulate    import tabulate
from loguru      import logger
from time        import time

from icefill import get_hash
from icefill.models import (get_context, ExperimentConfig, UpaGeometry, Kernel, EigenBasis,
                            ObservationMatrix, SweepRow, SweepResult, SWEEP_COLUMNS)
from icefill.kernels import (evd_hermitian, statistical_kernel, exponential_kernel, bessel_kernel,
                             kernel_from_basis, mean_eigenvalue)
from icefill.channel import (ClusteredChannelParams, draw_clustered_batch, draw_clustered_channel,
                             draw_gaussian_channel, receive_pilots, channel_power, noise_variance)
from icefill.design import design_matrix
from icefill.estimate import MmseEstimator, ls_estimate, omp_estimate, dft_dictionary
from icefill.analysis import mse_mismatched, nmse_db
from icefill.backends import TrialPool
from icefill.exceptions import ConfigError, InvalidInputError


CSV_VERSION = "v1"

# draws per block when accumulating the clustered sample covariance
KERNEL_BLOCK = 10000


@dataclass
class SweepPoint:
    """Everything the trials of one axis value share."""
    value    : float
    geometry : UpaGeometry
    truth    : Kernel
    basis    : EigenBasis     # eigenbasis of the truth, draws gaussian channels
    prior    : Kernel         # kernel the designers and the MMSE estimator believe in
    power    : float          # E‖h‖²
    sigma2   : float
    q        : int


def _channel_params(config : ExperimentConfig) -> ClusteredChannelParams:
    ch = config.channel
    return ClusteredChannelParams(carrier_freq     = config.geometry.carrier_freq,
                                  num_clusters     = ch.num_clusters,
                                  rays_per_cluster = ch.rays_per_cluster,
                                  angle_spread_deg = ch.angle_spread_deg,
                                  delay_spread_ns  = ch.delay_spread_ns)


def clustered_kernel(geom        : UpaGeometry,
                     params      : ClusteredChannelParams,
                     num_samples : int,
                     seed        : int,
                     cache_dir   : Optional[str]=None,
    ) -> Kernel:
    """
    Sample covariance of `num_samples` clustered draws, computed once per
    geometry and kept in the process context (and in `cache_dir` when given).
    """
    key = ("clustered", geom.key(), params, num_samples, seed)
    ctx = get_context()
    if key in ctx.kernels:
        return ctx.kernels[key]

    path = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        path = os.path.join(cache_dir, f"clustered-{get_hash(repr(key))[:16]}.npy")
    if path:
        with FileLock(f"{path}.lock"):
            if os.path.exists(path):
                logger.debug(f"loading clustered kernel from {path}")
                kernel = Kernel(np.load(path), label="sample")
                ctx.kernels[key] = kernel
                return kernel

    logger.info(f"estimating clustered kernel for {geom} from {num_samples} draws")
    rng = np.random.default_rng(seed)
    accumulated = np.zeros((geom.num_antennas, geom.num_antennas), dtype=complex)
    remaining = num_samples
    while remaining > 0:
        count = min(KERNEL_BLOCK, remaining)
        samples = draw_clustered_batch(geom, params, rng, count)
        accumulated += samples.T @ samples.conj()
        remaining -= count
    matrix = accumulated / num_samples
    kernel = Kernel(0.5 * (matrix + matrix.conj().T), label="sample")
    ctx.kernels[key] = kernel
    if path:
        with FileLock(f"{path}.lock"):
            np.save(path, kernel.matrix)
    return kernel


def _clustered_power(geom : UpaGeometry, params : ClusteredChannelParams, num_samples : int, seed : int) -> float:
    key = ("clustered", geom.key(), params, num_samples, seed)
    ctx = get_context()
    if key not in ctx.powers:
        ctx.powers[key] = channel_power(geom, params, np.random.default_rng(seed + 1), num_samples)
    return ctx.powers[key]


def _true_kernel(config : ExperimentConfig, geom : UpaGeometry) -> Kernel:
    ch = config.channel
    if ch.source == "clustered" or ch.kernel == "clustered":
        kernel = clustered_kernel(geom, _channel_params(config), ch.kernel_samples, ch.kernel_seed, ch.cache_dir)
    elif ch.kernel == "exponential":
        kernel = exponential_kernel(geom, ch.eta1)
    else:
        kernel = bessel_kernel(geom, ch.eta2)
    if ch.source == "gaussian" and ch.rank is not None:
        kernel = kernel_from_basis(evd_hermitian(kernel), rank=ch.rank, label=kernel.label)
    return kernel.relabel("perfect")


def _prior_kernel(config : ExperimentConfig, geom : UpaGeometry, truth : Kernel, sigma_h2_db : float) -> Kernel:
    name = config.kernel.name
    if name == "perfect":
        return truth
    elif name == "statistical":
        return statistical_kernel(truth, mean_eigenvalue(truth) * 10 ** (sigma_h2_db / 10))
    elif name == "exponential":
        return exponential_kernel(geom, config.kernel.eta1)
    return bessel_kernel(geom, config.kernel.eta2)


def build_point(config : ExperimentConfig, value : float) -> SweepPoint:
    """Resolve one axis value into kernels, noise level and pilot count."""
    axis = config.sweep.axis
    g = config.geometry
    spacing = value if axis == "spacing" else g.spacing
    geom = UpaGeometry.from_ratio(g.mx, g.my, spacing, carrier_freq=g.carrier_freq)
    q = int(value) if axis == "q" else config.design.q
    snr_db = value if axis == "snr_db" else config.sweep.snr_db
    sigma_h2_db = value if axis == "sigma_h2" else config.kernel.sigma_h2_db

    truth = _true_kernel(config, geom)
    basis = evd_hermitian(truth)
    prior = _prior_kernel(config, geom, truth, sigma_h2_db)
    if config.channel.source == "clustered":
        power = _clustered_power(geom, _channel_params(config), config.channel.power_samples, config.channel.kernel_seed)
    else:
        power = truth.trace
    sigma2 = noise_variance(power, snr_db)
    logger.debug(f"point {axis}={value}: M={geom.num_antennas}, K={basis.rank}, Q={q}, σ²={sigma2:.6g}")
    return SweepPoint(value, geom, truth, basis, prior, power, sigma2, q)


def _validate(config : ExperimentConfig):
    if config.sweep.axis == "sigma_h2" and config.kernel.name != "statistical":
        raise ConfigError("the sigma_h2 axis needs the statistical prior kernel")
    if config.channel.source == "clustered" and config.channel.rank is not None:
        raise ConfigError("channel.rank truncates gaussian-source kernels only")


def _run_designer(config     : ExperimentConfig,
                  point      : SweepPoint,
                  W          : ObservationMatrix,
                  designer   : str,
                  pool       : TrialPool,
    ) -> List[SweepRow]:
    estimators = config.estimation.estimators
    base_seed = config.run.base_seed
    geom = point.geometry
    params = _channel_params(config)
    gaussian = config.channel.source == "gaussian"

    mmse = MmseEstimator(W, point.prior, point.sigma2) if "mmse" in estimators else None
    dictionary = dft_dictionary(geom.mx, geom.my) if "omp" in estimators else None
    sparsity = config.estimation.omp_sparsity or point.basis.rank
    sparsity = min(sparsity, W.num_pilots)

    def trial(i : int) -> Dict[str, Tuple[float, float]]:
        rng = np.random.default_rng(base_seed + i)
        h = draw_gaussian_channel(point.basis, rng) if gaussian else draw_clustered_channel(geom, params, rng)
        y = receive_pilots(h, W, point.sigma2, rng)
        energy = float(np.sum(np.abs(h) ** 2))
        out = {}
        for name in estimators:
            if name == "mmse":
                estimate = mmse(y).posterior_mean
            elif name == "ls":
                estimate = ls_estimate(W, y)
            else:
                estimate = omp_estimate(W, dictionary, y, sparsity)
            error = float(np.sum(np.abs(estimate - h) ** 2))
            out[name] = (error, error / energy if energy > 0 else math.nan)
        return out

    start = time()
    outcomes = pool.run(trial, range(config.run.trials))
    wall_time = time() - start

    rows = []
    n = len(outcomes)
    for name in estimators:
        mse = math.fsum(o[name][0] for o in outcomes) / n
        nmse = math.fsum(o[name][1] for o in outcomes) / n
        delta = math.nan
        if name == "mmse":
            delta = mse_mismatched(W, point.prior, point.truth, point.sigma2)
        elif name == "ls":
            inverse = np.linalg.inv(W.H)
            delta = point.sigma2 * float(np.sum(np.abs(inverse) ** 2))
        rows.append(SweepRow(designer         = designer,
                             estimator        = name,
                             axis             = config.sweep.axis,
                             value            = float(point.value),
                             nmse_db          = 10 * math.log10(nmse) if nmse > 0 else -math.inf,
                             mse              = mse,
                             delta            = delta,
                             analytic_nmse_db = nmse_db(delta, point.power) if not math.isnan(delta) else math.nan,
                             trials           = n,
                             wall_time        = wall_time))
    return rows


def run_sweep(config : ExperimentConfig) -> SweepResult:
    """
    Run every designer/estimator pair over the sweep axis.

    Raises:
    ------
    ConfigError
        If the designer/estimator/kernel combination is inconsistent.
    """
    _validate(config)
    result = SweepResult(config_hash=get_hash(config.dumps()))
    pool = TrialPool(config.run.workers)
    for axis_index, value in enumerate(config.sweep.values):
        point = build_point(config, value)
        logger.info(f"{config.sweep.axis} = {value}: {len(config.design.designers)} designers, {config.run.trials} trials")
        for designer_index, designer in enumerate(config.design.designers):
            rng = np.random.default_rng([config.run.base_seed, axis_index, designer_index])
            W = design_matrix(designer, point.prior, point.sigma2, point.q, rng=rng,
                              basis=evd_hermitian(point.prior) if point.prior is not point.truth else point.basis,
                              max_iter=config.design.mm_max_iter, rel_tol=config.design.mm_rel_tol,
                              majorizer=config.design.mm_majorizer, accelerate=config.design.mm_accelerate)
            for row in _run_designer(config, point, W, designer, pool):
                result.append(row)
    logger.debug(f"sweep done: {pool.metrics()}")
    return result


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps(result : SweepResult, timing : bool=False) -> str:
    buffer = io.StringIO()
    buffer.write(f"# icefill-sweep {CSV_VERSION} config={result.config_hash}\n")
    columns = SWEEP_COLUMNS + (["wall_time"] if timing else [])
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in result:
        writer.writerow({key : _format(value) for key, value in row.to_dict(timing=timing).items()})
    return buffer.getvalue()


def dump(result : SweepResult, path : str, timing : bool=False):
    """Write the versioned sweep CSV; wall time only with `timing`."""
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with FileLock(f"{path}.lock"):
        with open(path, "w") as f:
            f.write(dumps(result, timing=timing))
    logger.info(f"wrote {len(result)} rows to {path}")


def load(path : str) -> SweepResult:
    if not os.path.exists(path):
        raise InvalidInputError("load", f"file {path} does not exist")
    with open(path, "r") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("# icefill-sweep"):
        raise InvalidInputError("load", f"{path} is not a sweep file")
    tokens = lines[0][1:].split()
    if tokens[1] != CSV_VERSION:
        raise InvalidInputError("load", f"unsupported sweep file version {tokens[1]}")
    config_hash = next((t.split("=", 1)[1] for t in tokens if t.startswith("config=")), "")
    reader = csv.DictReader([line for line in lines if not line.startswith("#")])
    return SweepResult([SweepRow.from_dict(row) for row in reader], config_hash=config_hash)


def print_results(result : SweepResult):
    logger.info("Sweep results:")
    cols = ["designer", "estimator", "axis", "value", "NMSE [dB]", "analytic [dB]", "trials", "time [s]"]
    rows = [[r.designer, r.estimator, r.axis, r.value, f"{r.nmse_db:.3f}",
             "" if math.isnan(r.analytic_nmse_db) else f"{r.analytic_nmse_db:.3f}",
             r.trials, f"{r.wall_time:.2f}"] for r in result]
    table = tabulate(rows, headers=cols, tablefmt="psql")
    print(table)
