__all__ = []

import argparse
import numpy as np

from loguru   import logger
from tabulate import tabulate
from icefill import setup_logs
from icefill.models import ESTIMATORS
from icefill.kernels import evd_hermitian
from icefill.channel import draw_gaussian_channel, receive_pilots
from icefill.estimate import MmseEstimator, ls_estimate, omp_estimate, dft_dictionary
from icefill.storage import load_kernel, load_observation, load_vector, save_vector
from icefill.exceptions import ConfigError


def run_estimate(args):

    setup_logs( name = "estimate", level=args.message_level )
    prior = load_kernel(args.kernel)
    W = load_observation(args.observation)
    logger.info(f"loaded kernel {prior} and {W}.")

    truth = None
    if args.pilots_file:
        y = load_vector(args.pilots_file)
    else:
        rng = np.random.default_rng(args.seed)
        true_kernel = load_kernel(args.true_kernel) if args.true_kernel else prior
        truth = draw_gaussian_channel(evd_hermitian(true_kernel), rng)
        y = receive_pilots(truth, W, args.sigma2, rng)
        logger.info(f"drew a gaussian channel and {y.size} pilots with seed {args.seed}.")

    trace = float("nan")
    if args.estimator == "mmse":
        result = MmseEstimator(W, prior, args.sigma2)(y, truth)
        estimate, trace = result.posterior_mean, result.posterior_trace
    elif args.estimator == "ls":
        estimate = ls_estimate(W, y)
    else:
        if args.mx * args.my != W.num_antennas:
            raise ConfigError(f"--mx {args.mx} and --my {args.my} do not match {W.num_antennas} antennas")
        sparsity = args.sparsity if args.sparsity is not None else min(evd_hermitian(prior).rank, W.num_pilots)
        estimate = omp_estimate(W, dft_dictionary(args.mx, args.my), y, sparsity)

    save_vector(args.output, estimate, {"estimator" : args.estimator})
    logger.info(f"estimate written to {args.output}.")
    error = float(np.sum(np.abs(estimate - truth) ** 2)) if truth is not None else float("nan")
    table = tabulate([[args.estimator, W.num_pilots, trace, error]],
                     headers=["estimator", "Q", "posterior trace", "squared error"], tablefmt="psql")
    print(table)

#
# args
#
def estimate_parser():
    parser = argparse.ArgumentParser(description = '', add_help = False)

    parser.add_argument('-k','--kernel', action='store', dest='kernel', required = True,
                        help = "The prior kernel file the estimator believes in.")
    parser.add_argument('-w','--observation', action='store', dest='observation', required = True,
                        help = "The observation matrix file.")
    parser.add_argument('-e','--estimator', action='store', dest='estimator', default="mmse", choices=ESTIMATORS,
                        help = "The channel estimator.")
    parser.add_argument('-y','--pilots-file', action='store', dest='pilots_file', default=None,
                        help = "Received pilots; when missing a gaussian channel and pilots are drawn.")
    parser.add_argument('-t','--true-kernel', action='store', dest='true_kernel', default=None,
                        help = "Kernel of the drawn channel (default: the prior kernel).")
    parser.add_argument('--sigma2', action='store', dest='sigma2', type=float, default=1.0,
                        help = "The noise variance.")
    parser.add_argument('--seed', action='store', dest='seed', type=int, default=0,
                        help = "The seed of the drawn channel and noise.")
    parser.add_argument('--sparsity', action='store', dest='sparsity', type=int, default=None,
                        help = "OMP sparsity (default: kernel rank).")
    parser.add_argument('--mx', action='store', dest='mx', type=int, default=8,
                        help = "Horizontal antennas of the OMP DFT dictionary.")
    parser.add_argument('--my', action='store', dest='my', type=int, default=8,
                        help = "Vertical antennas of the OMP DFT dictionary.")
    parser.add_argument('-o','--out', action='store', dest='output', required = True,
                        help = "The output channel estimate file.")
    parser.add_argument("--message-level", action="store", dest="message_level", default="INFO",
                        help="Set the logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL). Default is INFO.")
    return [parser]
