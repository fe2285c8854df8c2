__all__ = []

import os
import argparse
import numpy as np

from loguru import logger
from icefill import setup_logs
from icefill.models import DESIGNERS, MAJORIZERS
from icefill.kernels import evd_hermitian
from icefill.design import design_matrix, pilot_water_fill, ice_fill
from icefill.storage import load_kernel, save_observation, save_allocation


def _allocation_path(args) -> str:
    if args.allocation:
        return args.allocation
    stem, _ = os.path.splitext(args.output)
    return f"{stem}.alloc.csv"


def run_design(args):

    setup_logs( name = "design", level=args.message_level )
    logger.info(f"loading kernel from {args.kernel}.")
    kernel = load_kernel(args.kernel)
    basis = evd_hermitian(kernel)
    rng = np.random.default_rng(args.seed)

    W = design_matrix(args.method, kernel, args.sigma2, args.pilots, rng=rng, basis=basis,
                      max_iter=args.max_iter, rel_tol=args.rel_tol,
                      majorizer=args.majorizer, accelerate=not args.no_accelerate)
    save_observation(args.output, W)
    logger.info(f"observation matrix {W.num_antennas}x{W.num_pilots} ({args.method}) written to {args.output}.")

    if args.method == "if":
        allocation = ice_fill(basis, args.sigma2, args.pilots)[1]
    elif args.method == "wf":
        allocation = pilot_water_fill(basis.eigenvalues, args.sigma2, args.pilots)
    else:
        return
    path = _allocation_path(args)
    save_allocation(path, allocation)
    logger.info(f"allocation written to {path}.")

#
# args
#
def design_parser():
    parser = argparse.ArgumentParser(description = '', add_help = False)

    parser.add_argument('-k','--kernel', action='store', dest='kernel', required = True,
                        help = "The prior kernel file (.csv or .npy).")
    parser.add_argument('-m','--method', action='store', dest='method', required = True, choices=DESIGNERS,
                        help = "The observation matrix designer.")
    parser.add_argument('-q','--pilots', action='store', dest='pilots', type=int, required = True,
                        help = "The number of pilot slots Q.")
    parser.add_argument('--sigma2', action='store', dest='sigma2', type=float, default=1.0,
                        help = "The noise variance.")
    parser.add_argument('--seed', action='store', dest='seed', type=int, default=0,
                        help = "The seed of the random designers.")
    parser.add_argument('--max-iter', action='store', dest='max_iter', type=int, default=200,
                        help = "MM iterations per pilot slot.")
    parser.add_argument('--rel-tol', action='store', dest='rel_tol', type=float, default=1e-6,
                        help = "MM relative objective tolerance.")
    parser.add_argument('--majorizer', action='store', dest='majorizer', default="spectral", choices=MAJORIZERS,
                        help = "MM scalar majorizer: tightest bound or the trace bound.")
    parser.add_argument('--no-accelerate', action='store_true', dest='no_accelerate',
                        help = "Plain MM steps without extrapolation.")
    parser.add_argument('-o','--out', action='store', dest='output', required = True,
                        help = "The output observation matrix file.")
    parser.add_argument('-a','--allocation', action='store', dest='allocation', default=None,
                        help = "The allocation file for wf/if (default: <out>.alloc.csv).")
    parser.add_argument("--message-level", action="store", dest="message_level", default="INFO",
                        help="Set the logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL). Default is INFO.")
    return [parser]
