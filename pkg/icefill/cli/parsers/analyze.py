__all__ = []

import argparse

from loguru   import logger
from tabulate import tabulate
from icefill import setup_logs
from icefill.analysis import analytic_rows, asymptotic_mse, ANALYTIC_METHODS, REGIMES
from icefill.storage import load_spectrum, save_table


ANALYZE_COLUMNS = ["method", "Q", "sigma2", "sigma_h2", "delta"]


def run_analyze(args):

    setup_logs( name = "analyze", level=args.message_level )
    eigenvalues = load_spectrum(args.spectrum)
    logger.info(f"loaded {eigenvalues.size} eigenvalues from {args.spectrum}.")

    rows = analytic_rows(args.method, eigenvalues, args.pilots, args.sigma2, sigma_h2=args.sigma_h2, M=args.M)
    if args.output:
        save_table(args.output, rows, ANALYZE_COLUMNS)
        logger.info(f"analytic MSE written to {args.output}.")
    table = tabulate([[row[c] for c in ANALYZE_COLUMNS] for row in rows], headers=ANALYZE_COLUMNS, tablefmt="psql")
    print(table)

    if args.regime:
        params = {"eigenvalues" : eigenvalues[eigenvalues > 0], "q_grid" : args.pilots, "sigma2" : args.sigma2,
                  "M" : args.M or eigenvalues.size}
        if args.regime == "statistical":
            params["sigma_h2"] = args.sigma_h2
            params["eigenvalues"] = eigenvalues
        report = asymptotic_mse(args.method, args.regime, params)
        print(tabulate([list(report.to_dict().values())], headers=list(report.to_dict().keys()), tablefmt="psql"))

#
# args
#
def analyze_parser():
    parser = argparse.ArgumentParser(description = '', add_help = False)

    parser.add_argument('-s','--spectrum', action='store', dest='spectrum', required = True,
                        help = "The kernel eigenvalue file.")
    parser.add_argument('-m','--method', action='store', dest='method', required = True, choices=ANALYTIC_METHODS,
                        help = "The designer whose MSE is evaluated.")
    parser.add_argument('-q','--pilots', action='store', dest='pilots', type=int, nargs='+', required = True,
                        help = "The pilot counts Q.")
    parser.add_argument('--sigma2', action='store', dest='sigma2', type=float, default=1.0,
                        help = "The noise variance.")
    parser.add_argument('--sigma-h2', action='store', dest='sigma_h2', type=float, default=0.0,
                        help = "The kernel estimation error variance (0 for a perfect kernel).")
    parser.add_argument('-M', action='store', dest='M', type=int, default=None,
                        help = "The number of antennas (required by rnd).")
    parser.add_argument('--fit', action='store', dest='regime', default=None, choices=REGIMES,
                        help = "Also fit the log-log slope of the MSE over the pilot grid in this regime.")
    parser.add_argument('-o','--out', action='store', dest='output', default=None,
                        help = "The output CSV file.")
    parser.add_argument("--message-level", action="store", dest="message_level", default="INFO",
                        help="Set the logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL). Default is INFO.")
    return [parser]
