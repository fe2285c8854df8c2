#!/usr/bin/env python3
"""
Plot NMSE curves from one or more sweep CSV files (or folders holding them).
Empirical curves are solid, analytic ones dashed.
"""

import sys
import math
import argparse
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from loguru         import logger
from expand_folders import expand_folders
from icefill        import setup_logs, get_argparser_formatter
from icefill.sweep  import load

AXIS_LABELS = {
    "snr_db"   : "SNR [dB]",
    "q"        : "pilots Q",
    "spacing"  : "antenna spacing [d/λ]",
    "sigma_h2" : "kernel error σ_h² [dB]",
}


def collect(paths):
    files = []
    for path in paths:
        files.extend(f for f in expand_folders(path) if f.endswith(".csv"))
    return sorted(set(files))


def plot(files, output, analytic=True):
    fig, ax = plt.subplots(figsize=(8, 5))
    axis = None
    for path in files:
        result = load(path)
        pairs = sorted({(row.designer, row.estimator) for row in result})
        for designer, estimator in pairs:
            rows = sorted(result.select(designer, estimator), key=lambda r: r.value)
            axis = rows[0].axis
            x = [r.value for r in rows]
            line, = ax.plot(x, [r.nmse_db for r in rows], marker="o", label=f"{designer}/{estimator}")
            if analytic and not all(math.isnan(r.analytic_nmse_db) for r in rows):
                ax.plot(x, [r.analytic_nmse_db for r in rows], linestyle="--", color=line.get_color())
    ax.set_xlabel(AXIS_LABELS.get(axis, axis or ""))
    ax.set_ylabel("NMSE [dB]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="plot_sweep", formatter_class=get_argparser_formatter())
    parser.add_argument('inputs', nargs='+', help="Sweep CSV files or folders.")
    parser.add_argument('-o','--out', action='store', dest='output', default="sweep.png",
                        help="The output image.")
    parser.add_argument('--no-analytic', action='store_false', dest='analytic',
                        help="Hide the closed-form curves.")
    parser.add_argument("--message-level", action="store", dest="message_level", default="INFO",
                        help="Set the logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL). Default is INFO.")
    args = parser.parse_args(argv)
    setup_logs(name="plot", level=args.message_level)

    files = collect(args.inputs)
    if not files:
        logger.error(f"no sweep file found in {args.inputs}")
        sys.exit(2)
    logger.info(f"plotting {len(files)} sweep files.")
    plot(files, args.output, analytic=args.analytic)
    logger.info(f"figure written to {args.output}.")


if __name__ == "__main__":
    main()
