#!/usr/bin/env python3

import sys
import argparse

from loguru import logger
from icefill import get_argparser_formatter
from icefill.exceptions import ConfigError, InvalidInputError, NumericError, BoundNotApplicableError
from .parsers.design import design_parser, run_design
from .parsers.estimate import estimate_parser, run_estimate
from .parsers.analyze import analyze_parser, run_analyze
from .parsers.sweep import sweep_parser, run_sweep_cmd

EXIT_OK      = 0
EXIT_CONFIG  = 2
EXIT_NUMERIC = 3


def build_argparser():

    formatter_class = get_argparser_formatter()

    parser = argparse.ArgumentParser(prog="icefill", formatter_class=formatter_class)
    mode = parser.add_subparsers(dest='mode')
    mode.add_parser("design"  , parents = design_parser()   , help='Design an observation matrix from a kernel file.', formatter_class=formatter_class)
    mode.add_parser("estimate", parents = estimate_parser() , help='Estimate a channel from received pilots.', formatter_class=formatter_class)
    mode.add_parser("analyze" , parents = analyze_parser()  , help='Evaluate the closed-form MSE over a pilot grid.', formatter_class=formatter_class)
    mode.add_parser("sweep"   , parents = sweep_parser()    , help='Run a Monte-Carlo sweep from a configuration file.', formatter_class=formatter_class)
    return parser

def run_parser(args) -> int:
    try:
        if args.mode == "design":
            run_design(args)
        elif args.mode == "estimate":
            run_estimate(args)
        elif args.mode == "analyze":
            run_analyze(args)
        elif args.mode == "sweep":
            run_sweep_cmd(args)
    except (ConfigError, InvalidInputError, BoundNotApplicableError) as e:
        logger.error(e)
        return EXIT_CONFIG
    except NumericError as e:
        logger.error(e)
        return EXIT_NUMERIC
    return EXIT_OK

def run(argv=None):

    parser = build_argparser()
    argv = sys.argv[1:] if argv is None else argv
    if len(argv)==0:
        parser.print_help()
        sys.exit(1)

    args = parser.parse_args(argv)
    sys.exit(run_parser(args))



if __name__ == "__main__":
  run()
