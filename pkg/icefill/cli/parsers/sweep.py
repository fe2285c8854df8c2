__all__ = []

import argparse

from loguru import logger
from icefill import setup_logs
from icefill.models import ExperimentConfig, get_context
from icefill.sweep import run_sweep, dump, print_results


def apply_overrides(config : ExperimentConfig, args) -> ExperimentConfig:
    """Command line values replace the run section of the file; the result is validated again."""
    data = config.to_dict()
    if args.seed is not None:
        data["run"]["base_seed"] = args.seed
    if args.output is not None:
        data["run"]["output"] = args.output
    if args.trials is not None:
        data["run"]["trials"] = args.trials
    if args.workers is not None:
        data["run"]["workers"] = args.workers
    return ExperimentConfig.from_dict(data)


def run_sweep_cmd(args):

    setup_logs( name = "sweep", level=args.message_level )
    get_context( clear=True )
    logger.info(f"loading configuration {args.config}.")
    config = apply_overrides(ExperimentConfig.load(args.config), args)
    result = run_sweep(config)
    dump(result, config.run.output, timing=args.timing)
    print_results(result)

#
# args
#
def sweep_parser():
    parser = argparse.ArgumentParser(description = '', add_help = False)

    parser.add_argument('-c','--config', action='store', dest='config', required = True,
                        help = "The experiment configuration (YAML).")
    parser.add_argument('--seed', action='store', dest='seed', type=int, default=None,
                        help = "Replace run.base_seed.")
    parser.add_argument('-o','--out', action='store', dest='output', default=None,
                        help = "Replace run.output.")
    parser.add_argument('-n','--trials', action='store', dest='trials', type=int, default=None,
                        help = "Replace run.trials.")
    parser.add_argument('-j','--workers', action='store', dest='workers', type=int, default=None,
                        help = "Replace run.workers.")
    parser.add_argument('--timing', action='store_true', dest='timing',
                        help = "Write the wall time column to the CSV.")
    parser.add_argument("--message-level", action="store", dest="message_level", default="INFO",
                        help="Set the logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL). Default is INFO.")
    return [parser]
