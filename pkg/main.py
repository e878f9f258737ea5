import argparse
import dataclasses
import logging
import sys
from typing import List, Optional

from modules import __version__
from modules.errors import ConfigError, SelfTrainError
from modules.experimentjson import default_config_path, load_config
from modules.experiments import RUNNERS
from modules.experimentstate import ExperimentName

"""
* =============================================================== *
* This is the entry point into the programme. Running the main()  *
* method parses the command line, loads the experiment config and *
* hands it to the experiment runner.                              *
* =============================================================== *

EXIT CODES
-------------------------
    0       ->      success
    2       ->      invalid configuration (also used by argparse for bad flags)
    3       ->      the experiment failed at run time
"""

logger = logging.getLogger("selftrain")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selftrain",
                                     description="Monte-Carlo checks of self-training on Gaussian mixtures")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    commands = parser.add_subparsers(dest="experiment", metavar="experiment", required=True)
    for name in ExperimentName:
        command = commands.add_parser(name.value, help="run the {} experiment".format(name.value))
        command.add_argument("--config", help="JSON config (default: assets/configs/{}.json)".format(name.value))
        command.add_argument("--seed", type=int, help="override master_seed")
        command.add_argument("--out", help="override output_path")
        command.add_argument("--trials", type=int, help="override trials")
        command.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")
        command.add_argument("--cache-dir", help="reuse sampled data sets from this directory across runs")
        command.add_argument("--verbose", action="store_true", help="log per-round progress")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Runs one experiment and returns the process exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    experiment = ExperimentName(args.experiment)

    try:
        cfg = load_config(args.config or default_config_path(experiment))
        if cfg.experiment is not experiment:
            raise ConfigError("experiment", "config is for {}, not {}".format(cfg.experiment.value, experiment.value))

        # Command line flags win over the file
        overrides = {}
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.out is not None:
            overrides["output_path"] = args.out
        if args.trials is not None:
            overrides["trials"] = args.trials
        cfg = dataclasses.replace(cfg, **overrides).validate()
        if args.threads < 1:
            raise ConfigError("--threads", "must be a positive integer")

        RUNNERS[experiment](cfg, threads=args.threads, cache_dir=args.cache_dir)
    except ConfigError as e:
        logger.error("invalid configuration: %s", e)
        return 2
    except SelfTrainError as e:
        logger.error("%s failed: %s", experiment.value, e)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
