"""Command line entry point: ``python -m stochgen_apps <subcommand>``."""
import argparse
import sys

from .config import ExperimentKind
from .exceptions import StochGenError
from .offline_analyses import PipelineConfig, run_pipeline, run_stage, STAGES
from .profiles import get_profile, PROFILES
from .utils import load_from_json, setup_logger

COMMANDS = list(STAGES) + ['run']


def _build_config(args):
    flat = get_profile(args.profile)
    if args.config is not None:
        flat.update(load_from_json(args.config))
    if args.seed is not None:
        flat['seed'] = args.seed
    if args.out is not None:
        flat['out_dir'] = args.out
    if args.wind_csv is not None:
        flat['wind_csv'] = args.wind_csv
        flat['experiment'] = ExperimentKind.WIND_CSV.value
    flat['profile'] = args.profile
    return PipelineConfig.from_flat_dict(flat)


def make_parser():
    parser = argparse.ArgumentParser(prog='stochgen_apps',
                                     description='Markov-state transformer stochastic generator.')
    parser.add_argument('command', choices=COMMANDS, help='Pipeline stage to run, or "run" for all.')
    parser.add_argument('--config', type=str, default=None, help='JSON file with flat parameter keys.')
    parser.add_argument('--seed', type=int, default=None, help='Master seed.')
    parser.add_argument('--out', type=str, default=None, help='Output folder of the artifacts.')
    parser.add_argument('--profile', choices=list(PROFILES), default='desk', help='Default parameter set.')
    parser.add_argument('--wind-csv', type=str, default=None,
                        help='Long-format wind file (station_id,year,month,day,hour,wind_speed).')
    parser.add_argument('--max-steps', type=int, default=None, help='Optimizer step cap per network.')
    parser.add_argument('--log-file', type=str, default=None, help='Also log to log/<name>_<time>.log')
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    logger = setup_logger(log_file=args.log_file)
    try:
        config = _build_config(args)
        if args.command == 'run':
            run_pipeline(config, args.max_steps)
        else:
            out = run_stage(args.command, config, args.max_steps)
            if args.command == 'report':
                print(out)
    except (StochGenError, ValueError, KeyError, AssertionError) as err:
        logger.error(f'{args.command} failed: {err}')
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
