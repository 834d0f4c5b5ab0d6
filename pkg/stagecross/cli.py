#!/usr/bin/env python3
"""
stagecross Command Line Interface

Sub-commands `simulate`, `bands` and `table1`, also installed as the
stand-alone commands stagecross-simulate, stagecross-bands and
stagecross-table1.  Reports go to standard output (or --out); progress bars
and log lines go to standard error.

Exit codes: 0 success, 1 runtime error, 2 configuration error.
"""

import argparse
import sys

from . import DEFAULT_MU, DEFAULT_REPS, DEFAULT_SEED, DEFAULT_WORKERS, get_package_info, get_version
from .config import FORMATS, ExperimentConfig
from .errors import ConfigError, StagecrossError
from .runner import ExperimentRunner
from .samplers import FAMILIES

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

CONFIG_KEYS = {
    "sampler": "sampler", "a": "a_grid", "h": "h", "mu": "mu", "z": "z", "m": "m",
    "group": "group", "reps": "reps", "seed": "seed", "workers": "workers", "out": "out",
    "format": "format", "log_dir": "log_dir", "verbose": "verbose", "quiet": "quiet",
    "d_over_c": "d_over_c", "d": "d", "theta": "theta", "k_star": "k_star",
    "k_grid": "k_grid", "search_reps": "search_reps", "per_truth": "per_truth",
}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"Error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _add_common(parser):
    parser.add_argument('--mu', type=float, default=None,
                        help=f'Drift of the sampled process (default: {DEFAULT_MU})')
    parser.add_argument('--reps', type=int, default=None,
                        help=f'Monte Carlo replications (default: {DEFAULT_REPS})')
    parser.add_argument('--seed', type=int, default=None,
                        help=f'Master seed (default: {DEFAULT_SEED})')
    parser.add_argument('--workers', type=int, default=None,
                        help=f'Worker processes (default: {DEFAULT_WORKERS})')
    parser.add_argument('--out', default=None,
                        help='Report file (default: standard output)')
    parser.add_argument('--format', choices=FORMATS, default=None,
                        help='Report format')
    parser.add_argument('--config', default=None,
                        help='JSON file of parameters; flags override its values')
    parser.add_argument('--log-dir', dest='log_dir', default=None,
                        help='Also write a timestamped log file into this directory')
    parser.add_argument('--verbose', action='store_true', default=None,
                        help='Debug-level logging')
    parser.add_argument('--quiet', action='store_true', default=None,
                        help='No progress bars')


def _add_simulate(subparsers):
    parser = subparsers.add_parser(
        'simulate',
        help='Estimate excess time, stage count and risk of a sampler',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  stagecross simulate --sampler geometric --z 0 --a 100 --reps 10000 --seed 7
  stagecross simulate --sampler interior --h '1*x^0.3*log^0' --a 1e3,1e4,1e5
  stagecross simulate --sampler boundary --h '5*x^0.5*log^0' --a 1e5
""",
    )
    parser.add_argument('--sampler', choices=FAMILIES, default=None,
                        help='Sampler family (default: geometric)')
    parser.add_argument('--a', default=None,
                        help='Comma-separated, strictly increasing boundary grid (default: 100)')
    parser.add_argument('--h', default=None,
                        help="Cost ratio 'c*x^p*log^q'")
    parser.add_argument('--z', type=float, default=None,
                        help='Quantile parameter (boundary sampler: solved z* when absent)')
    parser.add_argument('--m', type=int, default=None,
                        help="Number of levels (default: h's band)")
    parser.add_argument('--group', type=float, default=None,
                        help='Stage length of the fixed_group sampler')
    _add_common(parser)
    return parser


def _add_bands(subparsers):
    parser = subparsers.add_parser(
        'bands',
        help='Classify a cost ratio into its critical band',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  stagecross bands --h '1*x^0.5*log^0'
  stagecross bands --h '5*x^0.5*log^0' --mu 1 --a 1e5 --d-over-c 1
""",
    )
    parser.add_argument('--h', default=None, required=True,
                        help="Cost ratio 'c*x^p*log^q'")
    parser.add_argument('--a', default=None,
                        help='Boundary at which to evaluate h_m(a), the risk and m*')
    parser.add_argument('--d-over-c', dest='d_over_c', default=None,
                        help='Comma-separated cost ratios for which to report m*')
    _add_common(parser)
    return parser


def _add_table1(subparsers):
    parser = subparsers.add_parser(
        'table1',
        help='Multistage test of two Gaussian means against group-sequential tests',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  stagecross table1 --reps 20000 --seed 1
  stagecross table1 --d-over-c 1,5,10 --k-star 1:15,5:22,10:37 --format csv
""",
    )
    parser.add_argument('--d-over-c', dest='d_over_c', default=None,
                        help='Comma-separated cost ratios d/c, one block each (default: 1,5,10)')
    parser.add_argument('--d', type=float, default=None,
                        help='Cost per stage (default: 0.001)')
    parser.add_argument('--theta', type=float, default=None,
                        help='Hypotheses are means -theta and +theta (default: 0.25)')
    parser.add_argument('--k-star', dest='k_star', default=None,
                        help="Pinned best group sizes as 'd_over_c:k' pairs")
    parser.add_argument('--k-grid', dest='k_grid', default=None,
                        help='Comma-separated group sizes searched for k* (default: 1..80)')
    parser.add_argument('--search-reps', dest='search_reps', type=int, default=None,
                        help='Replications per hypothesis during the k* search (default: 2000)')
    parser.add_argument('--per-truth', dest='per_truth', action='store_true', default=None,
                        help='Emit one row per procedure and true hypothesis')
    _add_common(parser)
    return parser


def build_parser():
    parser = _ArgumentParser(
        prog='stagecross',
        description="stagecross - Multistage Boundary-Crossing Samplers",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Available commands:
  simulate    Monte Carlo risk of a sampler over a boundary grid
  bands       Critical band, z* and risk coefficient of a cost ratio
  table1      Multistage versus group-sequential tests of two means

Examples:
  stagecross --version
  stagecross simulate --sampler geometric --z 0 --a 100
  stagecross bands --h '1*x^0.3*log^0'
""",
    )
    parser.add_argument('--version', action='version', version=f'stagecross {get_version()}')
    parser.add_argument('--info', action='store_true', help='Show package information')
    subparsers = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)
    _add_simulate(subparsers)
    _add_bands(subparsers)
    _add_table1(subparsers)
    return parser


def config_from_args(args):
    flags = {target: getattr(args, source, None) for source, target in CONFIG_KEYS.items()}
    flags["command"] = args.command
    if args.config:
        return ExperimentConfig.from_file(args.config, flags)
    return ExperimentConfig.from_sources(None, flags)


def print_info():
    info = get_package_info()
    print(f"Package: {info['name']}")
    print(f"Version: {info['version']}")
    print(f"Description: {info['description']}")
    print(f"Author: {info['author']}")
    print(f"License: {info['license']}")


def main(argv=None):
    """Main entry point for the stagecross command; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.info:
        print_info()
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_OK

    try:
        config = config_from_args(args)
        runner = ExperimentRunner(config)
        runner.run()
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        return EXIT_RUNTIME
    except StagecrossError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        print(f"Error running {args.command}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def run_simulate(argv=None):
    """Entry point for stagecross-simulate"""
    return main(['simulate'] + list(sys.argv[1:] if argv is None else argv))


def run_bands(argv=None):
    """Entry point for stagecross-bands"""
    return main(['bands'] + list(sys.argv[1:] if argv is None else argv))


def run_table1(argv=None):
    """Entry point for stagecross-table1"""
    return main(['table1'] + list(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    sys.exit(main())
