"""
FAS Limits Command Line

Runs the sensing, bound and floor experiments and writes their result tables
as CSV. Logs go to stderr; CSV goes to stdout unless --out is given.

Usage:
    python -m fas_limits.main mra --m 3
    python -m fas_limits.main achievable --users 100:1400:100 --gain-mode los
    python -m fas_limits.main sense-verify --m 5 --snr-db 0:0:1 --trials 1 --seed 7
"""

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from dotenv import load_dotenv

from .config import apply_overrides, dump_config, load_config
from .exceptions import ConfigError, FasLimitsError, InfeasibleError
from .experiments import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, SUBCOMMANDS, ExperimentRunner
from .results import emit_csv

load_dotenv()

LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
DEFAULT_SEED = os.getenv('FAS_LIMITS_SEED')
DEFAULT_THREADS = os.getenv('FAS_LIMITS_THREADS')
DEFAULT_OUT_DIR = os.getenv('FAS_LIMITS_OUT_DIR')

EXIT_ERROR = 1

logger = logging.getLogger(__name__)


def configure_logging(level: str = LOG_LEVEL) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True,
    )


# ============================================================================
# Argument parsing
# ============================================================================

def parse_range(text: str, cast=float) -> List:
    """
    Parse "lo:hi:step" (inclusive) or a comma-separated list.

    Examples:
        "0:20:5" -> [0, 5, 10, 15, 20]
        "3,5,11" -> [3, 5, 11]
    """
    if ":" not in text:
        try:
            values = [float(part) for part in text.split(",") if part.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from e
        return [cast(v) for v in values]

    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0:
        raise argparse.ArgumentTypeError(f"step must be positive, got {text!r}")
    if hi < lo:
        raise argparse.ArgumentTypeError(f"hi must not be below lo, got {text!r}")

    count = int(math.floor((hi - lo) / step + 1e-9))
    return [cast(lo + i * step) for i in range(count + 1)]


def int_range(text: str) -> List[int]:
    return parse_range(text, cast=lambda v: int(round(v)))


def float_range(text: str) -> List[float]:
    return parse_range(text, cast=float)


def parse_targets(text: str) -> Tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected <pupe>,<mseaoa>, got {text!r}")
    return float(parts[0]), float(parts[1])


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='TOML experiment document')
    parser.add_argument('--seed', type=int, help='Master seed (overrides config and FAS_LIMITS_SEED)')
    parser.add_argument('--threads', type=int, help='Worker threads')
    parser.add_argument('--out', help='Directory for <subcommand>.csv (default: stdout)')
    parser.add_argument('--dump-config', action='store_true', help='Print the resolved config as TOML and exit')


def _add_sweep(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--users', type=int_range, help='Total users, lo:hi:step or list')
    parser.add_argument('--m', type=int, help='Number of activated ports')
    parser.add_argument('--l', type=int, help='Blocklength')
    parser.add_argument('--gain-mode', choices=['fas', 'los'])
    parser.add_argument('--targets', type=parse_targets, help='<pupe>,<mseaoa>')


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors raise ConfigError (exit status 3)."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(
        prog='fas-limits',
        description='Performance limits of fluid-antenna unsourced ISAC.',
    )
    sub = parser.add_subparsers(dest='subcommand', required=True)

    p = sub.add_parser('mra', help='Restricted MRA search')
    p.add_argument('--m', type=int, required=True)
    p.add_argument('--cap', type=int, help='Largest aperture to consider')
    p.add_argument('--full-search', action='store_true', help='Search even where published patterns exist')

    p = sub.add_parser('gain', help='Averaged channel gain under optimal port selection')
    p.add_argument('--m', dest='m_values', type=int_range, help='M values, list or lo:hi:step')

    p = sub.add_parser('sense-verify', help='Sparse recovery error against the Lasso bound')
    p.add_argument('--m', dest='m_values', type=int_range)
    p.add_argument('--snr-db', type=float_range, help='lo:hi:step in dB')
    p.add_argument('--trials', type=int)
    p.add_argument('--algorithms', type=lambda s: [a.strip() for a in s.split(',')])
    p.add_argument('--ula', action='store_true', help='Also run the ULA codebook')
    p.add_argument('--observation', choices=['expectation', 'sampled'])

    p = sub.add_parser('achievable', help='Achievable E/N0 over total users')
    _add_sweep(p)

    p = sub.add_parser('antennas', help='Achievable E/N0 over the number of ports')
    p.add_argument('--m', dest='m_values', type=int_range)
    p.add_argument('--users', type=int)
    p.add_argument('--l', type=int)
    p.add_argument('--gain-mode', choices=['fas', 'los'])
    p.add_argument('--targets', type=parse_targets)

    p = sub.add_parser('floor', help='Optimistic performance floor over total users')
    _add_sweep(p)

    p = sub.add_parser('oracle', help='Exhaustive detection oracle on a tiny configuration')
    p.add_argument('--trials', type=int)
    p.add_argument('--snr-db', type=float, help='Transmit SNR p\'/sigma^2 in dB')

    sub.add_parser('table', help='Audit of the published port patterns')

    p = sub.add_parser('codebook', help='Largest eigenvalue of the sensing codebooks')
    p.add_argument('--m', dest='m_values', type=int_range)

    p = sub.add_parser('deviation', help='Log-ratio AOA estimator deviation, ULA vs FAS')
    p.add_argument('--m', dest='m_values', type=int_range)
    p.add_argument('--snr-db', type=float_range)
    p.add_argument('--trials', type=int)

    p = sub.add_parser('collision', help='Collision floor against the collision bound')
    p.add_argument('--users', type=int_range)
    p.add_argument('--bits', type=int_range)

    for name in SUBCOMMANDS:
        _add_common(sub.choices[name])
    return parser


_COMMON_KEYS = {'subcommand', 'config', 'seed', 'threads', 'out', 'dump_config'}


def subcommand_options(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k not in _COMMON_KEYS}


# ============================================================================
# Entry point
# ============================================================================

def _env_int(name: str, value: Optional[str]) -> Optional[int]:
    if value is None or value == '':
        return None
    try:
        return int(value)
    except ValueError as e:
        raise ConfigError(f"environment variable {name} must be an integer, got {value!r}") from e


def resolve_config(args: argparse.Namespace):
    """Defaults < config file < environment < command-line flags."""
    config = load_config(args.config)
    config = apply_overrides(config, {
        'mc.seed': _env_int('FAS_LIMITS_SEED', DEFAULT_SEED),
        'mc.threads': _env_int('FAS_LIMITS_THREADS', DEFAULT_THREADS),
    })
    return apply_overrides(config, {'mc.seed': args.seed, 'mc.threads': args.threads})


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        Exit status: 0 success, 2 infeasible, 3 configuration error, 1 other
    """
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
        config = resolve_config(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    if args.dump_config:
        sys.stdout.write(dump_config(config))
        return EXIT_OK

    try:
        runner = ExperimentRunner(config)
        result = runner.run(args.subcommand, subcommand_options(args))
        out_dir = args.out or DEFAULT_OUT_DIR
        path = Path(out_dir) / f"{args.subcommand}.csv" if out_dir else None
        emit_csv(result.table, path)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except InfeasibleError as e:
        logger.error(f"Infeasible: {e} (binding constraint: {e.binding_constraint})")
        return EXIT_INFEASIBLE
    except (FasLimitsError, OSError) as e:
        logger.error(f"Error running {args.subcommand}: {e}", exc_info=True)
        return EXIT_ERROR
    except Exception as e:
        logger.error(f"Unexpected error running {args.subcommand}: {e}", exc_info=True)
        return EXIT_ERROR

    for message in result.errors:
        logger.error(message)
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
