"""
Configuration for pcsplit.

Values come from the environment (optionally via a `.env` file) and are fixed
at import time. Numerical tolerances live here too so that every module
agrees on them.

Environment variables:
    PCSPLIT_LOG: Log level, one of `error`, `warning`, `info`, `debug`.
    PCSPLIT_DEFAULT_NU: Default ν for the preset splits.
    PCSPLIT_DEFAULT_ALPHA: Default α for the blended split.
    PCSPLIT_MAX_ITERS: Default iteration cap.
    PCSPLIT_TOL: Default stopping tolerance.
"""

import logging
import os
import sys
from typing import Final, Literal, TypeAlias, cast

from dotenv import load_dotenv

load_dotenv()

LogLevel: TypeAlias = Literal['error', 'warning', 'info', 'debug']

_LOG_LEVELS: Final[dict[LogLevel, int]] = {
    'error': logging.ERROR,
    'warning': logging.WARNING,
    'info': logging.INFO,
    'debug': logging.DEBUG,
}

_rejected: list[str] = []


def _env_float(name: str, default: float, lo: float | None = None, hi: float | None = None) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        value = float(raw)
    except ValueError:
        _rejected.append(f"{name}={raw!r} is not a number")
        return default
    if (lo is not None and value <= lo) or (hi is not None and value >= hi):
        _rejected.append(f"{name}={raw!r} lies outside ({lo}, {hi})")
        return default
    return value


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        value = int(raw)
    except ValueError:
        _rejected.append(f"{name}={raw!r} is not an integer")
        return default
    if value < 1:
        _rejected.append(f"{name}={raw!r} must be positive")
        return default
    return value


def _env_log_level() -> LogLevel:
    raw = os.getenv('PCSPLIT_LOG', 'error').strip().lower()
    if raw not in _LOG_LEVELS:
        _rejected.append(f"PCSPLIT_LOG={raw!r} is not one of {', '.join(_LOG_LEVELS)}")
        return 'error'
    return cast(LogLevel, raw)


PCSPLIT_LOG: Final[LogLevel] = _env_log_level()
DEFAULT_NU: Final[float] = _env_float('PCSPLIT_DEFAULT_NU', 0.9, 0.0, 1.0)
DEFAULT_ALPHA: Final[float] = _env_float('PCSPLIT_DEFAULT_ALPHA', 0.5, 0.0, 1.0)
DEFAULT_MAX_ITERS: Final[int] = _env_int('PCSPLIT_MAX_ITERS', 5000)
DEFAULT_TOL: Final[float] = _env_float('PCSPLIT_TOL', 1e-8, 0.0)

# Numerical tolerances.
SPD_REL_TOL: Final[float] = 1e-10
SYMMETRY_TOL: Final[float] = 1e-10
PSD_REL_TOL: Final[float] = 1e-10
RANK_REL_TOL: Final[float] = 1e-8
PIVOT_REL_TOL: Final[float] = 1e-12
ORTHO_TOL: Final[float] = 1e-10
HM_TOL: Final[float] = 1e-10
SLACK_TOL: Final[float] = 1e-8
BOUND_TOL: Final[float] = 1e-9
ORACLE_TOL: Final[float] = 1e-10
ORACLE_MAX_ITERS: Final[int] = 10**6
ENUMERATION_MAX_N: Final[int] = 3

LOGGER_NAME: Final[str] = 'pcsplit'


def configure_logging(level: LogLevel | None = None) -> logging.Logger:
    """
    Install a stderr handler on the package logger.

    Calling this more than once only adjusts the level.

    Args:
        level: Overrides `PCSPLIT_LOG` when given.

    Returns:
        The `pcsplit` logger.
    """
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(_LOG_LEVELS[level or PCSPLIT_LOG])
    if not any(getattr(h, '_pcsplit', False) for h in logger.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
        setattr(handler, '_pcsplit', True)
        logger.addHandler(handler)
        for message in _rejected:
            logger.warning("ignoring %s", message)
    return logger


__all__ = [
    'LogLevel', 'PCSPLIT_LOG', 'DEFAULT_NU', 'DEFAULT_ALPHA', 'DEFAULT_MAX_ITERS', 'DEFAULT_TOL',
    'SPD_REL_TOL', 'SYMMETRY_TOL', 'PSD_REL_TOL', 'RANK_REL_TOL', 'PIVOT_REL_TOL', 'ORTHO_TOL',
    'HM_TOL', 'SLACK_TOL', 'BOUND_TOL', 'ORACLE_TOL', 'ORACLE_MAX_ITERS', 'ENUMERATION_MAX_N',
    'LOGGER_NAME', 'configure_logging',
]
