"""
Lab Settings
Loads tolerances, sampling defaults and logging options from the environment.
"""

import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, TypeVar

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

T = TypeVar('T')


@dataclass(frozen=True)
class LabSettings:
    tol: float = 1e-10
    support_tol: float = 1e-12
    samples: int = 2000
    seed: int = 0
    ascent_steps: int = 50
    workers: int = 1
    log_level: str = 'INFO'
    log_file: str = 'wctlab.log'


def _read(name: str, default: T, cast: Callable[[str], T]) -> T:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return cast(raw.strip())
    except ValueError:
        logger.warning(f"Ignoring unparsable {name}={raw!r}; using {default!r}")
        return default


@lru_cache(maxsize=1)
def get_settings() -> LabSettings:
    """Read settings once per process (a .env file in the working directory is honoured)."""
    load_dotenv()
    defaults = LabSettings()
    return LabSettings(
        tol=_read('WCTLAB_TOL', defaults.tol, float),
        support_tol=_read('WCTLAB_SUPPORT_TOL', defaults.support_tol, float),
        samples=_read('WCTLAB_SAMPLES', defaults.samples, int),
        seed=_read('WCTLAB_SEED', defaults.seed, int),
        ascent_steps=_read('WCTLAB_ASCENT_STEPS', defaults.ascent_steps, int),
        workers=_read('WCTLAB_WORKERS', defaults.workers, int),
        log_level=_read('WCTLAB_LOG_LEVEL', defaults.log_level, str).upper(),
        log_file=_read('WCTLAB_LOG_FILE', defaults.log_file, str),
    )
