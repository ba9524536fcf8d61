"""Environment-driven runtime settings."""

import os
from typing import Callable, TypeVar

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

T = TypeVar("T")

DEFAULT_MAX_FREE_COORDS = 24
DEFAULT_MASTER_SEED = 0
DEFAULT_WORKERS = 1


def _read(name: str, default: T, parse: Callable[[str], T]) -> T:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return parse(raw.strip())
    except ValueError:
        raise ValueError(
            f"{name}={raw!r} is not valid. "
            "Please fix it in your environment or .env file."
        )


def max_free_coords() -> int:
    """
    Enumeration cap of the exact engine.

    Returns:
        Largest number of free coordinates an exact computation may enumerate
    """
    value = _read("TOPDOWN_MAX_FREE_COORDS", DEFAULT_MAX_FREE_COORDS, int)
    if value < 0:
        raise ValueError("TOPDOWN_MAX_FREE_COORDS must be non-negative.")
    return value


def master_seed() -> int:
    """Default master seed for CLI runs."""
    return _read("TOPDOWN_MASTER_SEED", DEFAULT_MASTER_SEED, int)


def workers() -> int:
    """Worker-pool size for experiment runs (1 means serial)."""
    value = _read("TOPDOWN_WORKERS", DEFAULT_WORKERS, int)
    if value < 1:
        raise ValueError("TOPDOWN_WORKERS must be at least 1.")
    return value
