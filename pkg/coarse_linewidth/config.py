"""
Runtime settings read from the environment.
"""

import functools
import logging
import os
from dataclasses import dataclass, replace
from typing import Optional

logger = logging.getLogger(__name__)


def _int_from_env(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default


def _float_from_env(name: str) -> Optional[float]:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"Ignoring non-numeric {name}={raw!r}")
        return None


@dataclass(frozen=True)
class Settings:
    """
    Tunable limits for searches and oracles.

    Attributes:
        search_budget: States a budgeted search may explore (``CWL_BUDGET``).
        pathwidth_cap: Largest vertex count accepted by the exact path-width oracle.
        exact_center_pool: Candidate pools up to this size are searched exactly.
        exact_center_small_k: For k up to this value, larger pools are searched exactly too...
        exact_center_small_k_pool: ...as long as they do not exceed this size.
        minor_pattern_cap: Largest tree pattern accepted by the minor search.
        timeout: Seconds a dispatcher call may take (``CWL_TIMEOUT``), None for no limit.
    """

    search_budget: int = 200_000
    pathwidth_cap: int = 16
    exact_center_pool: int = 12
    exact_center_small_k: int = 3
    exact_center_small_k_pool: int = 60
    minor_pattern_cap: int = 10
    timeout: Optional[float] = None

    def with_overrides(
        self, search_budget: Optional[int] = None, timeout: Optional[float] = None
    ) -> "Settings":
        """Return a copy with the given non-None fields replaced."""
        settings = self
        if search_budget is not None:
            settings = replace(settings, search_budget=search_budget)
        if timeout is not None:
            settings = replace(settings, timeout=timeout)
        return settings


@functools.lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Read settings from the environment once per process."""
    settings = Settings(
        search_budget=_int_from_env("CWL_BUDGET", Settings.search_budget),
        pathwidth_cap=_int_from_env("CWL_PATHWIDTH_CAP", Settings.pathwidth_cap),
        timeout=_float_from_env("CWL_TIMEOUT"),
    )
    logger.debug(f"Loaded settings: {settings}")
    return settings
