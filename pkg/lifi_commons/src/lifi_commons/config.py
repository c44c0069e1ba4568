"""
LIFISIM CONFIG - Shared Configuration Management
=================================================
Single source of truth for environment variables, paths and logging setup.
Worker count and log level never change numeric results. The Monte Carlo
chunk size segments the random stream, so seeded runs replay exactly only
under the same chunk size.
"""

import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional

import structlog
from dotenv import load_dotenv

log = structlog.get_logger("lifi_commons.config")

# === PATHS ===
LIFISIM_ROOT = Path(
    os.getenv("LIFISIM_ROOT", Path(__file__).resolve().parent.parent.parent.parent)
)

# Bundled scenario files ship inside the simulator package
SCENARIOS_DIR = LIFISIM_ROOT / "modules" / "lifisim" / "scenarios"
DEFAULT_SCENARIO_PATH = SCENARIOS_DIR / "default.json"


def load_lifisim_env() -> dict:
    """
    Load environment variables from the project .env file.

    Returns dict with loaded source for debugging.
    """
    loaded = {}

    root_env = LIFISIM_ROOT / ".env"
    if root_env.exists():
        load_dotenv(root_env, override=False)
        loaded["root"] = str(root_env)

    log.debug("lifisim_env_loaded", sources=loaded)
    return loaded


# === AUTO-LOAD ON IMPORT ===
_env_loaded = False


def ensure_env():
    global _env_loaded
    if not _env_loaded:
        load_lifisim_env()
        _env_loaded = True


def get_config(key: str, default: Optional[Any] = None) -> Any:
    """
    Get a configuration value from environment variables.
    Converts dot notation (linksim.bit_chunk) to ENV notation (LINKSIM_BIT_CHUNK).
    """
    env_key = key.upper().replace(".", "_")
    val = os.getenv(env_key)
    if val is None:
        return default

    # Try to parse numeric types
    try:
        if "." in val or "e" in val.lower():
            return float(val)
        return int(val)
    except (ValueError, TypeError):
        if val.lower() in ["true", "yes"]:
            return True
        if val.lower() in ["false", "no"]:
            return False
        return val


# === SIMULATION TUNABLES ===
# Bits drawn per Monte Carlo chunk. Fixed per process so seeded runs replay exactly.
DEFAULT_BIT_CHUNK = 262_144
DEFAULT_SWEEP_WORKERS = 1


def bit_chunk() -> int:
    """Bits per Monte Carlo chunk (LINKSIM_BIT_CHUNK)."""
    value = int(get_config("linksim.bit_chunk", DEFAULT_BIT_CHUNK))
    return max(value, 1024)


def sweep_workers() -> int:
    """Thread count for sweep fan-out (LINKSIM_WORKERS)."""
    return max(int(get_config("linksim.workers", DEFAULT_SWEEP_WORKERS)), 1)


# === LOGGING ===
_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
}


def configure_logging(level: Optional[str] = None) -> None:
    """Route structlog to stderr at the requested level.

    stdout carries the CSV and key=value reports, so log lines must never land there.
    """
    name = (level or str(get_config("lifisim.log_level", "WARNING"))).upper()
    if name not in _LEVELS:
        raise ValueError(f"Invalid log level: {name}. Must be one of {list(_LEVELS)}")

    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(_LEVELS[name]),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


ensure_env()
