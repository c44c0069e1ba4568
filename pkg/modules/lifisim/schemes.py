"""
Schemes - CLI scheme names
==========================
Maps command-line names to modem configs and back.

Names: ook, pwm, ppm<L>, vppm, oppm<n>,<w>, dco-ofdm, aco-ofdm (case-insensitive).
Resolution order: exact catalog key, alias, parameterized pattern. Unknown
names fail with the valid list and, when one is close enough, a suggestion.
"""

import difflib
import re
from typing import Callable

import structlog

from .errors import SchemeConfigError
from .modem import (
    AcoOfdmConfig,
    DcoOfdmConfig,
    OokConfig,
    OppmConfig,
    PpmConfig,
    PwmConfig,
    SchemeConfig,
    VppmConfig,
)

log = structlog.get_logger("lifisim.schemes")

SCHEME_CATALOG: dict[str, Callable[[], SchemeConfig]] = {
    "ook": OokConfig,
    "pwm": PwmConfig,
    "vppm": VppmConfig,
    "dco-ofdm": DcoOfdmConfig,
    "aco-ofdm": AcoOfdmConfig,
}

_SCHEME_ALIASES: dict[str, str] = {
    "ppm": "ppm4",
    "oppm": "oppm8,4",
    "dco": "dco-ofdm",
    "aco": "aco-ofdm",
    "dcoofdm": "dco-ofdm",
    "acoofdm": "aco-ofdm",
    "ofdm": "dco-ofdm",
}

VALID_NAMES = ("ook", "pwm", "ppm<L>", "vppm", "oppm<n>,<w>", "dco-ofdm", "aco-ofdm")

_PPM_RE = re.compile(r"^ppm(\d+)$")
_OPPM_RE = re.compile(r"^oppm(\d+)[,:x-](\d+)$")

# Suggestions only; a fuzzy hit is never resolved silently
_SUGGEST_CUTOFF = 0.8


def _parse_parameterized(name: str) -> SchemeConfig | None:
    match = _PPM_RE.match(name)
    if match:
        return PpmConfig(slots_per_symbol=int(match.group(1)))
    match = _OPPM_RE.match(name)
    if match:
        return OppmConfig(chips_per_symbol=int(match.group(1)), pulse_width_chips=int(match.group(2)))
    return None


def resolve_scheme(raw: str) -> SchemeConfig:
    """Resolve a CLI scheme name to a default-parameter config."""
    name = (raw or "").strip().lower()

    if name in SCHEME_CATALOG:
        return SCHEME_CATALOG[name]()

    name = _SCHEME_ALIASES.get(name, name)
    if name in SCHEME_CATALOG:
        return SCHEME_CATALOG[name]()

    config = _parse_parameterized(name)
    if config is not None:
        return config

    known = list(SCHEME_CATALOG) + list(_SCHEME_ALIASES) + ["ppm4", "oppm8,4"]
    close = difflib.get_close_matches(name, known, n=1, cutoff=_SUGGEST_CUTOFF)
    hint = f" (did you mean '{_SCHEME_ALIASES.get(close[0], close[0])}'?)" if close else ""
    log.debug("scheme_unresolved", raw=raw, suggestion=close[0] if close else None)
    raise SchemeConfigError(
        f"Unknown scheme '{raw}'{hint}. Valid names: {', '.join(VALID_NAMES)}"
    )


def scheme_name(config: SchemeConfig) -> str:
    """Canonical CLI name for a config."""
    if isinstance(config, PpmConfig):
        return f"ppm{config.slots_per_symbol}"
    if isinstance(config, OppmConfig):
        return f"oppm{config.chips_per_symbol},{config.pulse_width_chips}"
    return config.kind
