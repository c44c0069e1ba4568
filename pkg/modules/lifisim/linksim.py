"""
Linksim - Monte Carlo BER engine
================================
bits -> modem waveform -> additive Gaussian noise -> detection -> BER.

SNR convention (electrical, matching the channel's ratio form):
    noise variance per sample = S * P_ref / SNR_linear, S = samples per slot
    P_ref = (peak / 2)^2 for pulse schemes (peak = pulse amplitude), so OOK with a
            mid-level threshold gives exactly Q(sqrt(SNR))
    P_ref = variance of the unclipped OFDM time signal for DCO/ACO

Oversampled schemes (PWM, VPPM) sum S samples per slot at the detector, so the
variance is referenced to per-slot energy and the BER does not move with S.

The channel's path loss is folded into the SNR, so the waveform reaches the
detector at unit gain.

Reproducibility:
    - one seed per run; bits and noise come from make_rng(seed) in fixed chunks
      of linksim.bit_chunk bits
    - sweep points get sub-seeds from derive_seeds(master_seed, n_points), so
      results do not depend on worker count or completion order
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np
import structlog

from lifi_commons.config import bit_chunk, sweep_workers
from lifi_commons.seeding import derive_seeds, make_rng, normalize_seed

from .channel import ber_ook, snr_at_angles
from .errors import InvalidRunError
from .modem import (
    AcoOfdmConfig,
    DcoOfdmConfig,
    OokConfig,
    OppmConfig,
    PpmConfig,
    SchemeConfig,
    bits_per_symbol,
    decode,
    encode,
    samples_per_slot,
)

if TYPE_CHECKING:
    from .planner import Scenario

log = structlog.get_logger("lifisim.linksim")

MIN_BIT_BUDGET = 1000
CI95_Z = 1.96


# ============================================================================
# Domain types
# ============================================================================


@dataclass(frozen=True)
class LinkRun:
    scheme: SchemeConfig
    snr_db: float
    bit_budget: int
    seed: int

    def __post_init__(self) -> None:
        if self.bit_budget < MIN_BIT_BUDGET:
            raise InvalidRunError(
                f"bit_budget must be >= {MIN_BIT_BUDGET}, got {self.bit_budget}"
            )
        if not math.isfinite(self.snr_db):
            raise InvalidRunError(f"snr_db must be finite, got {self.snr_db}")
        try:
            normalize_seed(self.seed)
        except TypeError as exc:
            raise InvalidRunError(str(exc)) from None


@dataclass(frozen=True)
class BerEstimate:
    """Counted bit errors with a 95% normal-approximation binomial half-width.

    A zero-gain estimate carries no counted bits: ber is pinned at 0.5.
    """

    ber: float
    errors: int
    bits: int
    ci95_halfwidth: float
    snr_db: float = math.nan
    zero_gain: bool = False

    @classmethod
    def from_counts(cls, errors: int, bits: int, snr_db: float) -> "BerEstimate":
        p = errors / bits
        return cls(
            ber=p,
            errors=errors,
            bits=bits,
            ci95_halfwidth=CI95_Z * math.sqrt(p * (1.0 - p) / bits),
            snr_db=snr_db,
        )

    @classmethod
    def no_signal(cls) -> "BerEstimate":
        return cls(ber=0.5, errors=0, bits=0, ci95_halfwidth=0.0, snr_db=-math.inf, zero_gain=True)


# ============================================================================
# Noise reference
# ============================================================================


def reference_power(scheme: SchemeConfig) -> float:
    """Electrical signal power per slot that the noise variance is measured against."""
    if isinstance(scheme, (DcoOfdmConfig, AcoOfdmConfig)):
        return 2.0 * scheme.data_subcarriers.size / scheme.subcarriers
    if isinstance(scheme, (PpmConfig, OppmConfig)):
        peak = scheme.amplitude
    else:
        peak = 1.0
    return (peak / 2.0) ** 2


def noise_variance(scheme: SchemeConfig, snr_linear: float) -> float:
    """Per-sample noise variance that puts one slot's energy at snr_linear."""
    return samples_per_slot(scheme) * reference_power(scheme) / snr_linear


def analytic_ber(scheme: SchemeConfig, snr_linear: float) -> Optional[float]:
    """Closed-form BER where one exists under this SNR convention (OOK only)."""
    if isinstance(scheme, OokConfig):
        return ber_ook(snr_linear)
    return None


# ============================================================================
# Runs
# ============================================================================


def _chunk_sizes(total: int, scheme: SchemeConfig) -> list[int]:
    # Whole symbols per chunk so padding only ever lands on the final chunk
    k = bits_per_symbol(scheme)
    chunk = max(bit_chunk() // k, 1) * k
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def run_link(run: LinkRun) -> BerEstimate:
    """Simulate one link at a fixed SNR; deterministic for a fixed seed."""
    snr_linear = 10.0 ** (run.snr_db / 10.0)
    sigma = math.sqrt(noise_variance(run.scheme, snr_linear))
    rng = make_rng(run.seed)

    errors = 0
    for size in _chunk_sizes(run.bit_budget, run.scheme):
        bits = rng.integers(0, 2, size=size, dtype=np.uint8)
        waveform = encode(bits, run.scheme)
        noise = rng.normal(0.0, sigma, size=len(waveform))
        received = waveform.with_samples(waveform.samples + noise)
        errors += int(np.count_nonzero(decode(received, run.scheme) != bits))

    estimate = BerEstimate.from_counts(errors, run.bit_budget, run.snr_db)
    log.debug(
        "link_run",
        scheme=run.scheme.kind,
        snr_db=run.snr_db,
        bits=run.bit_budget,
        errors=errors,
    )
    return estimate


def ber_sweep(
    scheme: SchemeConfig,
    snr_db_points: Sequence[float],
    bit_budget: int,
    seed: int,
    workers: Optional[int] = None,
) -> list[tuple[float, BerEstimate]]:
    """One run_link per SNR point, each on its own derived sub-seed, in input order."""
    points = [float(p) for p in snr_db_points]
    if not points:
        return []

    runs = [
        LinkRun(scheme=scheme, snr_db=point, bit_budget=bit_budget, seed=sub_seed)
        for point, sub_seed in zip(points, derive_seeds(seed, len(points)))
    ]

    effective_workers = min(workers or sweep_workers(), len(runs))
    if effective_workers > 1:
        with ThreadPoolExecutor(max_workers=effective_workers) as executor:
            estimates = list(executor.map(run_link, runs))
    else:
        estimates = [run_link(r) for r in runs]

    log.info("ber_sweep_complete", scheme=scheme.kind, points=len(points), workers=effective_workers)
    return list(zip(points, estimates))


def angle_ber(
    scenario: "Scenario",
    theta: float,
    scheme: Optional[SchemeConfig] = None,
    bit_budget: int = 100_000,
    seed: int = 0,
) -> BerEstimate:
    """Monte Carlo BER of the primary link at irradiance angle theta.

    Incidence angle and distance come from the scenario geometry; zero channel
    gain yields a flagged ber = 0.5 estimate instead of a run.
    """
    report = snr_at_angles(scenario, theta)
    if not report.has_signal:
        log.debug("angle_ber_zero_gain", theta=theta)
        return BerEstimate.no_signal()
    return run_link(
        LinkRun(
            scheme=scheme or scenario.scheme,
            snr_db=report.snr_db,
            bit_budget=bit_budget,
            seed=seed,
        )
    )
