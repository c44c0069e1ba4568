"""
Modem - IM/DD waveform codecs
=============================
Single-carrier dimming schemes (OOK, PWM, PPM, VPPM, OPPM) and the two
unipolar optical OFDM variants (DCO, ACO). Information rides only on
non-negative intensity: every transmitted sample is >= 0.

Framing:
    - bit blocks are zero-padded to a whole symbol; the waveform remembers the
      unpadded length (payload_bits) so decode(encode(b)) == b
    - OOK dimming away from 50% appends a compensation block of constant slots
      (ON above 50%, OFF below) holding a fraction |2d - 1| of all slots
    - pulse amplitudes are scaled so the mean intensity equals the dimming /
      average-power target

Codecs are stateless; a config may be shared read-only across workers.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import structlog

from .errors import FramingError, SchemeConfigError

log = structlog.get_logger("lifisim.modem")

DEFAULT_SLOT_RATE = 1e6  # slots per second


# ============================================================================
# Scheme configurations
# ============================================================================


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


@dataclass(frozen=True)
class OokConfig:
    """On-off keying with compensation-time dimming."""

    dimming: float = 0.5
    kind = "ook"

    def __post_init__(self) -> None:
        if not 0.0 < self.dimming < 1.0:
            raise SchemeConfigError(f"OOK dimming must be in (0, 1), got {self.dimming}")


@dataclass(frozen=True)
class PwmConfig:
    """Binary PWM: widths d - delta (bit 0) and d + delta (bit 1) of each slot."""

    dimming: float = 0.5
    width_delta: float = 0.1
    samples_per_slot: int = 20
    kind = "pwm"

    def __post_init__(self) -> None:
        if not 0.0 < self.dimming < 1.0:
            raise SchemeConfigError(f"PWM dimming must be in (0, 1), got {self.dimming}")
        limit = min(self.dimming, 1.0 - self.dimming)
        if not 0.0 < self.width_delta < limit:
            raise SchemeConfigError(
                f"PWM width_delta must be in (0, {limit:g}), got {self.width_delta}"
            )
        if self.samples_per_slot < 2:
            raise SchemeConfigError(f"PWM samples_per_slot must be >= 2, got {self.samples_per_slot}")
        narrow, wide = self.widths
        if narrow == wide:
            raise SchemeConfigError(
                "PWM widths collapse to the same sample count; raise samples_per_slot or width_delta"
            )

    @property
    def widths(self) -> tuple[int, int]:
        """(bit 0, bit 1) pulse widths in samples."""
        s = self.samples_per_slot
        return (
            int(round((self.dimming - self.width_delta) * s)),
            int(round((self.dimming + self.width_delta) * s)),
        )


@dataclass(frozen=True)
class PpmConfig:
    """L-PPM: one pulse in one of L slots per symbol."""

    slots_per_symbol: int = 4
    average_power: float = 0.5
    kind = "ppm"

    def __post_init__(self) -> None:
        if self.slots_per_symbol < 2 or not _is_power_of_two(self.slots_per_symbol):
            raise SchemeConfigError(
                f"PPM slots_per_symbol must be a power of two >= 2, got {self.slots_per_symbol}"
            )
        if not self.average_power > 0:
            raise SchemeConfigError(f"PPM average_power must be > 0, got {self.average_power}")

    @property
    def amplitude(self) -> float:
        return self.slots_per_symbol * self.average_power


@dataclass(frozen=True)
class VppmConfig:
    """Binary VPPM: the bit picks the pulse position (early/late half), dimming sets its width.

    One bit spans two slots of samples_per_symbol / 2 samples each.
    """

    dimming: float = 0.5
    samples_per_symbol: int = 20
    kind = "vppm"

    def __post_init__(self) -> None:
        if not 0.0 < self.dimming < 1.0:
            raise SchemeConfigError(f"VPPM dimming must be in (0, 1), got {self.dimming}")
        if self.samples_per_symbol < 2 or self.samples_per_symbol % 2:
            raise SchemeConfigError(
                f"VPPM samples_per_symbol must be even and >= 2, got {self.samples_per_symbol}"
            )

    @property
    def pulse_width(self) -> int:
        s = self.samples_per_symbol
        return min(max(int(round(self.dimming * s)), 1), s - 1)


@dataclass(frozen=True)
class OppmConfig:
    """Overlapping PPM: one pulse of w contiguous chips starting at any of n - w + 1 chips."""

    chips_per_symbol: int = 8
    pulse_width_chips: int = 4
    average_power: float = 0.5
    kind = "oppm"

    def __post_init__(self) -> None:
        if not 1 <= self.pulse_width_chips < self.chips_per_symbol:
            raise SchemeConfigError(
                f"OPPM needs 1 <= w < n, got n={self.chips_per_symbol} w={self.pulse_width_chips}"
            )
        if not self.average_power > 0:
            raise SchemeConfigError(f"OPPM average_power must be > 0, got {self.average_power}")

    @property
    def positions(self) -> int:
        return self.chips_per_symbol - self.pulse_width_chips + 1

    @property
    def amplitude(self) -> float:
        return self.chips_per_symbol * self.average_power / self.pulse_width_chips


def _check_ofdm(name: str, subcarriers: int, qam_order: int) -> None:
    if subcarriers < 8 or not _is_power_of_two(subcarriers):
        raise SchemeConfigError(f"{name} subcarriers must be a power of two >= 8, got {subcarriers}")
    bits = int(math.log2(qam_order)) if _is_power_of_two(qam_order) else 0
    if bits < 2 or bits % 2:
        raise SchemeConfigError(f"{name} qam_order must be a square power of two, got {qam_order}")


@dataclass(frozen=True)
class DcoOfdmConfig:
    """DC-biased optical OFDM. bias_db = 10 log10(k^2 + 1) with bias B = k * sigma."""

    subcarriers: int = 16
    qam_order: int = 4
    bias_db: float = 13.0
    kind = "dco-ofdm"

    def __post_init__(self) -> None:
        _check_ofdm("DCO-OFDM", self.subcarriers, self.qam_order)
        if not self.bias_db > 0:
            raise SchemeConfigError(f"DCO-OFDM bias_db must be > 0, got {self.bias_db}")

    @property
    def data_subcarriers(self) -> np.ndarray:
        return np.arange(1, self.subcarriers // 2)

    @property
    def signal_std(self) -> float:
        """Per-sample std of the unbiased time signal (unit-energy symbols, orthonormal IFFT)."""
        return math.sqrt(2.0 * self.data_subcarriers.size / self.subcarriers)

    @property
    def bias(self) -> float:
        k = math.sqrt(10.0 ** (self.bias_db / 10.0) - 1.0)
        return k * self.signal_std

    @property
    def clip_free_bias_db(self) -> float:
        """Smallest bias_db that no block can clip: the bias covers the worst-case peak.

        Each loaded subcarrier pair adds at most 2 |X|max / sqrt(N) to a sample.
        """
        _, levels, scale = _qam_geometry(self.qam_order)
        corner = math.sqrt(2.0) * (levels - 1) / scale
        peak = 2.0 * self.data_subcarriers.size * corner / math.sqrt(self.subcarriers)
        return 10.0 * math.log10((peak / self.signal_std) ** 2 + 1.0)


@dataclass(frozen=True)
class AcoOfdmConfig:
    """Asymmetrically clipped optical OFDM: odd subcarriers only, zero-clipped."""

    subcarriers: int = 16
    qam_order: int = 4
    kind = "aco-ofdm"

    def __post_init__(self) -> None:
        _check_ofdm("ACO-OFDM", self.subcarriers, self.qam_order)

    @property
    def data_subcarriers(self) -> np.ndarray:
        return np.arange(1, self.subcarriers // 2, 2)


SchemeConfig = Union[
    OokConfig, PwmConfig, PpmConfig, VppmConfig, OppmConfig, DcoOfdmConfig, AcoOfdmConfig
]
OfdmConfig = Union[DcoOfdmConfig, AcoOfdmConfig]
ALL_SCHEMES = (OokConfig, PwmConfig, PpmConfig, VppmConfig, OppmConfig, DcoOfdmConfig, AcoOfdmConfig)


# ============================================================================
# Waveform + metrics
# ============================================================================


@dataclass(frozen=True, eq=False)
class Waveform:
    """Intensity samples on a slot clock.

    Transmitted waveforms are non-negative. A received (noisy) copy sets
    noisy=True and may dip below zero.
    """

    samples: np.ndarray
    samples_per_slot: int = 1
    slot_rate: float = DEFAULT_SLOT_RATE
    payload_bits: Optional[int] = None
    noisy: bool = False

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float).ravel()
        if not np.all(np.isfinite(samples)):
            raise SchemeConfigError("Waveform samples must be finite")
        if not self.noisy and samples.size and samples.min() < 0:
            raise SchemeConfigError("Transmitted waveform samples must be >= 0 (IM constraint)")
        if self.samples_per_slot < 1:
            raise SchemeConfigError(f"samples_per_slot must be >= 1, got {self.samples_per_slot}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def slots(self) -> int:
        return self.samples.size // self.samples_per_slot

    @property
    def mean_intensity(self) -> float:
        return float(self.samples.mean()) if self.samples.size else 0.0

    def with_samples(self, samples: np.ndarray, noisy: bool = True) -> "Waveform":
        return Waveform(
            samples=samples,
            samples_per_slot=self.samples_per_slot,
            slot_rate=self.slot_rate,
            payload_bits=self.payload_bits,
            noisy=noisy,
        )


@dataclass(frozen=True)
class SchemeMetrics:
    bits_per_slot: float
    duty_cycle: float
    rate_factor: float = field(default=1.0)


def bits_per_symbol(config: SchemeConfig) -> int:
    """Codec bits carried by one symbol."""
    if isinstance(config, (OokConfig, PwmConfig, VppmConfig)):
        return 1
    if isinstance(config, PpmConfig):
        return int(math.log2(config.slots_per_symbol))
    if isinstance(config, OppmConfig):
        return int(math.floor(math.log2(config.positions)))
    if isinstance(config, (DcoOfdmConfig, AcoOfdmConfig)):
        return config.data_subcarriers.size * int(math.log2(config.qam_order))
    raise SchemeConfigError(f"Unknown scheme config: {config!r}")


def samples_per_slot(config: SchemeConfig) -> int:
    if isinstance(config, PwmConfig):
        return config.samples_per_slot
    if isinstance(config, VppmConfig):
        return config.samples_per_symbol // 2
    return 1


def symbol_length(config: SchemeConfig) -> int:
    """Samples per symbol (OOK: per data slot)."""
    if isinstance(config, PpmConfig):
        return config.slots_per_symbol
    if isinstance(config, OppmConfig):
        return config.chips_per_symbol
    if isinstance(config, VppmConfig):
        return config.samples_per_symbol
    if isinstance(config, (DcoOfdmConfig, AcoOfdmConfig)):
        return config.subcarriers
    return samples_per_slot(config)


def ook_rate_factor(dimming: float) -> float:
    """Fraction of slots carrying data once compensation time is added."""
    return 1.0 - abs(2.0 * dimming - 1.0)


def scheme_metrics(config: SchemeConfig) -> SchemeMetrics:
    """Spectral-efficiency, power and dimming-rate proxies for one scheme."""
    if isinstance(config, OokConfig):
        return SchemeMetrics(1.0, config.dimming, ook_rate_factor(config.dimming))
    if isinstance(config, PwmConfig):
        return SchemeMetrics(1.0, config.dimming)
    if isinstance(config, PpmConfig):
        L = config.slots_per_symbol
        return SchemeMetrics(math.log2(L) / L, 1.0 / L)
    if isinstance(config, VppmConfig):
        return SchemeMetrics(0.5, config.dimming)
    if isinstance(config, OppmConfig):
        n, w = config.chips_per_symbol, config.pulse_width_chips
        return SchemeMetrics(math.log2(n - w + 1) / n, w / n)
    if isinstance(config, (DcoOfdmConfig, AcoOfdmConfig)):
        bits = config.data_subcarriers.size * math.log2(config.qam_order)
        # ACO clips every other sample pair to zero; DCO stays biased on
        duty = 0.5 if isinstance(config, AcoOfdmConfig) else 1.0
        return SchemeMetrics(bits / config.subcarriers, duty)
    raise SchemeConfigError(f"Unknown scheme config: {config!r}")


def information_rate(config: SchemeConfig, slot_rate: float = DEFAULT_SLOT_RATE) -> float:
    """Achievable information rate in bits/s at a given slot rate."""
    metrics = scheme_metrics(config)
    return metrics.bits_per_slot * metrics.rate_factor * slot_rate


# ============================================================================
# Bit helpers + Gray QAM
# ============================================================================


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits).ravel()
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise SchemeConfigError("Bits must be 0 or 1")
    return arr.astype(np.uint8)


def _pad(bits: np.ndarray, k: int) -> np.ndarray:
    remainder = (-bits.size) % k
    return np.concatenate([bits, np.zeros(remainder, dtype=np.uint8)]) if remainder else bits


def _bits_to_index(groups: np.ndarray) -> np.ndarray:
    k = groups.shape[1]
    weights = 1 << np.arange(k - 1, -1, -1)
    return groups.astype(np.int64) @ weights


def _index_to_bits(index: np.ndarray, k: int) -> np.ndarray:
    shifts = np.arange(k - 1, -1, -1)
    return ((index[:, None] >> shifts) & 1).astype(np.uint8)


def _gray_decode(gray: np.ndarray, nbits: int) -> np.ndarray:
    value = gray.copy()
    shift = gray >> 1
    for _ in range(nbits):
        value ^= shift
        shift >>= 1
    return value


def _qam_geometry(qam_order: int) -> tuple[int, int, float]:
    bits_per_axis = int(math.log2(qam_order)) // 2
    levels = 1 << bits_per_axis
    scale = math.sqrt(2.0 * (qam_order - 1) / 3.0)
    return bits_per_axis, levels, scale


def qam_modulate(bits, qam_order: int) -> np.ndarray:
    """Gray-mapped square QAM, unit average energy. First half of each group is I."""
    b, levels, scale = _qam_geometry(qam_order)
    groups = _as_bits(bits).reshape(-1, 2 * b)
    gray_i = _bits_to_index(groups[:, :b])
    gray_q = _bits_to_index(groups[:, b:])
    pam_i = 2 * _gray_decode(gray_i, b) - (levels - 1)
    pam_q = 2 * _gray_decode(gray_q, b) - (levels - 1)
    return (pam_i + 1j * pam_q) / scale


def qam_demodulate(symbols: np.ndarray, qam_order: int) -> np.ndarray:
    """Nearest-point slicing back to Gray bits."""
    b, levels, scale = _qam_geometry(qam_order)
    sym = np.asarray(symbols).ravel() * scale

    def axis_bits(component: np.ndarray) -> np.ndarray:
        index = np.clip(np.rint((component + (levels - 1)) / 2.0), 0, levels - 1).astype(np.int64)
        return _index_to_bits(index ^ (index >> 1), b)

    return np.hstack([axis_bits(sym.real), axis_bits(sym.imag)]).ravel()


# ============================================================================
# Single-carrier codecs
# ============================================================================


def ook_compensation_slots(data_slots: int, dimming: float) -> int:
    fraction = abs(2.0 * dimming - 1.0)
    if fraction == 0.0:
        return 0
    return int(round(data_slots * fraction / (1.0 - fraction)))


def _encode_ook(bits: np.ndarray, config: OokConfig) -> np.ndarray:
    level = 1.0 if config.dimming > 0.5 else 0.0
    comp = ook_compensation_slots(bits.size, config.dimming)
    return np.concatenate([bits.astype(float), np.full(comp, level)])


def _decode_ook(samples: np.ndarray, config: OokConfig) -> np.ndarray:
    total = samples.size
    estimate = int(total * ook_rate_factor(config.dimming))
    for data_slots in range(max(estimate - 2, 0), estimate + 3):
        if data_slots + ook_compensation_slots(data_slots, config.dimming) == total:
            return (samples[:data_slots] > 0.5).astype(np.uint8)
    raise FramingError(f"{total} OOK slots do not match any data + compensation framing")


def _encode_pwm(bits: np.ndarray, config: PwmConfig) -> np.ndarray:
    narrow, wide = config.widths
    widths = np.where(bits == 1, wide, narrow)
    ramp = np.arange(config.samples_per_slot)
    return (ramp[None, :] < widths[:, None]).astype(float).ravel()


def _decode_pwm(samples: np.ndarray, config: PwmConfig) -> np.ndarray:
    narrow, wide = config.widths
    slots = samples.reshape(-1, config.samples_per_slot)
    # Only the samples where the two widths differ carry information
    statistic = slots[:, narrow:wide].sum(axis=1)
    return (statistic > (wide - narrow) / 2.0).astype(np.uint8)


def _vppm_templates(config: VppmConfig) -> tuple[np.ndarray, np.ndarray]:
    s, w = config.samples_per_symbol, config.pulse_width
    early = np.zeros(s)
    early[:w] = 1.0
    late = np.zeros(s)
    late[s - w:] = 1.0
    return early, late


def _encode_vppm(bits: np.ndarray, config: VppmConfig) -> np.ndarray:
    early, late = _vppm_templates(config)
    return np.where(bits[:, None] == 1, late[None, :], early[None, :]).ravel()


def _decode_vppm(samples: np.ndarray, config: VppmConfig) -> np.ndarray:
    early, late = _vppm_templates(config)
    symbols = samples.reshape(-1, config.samples_per_symbol)
    return (symbols @ (late - early) > 0).astype(np.uint8)


def _encode_ppm(bits: np.ndarray, config: PpmConfig) -> np.ndarray:
    k, L = bits_per_symbol(config), config.slots_per_symbol
    index = _bits_to_index(bits.reshape(-1, k))
    frame = np.zeros((index.size, L))
    frame[np.arange(index.size), index] = config.amplitude
    return frame.ravel()


def _decode_ppm(samples: np.ndarray, config: PpmConfig) -> np.ndarray:
    k = bits_per_symbol(config)
    index = samples.reshape(-1, config.slots_per_symbol).argmax(axis=1)
    return _index_to_bits(index, k).ravel()


def _encode_oppm(bits: np.ndarray, config: OppmConfig) -> np.ndarray:
    k, n, w = bits_per_symbol(config), config.chips_per_symbol, config.pulse_width_chips
    start = _bits_to_index(bits.reshape(-1, k))
    chips = np.arange(n)
    on = (chips[None, :] >= start[:, None]) & (chips[None, :] < start[:, None] + w)
    return on.astype(float).ravel() * config.amplitude


def _decode_oppm(samples: np.ndarray, config: OppmConfig) -> np.ndarray:
    k, n, w = bits_per_symbol(config), config.chips_per_symbol, config.pulse_width_chips
    symbols = samples.reshape(-1, n)
    cumulative = np.concatenate([np.zeros((symbols.shape[0], 1)), symbols.cumsum(axis=1)], axis=1)
    starts = np.arange(1 << k)
    window = cumulative[:, starts + w] - cumulative[:, starts]
    return _index_to_bits(window.argmax(axis=1), k).ravel()


# ============================================================================
# Optical OFDM
# ============================================================================


def ofdm_blocks(bits, config: OfdmConfig) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian-loaded time blocks before clipping/bias, and the QAM symbols.

    Returns (time_blocks of shape (B, N), symbols of shape (B, K)).
    """
    data = _pad(_as_bits(bits), bits_per_symbol(config))
    carriers = config.data_subcarriers
    n = config.subcarriers
    symbols = qam_modulate(data, config.qam_order).reshape(-1, carriers.size)

    spectrum = np.zeros((symbols.shape[0], n), dtype=complex)
    spectrum[:, carriers] = symbols
    spectrum[:, n - carriers] = np.conj(symbols)
    blocks = np.fft.ifft(spectrum, axis=1, norm="ortho").real
    return blocks, symbols


def _encode_ofdm(bits: np.ndarray, config: OfdmConfig) -> np.ndarray:
    blocks, _ = ofdm_blocks(bits, config)
    if isinstance(config, DcoOfdmConfig):
        blocks = blocks + config.bias
    return np.maximum(blocks, 0.0).ravel()


def ofdm_spectrum(waveform: Waveform, config: OfdmConfig) -> np.ndarray:
    """Received data-subcarrier symbols after clipping compensation, shape (B, K)."""
    samples = waveform.samples
    if samples.size % config.subcarriers:
        raise FramingError(
            f"{samples.size} samples is not a whole number of {config.subcarriers}-sample OFDM blocks"
        )
    spectrum = np.fft.fft(samples.reshape(-1, config.subcarriers), axis=1, norm="ortho")
    symbols = spectrum[:, config.data_subcarriers]
    # Zero-clipping halves every odd subcarrier; the bias only touches DC
    return 2.0 * symbols if isinstance(config, AcoOfdmConfig) else symbols


def _decode_ofdm(samples: np.ndarray, config: OfdmConfig) -> np.ndarray:
    symbols = ofdm_spectrum(Waveform(samples, noisy=True), config)
    return qam_demodulate(symbols, config.qam_order)


def evm(reference: np.ndarray, received: np.ndarray) -> float:
    """RMS error vector magnitude relative to the RMS reference."""
    ref = np.asarray(reference).ravel()
    err = np.asarray(received).ravel() - ref
    return float(np.sqrt(np.mean(np.abs(err) ** 2) / np.mean(np.abs(ref) ** 2)))


# ============================================================================
# Public codec entry points
# ============================================================================

_CODECS = {
    OokConfig: (_encode_ook, _decode_ook),
    PwmConfig: (_encode_pwm, _decode_pwm),
    PpmConfig: (_encode_ppm, _decode_ppm),
    VppmConfig: (_encode_vppm, _decode_vppm),
    OppmConfig: (_encode_oppm, _decode_oppm),
    DcoOfdmConfig: (_encode_ofdm, _decode_ofdm),
    AcoOfdmConfig: (_encode_ofdm, _decode_ofdm),
}


def _codec(config: SchemeConfig):
    try:
        return _CODECS[type(config)]
    except KeyError:
        raise SchemeConfigError(f"Unknown scheme config: {config!r}") from None


def encode(bits, config: SchemeConfig, slot_rate: float = DEFAULT_SLOT_RATE) -> Waveform:
    """Map bits to a non-negative intensity waveform."""
    encoder, _ = _codec(config)
    data = _as_bits(bits)
    if data.size == 0:
        samples = np.zeros(0)
    else:
        samples = encoder(_pad(data, bits_per_symbol(config)), config)
    return Waveform(
        samples=samples,
        samples_per_slot=samples_per_slot(config),
        slot_rate=slot_rate,
        payload_bits=int(data.size),
    )


def decode(waveform: Waveform, config: SchemeConfig) -> np.ndarray:
    """Per-symbol maximum-likelihood detection back to bits."""
    _, decoder = _codec(config)
    if waveform.samples_per_slot != samples_per_slot(config):
        raise FramingError(
            f"Waveform has {waveform.samples_per_slot} samples/slot, "
            f"{config.kind} expects {samples_per_slot(config)}"
        )
    samples = waveform.samples
    if samples.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if not isinstance(config, OokConfig) and samples.size % symbol_length(config):
        raise FramingError(
            f"{samples.size} samples is not a whole number of "
            f"{symbol_length(config)}-sample {config.kind} symbols"
        )

    bits = decoder(samples, config)
    if waveform.payload_bits is not None:
        bits = bits[: waveform.payload_bits]
    return bits
