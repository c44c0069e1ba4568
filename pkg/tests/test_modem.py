"""
Modem tests
===========
Codec round-trips, the IM constraint, dimming, framing, metrics and the
optical OFDM clipping properties.

Usage:
    pytest tests/test_modem.py -v
"""

import itertools
import math

import numpy as np
import pytest

from modules.lifisim.errors import FramingError, SchemeConfigError
from modules.lifisim.modem import (
    AcoOfdmConfig,
    DcoOfdmConfig,
    OokConfig,
    OppmConfig,
    PpmConfig,
    PwmConfig,
    VppmConfig,
    Waveform,
    bits_per_symbol,
    decode,
    encode,
    evm,
    information_rate,
    ofdm_blocks,
    ofdm_spectrum,
    qam_demodulate,
    qam_modulate,
    scheme_metrics,
    symbol_length,
)

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

ALL_CONFIGS = [
    OokConfig(),
    OokConfig(dimming=0.75),
    OokConfig(dimming=0.2),
    PwmConfig(),
    PwmConfig(dimming=0.3, width_delta=0.15),
    PpmConfig(slots_per_symbol=4),
    PpmConfig(slots_per_symbol=16),
    VppmConfig(),
    VppmConfig(dimming=0.8),
    OppmConfig(),
    OppmConfig(chips_per_symbol=10, pulse_width_chips=3),
    DcoOfdmConfig(),
    DcoOfdmConfig(subcarriers=64, qam_order=16, bias_db=13.0),
    AcoOfdmConfig(),
    AcoOfdmConfig(subcarriers=64, qam_order=64),
]


def config_id(config) -> str:
    return repr(config)


def random_bits(seed: int, n: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, size=n, dtype=np.uint8)


def balanced_bits(seed: int, n: int) -> np.ndarray:
    """Exactly n/2 ones in random order."""
    bits = np.zeros(n, dtype=np.uint8)
    bits[: n // 2] = 1
    return np.random.default_rng(seed).permutation(bits)


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------


class TestConfigs:
    """Invalid configurations raise SchemeConfigError."""

    @pytest.mark.parametrize(
        "factory",
        [
            lambda: OokConfig(dimming=0.0),
            lambda: OokConfig(dimming=1.0),
            lambda: PwmConfig(dimming=0.05),
            lambda: PwmConfig(width_delta=0.0),
            lambda: PwmConfig(samples_per_slot=1),
            lambda: PpmConfig(slots_per_symbol=3),
            lambda: PpmConfig(slots_per_symbol=1),
            lambda: PpmConfig(average_power=0.0),
            lambda: VppmConfig(samples_per_symbol=7),
            lambda: OppmConfig(chips_per_symbol=4, pulse_width_chips=4),
            lambda: OppmConfig(pulse_width_chips=0),
            lambda: DcoOfdmConfig(subcarriers=12),
            lambda: DcoOfdmConfig(qam_order=8),
            lambda: DcoOfdmConfig(bias_db=0.0),
            lambda: AcoOfdmConfig(subcarriers=4),
            lambda: AcoOfdmConfig(qam_order=2),
        ],
    )
    def test_invalid(self, factory):
        """Out-of-range parameters are rejected at construction."""
        with pytest.raises(SchemeConfigError):
            factory()

    def test_framing_constants(self):
        """Bits per symbol and samples per symbol for each family."""
        assert (bits_per_symbol(PpmConfig(8)), symbol_length(PpmConfig(8))) == (3, 8)
        assert (bits_per_symbol(OppmConfig(8, 4)), symbol_length(OppmConfig(8, 4))) == (2, 8)
        assert (bits_per_symbol(DcoOfdmConfig(16, 4)), symbol_length(DcoOfdmConfig(16, 4))) == (14, 16)
        assert (bits_per_symbol(AcoOfdmConfig(16, 16)), symbol_length(AcoOfdmConfig(16, 16))) == (16, 16)
        assert symbol_length(VppmConfig(samples_per_symbol=20)) == 20


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


class TestEncode:
    """Waveform construction and the IM constraint."""

    def test_ook_half_dimming(self):
        """OOK at 50% needs no compensation slots."""
        wf = encode([1, 0, 1, 0], OokConfig(dimming=0.5))
        assert wf.samples.tolist() == [1.0, 0.0, 1.0, 0.0]

    def test_ppm_one_hot(self):
        """PPM L=4, bits 1,0 -> pulse of amplitude L*P in slot 2."""
        wf = encode([1, 0], PpmConfig(slots_per_symbol=4, average_power=0.5))
        assert wf.samples.tolist() == [0.0, 0.0, 2.0, 0.0]

    def test_ook_compensation_level(self):
        """Above 50% the compensation block is all ON, below it is all OFF."""
        bright = encode([0, 1, 0, 1], OokConfig(dimming=0.75)).samples
        dark = encode([0, 1, 0, 1, 1, 0], OokConfig(dimming=0.25)).samples
        assert bright.tolist() == [0, 1, 0, 1, 1, 1, 1, 1]
        assert dark.tolist() == [0, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0]

    def test_oppm_pulse(self):
        """OPPM n=8 w=4: symbol index 3 starts the pulse at chip 3."""
        wf = encode([1, 1], OppmConfig(chips_per_symbol=8, pulse_width_chips=4, average_power=0.5))
        assert wf.samples.tolist() == [0, 0, 0, 1.0, 1.0, 1.0, 1.0, 0]

    def test_empty_input(self):
        """No bits, no samples; decoding gives no bits back."""
        for config in ALL_CONFIGS:
            wf = encode([], config)
            assert len(wf) == 0
            assert decode(wf, config).size == 0

    def test_rejects_non_binary(self):
        """Only 0/1 are bits."""
        with pytest.raises(SchemeConfigError):
            encode([0, 2, 1], OokConfig())

    @pytest.mark.parametrize("config", ALL_CONFIGS, ids=config_id)
    def test_non_negative(self, config):
        """Every sample of every waveform is >= 0."""
        for seed in range(5):
            wf = encode(random_bits(seed, 257), config)
            assert wf.samples.min() >= 0.0

    def test_dco_low_bias_clips_but_stays_unipolar(self):
        """A weak bias clips negatives to zero instead of going below."""
        wf = encode(random_bits(1, 2800), DcoOfdmConfig(bias_db=3.0))
        assert wf.samples.min() == 0.0

    def test_transmit_waveform_rejects_negative(self):
        """A clean waveform cannot carry negative intensity."""
        with pytest.raises(SchemeConfigError):
            Waveform(np.array([0.2, -0.1]))
        assert Waveform(np.array([0.2, -0.1]), noisy=True).samples[1] == -0.1


class TestDimming:
    """Mean intensity tracks the configured level."""

    @pytest.mark.parametrize("dimming", [0.2, 0.3, 0.5, 0.6, 0.75])
    def test_ook(self, dimming):
        """Balanced data plus compensation lands on the target."""
        wf = encode(balanced_bits(3, 600), OokConfig(dimming=dimming))
        assert wf.mean_intensity == pytest.approx(dimming, abs=1.0 / len(wf))

    def test_ook_random_data_in_expectation(self):
        """Random data hits the level on average; the miss scales with the ones-count imbalance."""
        bits = random_bits(13, 100_000)
        wf = encode(bits, OokConfig(dimming=0.3))
        ones_share = bits.mean() / 0.5
        assert wf.mean_intensity == pytest.approx(0.3 * ones_share, abs=1.0 / len(wf))
        assert abs(wf.mean_intensity - 0.3) <= 0.005

    @pytest.mark.parametrize("dimming", [0.3, 0.5, 0.7])
    def test_pwm(self, dimming):
        """The two widths average to the dimming duty."""
        config = PwmConfig(dimming=dimming, width_delta=0.1, samples_per_slot=20)
        wf = encode(balanced_bits(4, 400), config)
        assert wf.mean_intensity == pytest.approx(dimming, abs=1.0 / config.samples_per_slot)

    @pytest.mark.parametrize("dimming", [0.1, 0.45, 0.9])
    def test_vppm(self, dimming):
        """VPPM holds the level for any data."""
        config = VppmConfig(dimming=dimming, samples_per_symbol=20)
        wf = encode(random_bits(5, 300), config)
        assert wf.mean_intensity == pytest.approx(dimming, abs=1.0 / config.samples_per_symbol)

    @pytest.mark.parametrize("config", [PpmConfig(4, 0.5), PpmConfig(16, 0.25), OppmConfig(8, 4, 0.4)])
    def test_pulse_position_average_power(self, config):
        """PPM and OPPM average exactly the configured power."""
        wf = encode(random_bits(6, 480), config)
        assert wf.mean_intensity == pytest.approx(config.average_power, rel=1e-12)


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------


class TestDecode:
    """Noiseless identity, ML decisions and framing."""

    @pytest.mark.parametrize("config", ALL_CONFIGS, ids=config_id)
    def test_round_trip(self, config):
        """decode(encode(b)) == b for assorted lengths, padding included."""
        for n in (1, 2, 3, 7, 14, 31, 64, 129, 500):
            bits = random_bits(n, n)
            assert np.array_equal(decode(encode(bits, config), config), bits), f"n={n}"

    def test_ppm_argmax(self):
        """PPM picks the largest slot."""
        received = Waveform(np.array([0.1, 0.9, 0.2, 0.15]), noisy=True)
        assert decode(received, PpmConfig(4)).tolist() == [0, 1]

    def test_ook_threshold(self):
        """OOK slices at half amplitude."""
        received = Waveform(np.array([0.49, 0.51, -0.2, 1.3]), noisy=True)
        assert decode(received, OokConfig()).tolist() == [0, 1, 0, 1]

    def test_oppm_window(self):
        """OPPM picks the start whose window holds the most energy."""
        received = Waveform(np.array([0.0, 0.1, 0.9, 1.1, 1.0, 0.8, 0.2, 0.0]), noisy=True)
        assert decode(received, OppmConfig(8, 4, 0.5)).tolist() == [1, 0]

    def test_partial_symbol(self):
        """A truncated PPM frame is a framing error."""
        with pytest.raises(FramingError):
            decode(Waveform(np.zeros(5)), PpmConfig(4))

    def test_ook_bad_compensation_length(self):
        """No data/compensation split explains 3 slots at 75% dimming."""
        with pytest.raises(FramingError):
            decode(Waveform(np.ones(3)), OokConfig(dimming=0.75))

    def test_slot_size_mismatch(self):
        """A waveform cut for another slot size is rejected."""
        wf = encode([1, 0, 1], PwmConfig(samples_per_slot=20))
        with pytest.raises(FramingError):
            decode(wf, PwmConfig(samples_per_slot=10))


# ---------------------------------------------------------------------------
# QAM + OFDM
# ---------------------------------------------------------------------------


class TestQam:
    """Gray-mapped square QAM."""

    @pytest.mark.parametrize("order", [4, 16, 64, 256])
    def test_unit_energy(self, order):
        """The full constellation has unit average energy."""
        k = int(math.log2(order))
        labels = np.array(list(itertools.product([0, 1], repeat=k)), dtype=np.uint8).ravel()
        symbols = qam_modulate(labels, order)
        assert symbols.size == order
        assert np.mean(np.abs(symbols) ** 2) == pytest.approx(1.0)
        assert np.array_equal(qam_demodulate(symbols, order), labels)

    def test_gray_neighbours(self):
        """Adjacent 16-QAM levels on an axis differ in exactly one bit."""
        labels = np.array(list(itertools.product([0, 1], repeat=4)), dtype=np.uint8)
        symbols = qam_modulate(labels.ravel(), 16)
        row = [(s.real, tuple(lab[:2])) for s, lab in zip(symbols, labels) if lab[2:].tolist() == [0, 0]]
        row.sort()
        for (_, a), (_, b) in zip(row, row[1:]):
            assert sum(x != y for x, y in zip(a, b)) == 1


class TestOfdm:
    """Hermitian loading, ACO antisymmetry and clipping compensation."""

    @pytest.mark.parametrize("n, order", [(16, 4), (16, 16), (64, 4), (64, 16)])
    def test_aco_antisymmetry(self, n, order):
        """Odd-only loading gives x[k] = -x[k + N/2] before clipping."""
        blocks, _ = ofdm_blocks(random_bits(n, 40 * n), AcoOfdmConfig(n, order))
        assert np.max(np.abs(blocks[:, : n // 2] + blocks[:, n // 2:])) < 1e-9

    @pytest.mark.parametrize("n, order", [(16, 4), (64, 16)])
    def test_aco_clipping_lossless(self, n, order):
        """Zero clipping halves odd subcarriers; x2 restores them exactly."""
        config = AcoOfdmConfig(n, order)
        bits = random_bits(7, 10 * bits_per_symbol(config))
        _, reference = ofdm_blocks(bits, config)
        assert evm(reference, ofdm_spectrum(encode(bits, config), config)) < 1e-9

    def test_dco_high_bias_noiseless(self):
        """A 13 dB bias leaves N=16 4-QAM unclipped: EVM ~ 0."""
        config = DcoOfdmConfig(16, 4, bias_db=13.0)
        bits = random_bits(8, 50 * bits_per_symbol(config))
        _, reference = ofdm_blocks(bits, config)
        wf = encode(bits, config)
        assert wf.samples.min() > 0.0
        assert evm(reference, ofdm_spectrum(wf, config)) < 1e-9

    @pytest.mark.parametrize(
        "n, order, expected_db",
        [(16, 4, 10 * math.log10(15.0)), (64, 4, 10 * math.log10(63.0))],
    )
    def test_clip_free_bias_4qam(self, n, order, expected_db):
        """4-QAM peaks at 2K/sqrt(N), so the clip-free bias is 10 log10(2K + 1)."""
        assert DcoOfdmConfig(n, order).clip_free_bias_db == pytest.approx(expected_db)

    def test_13db_crossover(self):
        """13 dB clears the N=16 4-QAM peak but not N=64 16-QAM."""
        assert DcoOfdmConfig(16, 4).clip_free_bias_db <= 13.0
        assert DcoOfdmConfig(64, 16).clip_free_bias_db > 13.0

    @pytest.mark.parametrize("n, order", [(16, 4), (16, 16), (64, 4), (64, 16)])
    def test_dco_clip_free_bias_noiseless(self, n, order):
        """At the clip-free bias every configuration round-trips with EVM ~ 0."""
        config = DcoOfdmConfig(n, order, bias_db=DcoOfdmConfig(n, order).clip_free_bias_db)
        bits = random_bits(n + order, 200 * bits_per_symbol(config))
        _, reference = ofdm_blocks(bits, config)
        assert evm(reference, ofdm_spectrum(encode(bits, config), config)) < 1e-9

    def test_dco_low_bias_clips(self):
        """Below the clip-free bias, zero clipping shows up as constellation error."""
        config = DcoOfdmConfig(64, 16, bias_db=7.0)
        bits = random_bits(10, 200 * bits_per_symbol(config))
        _, reference = ofdm_blocks(bits, config)
        assert evm(reference, ofdm_spectrum(encode(bits, config), config)) > 1e-4

    def test_time_signal_is_real(self):
        """Hermitian symmetry leaves no imaginary residue."""
        config = DcoOfdmConfig(32, 16)
        bits = random_bits(9, 4 * bits_per_symbol(config))
        _, symbols = ofdm_blocks(bits, config)
        spectrum = np.zeros((symbols.shape[0], 32), dtype=complex)
        carriers = config.data_subcarriers
        spectrum[:, carriers] = symbols
        spectrum[:, 32 - carriers] = np.conj(symbols)
        assert np.max(np.abs(np.fft.ifft(spectrum, axis=1).imag)) < 1e-12


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


class TestMetrics:
    """Spectral-efficiency, power and rate proxies."""

    def test_ook_rate_factor(self):
        """Compensation time costs rate linearly away from 50%."""
        assert scheme_metrics(OokConfig(0.5)).rate_factor == pytest.approx(1.0)
        assert scheme_metrics(OokConfig(0.75)).rate_factor == pytest.approx(0.5)
        assert scheme_metrics(OokConfig(0.1)).rate_factor == pytest.approx(0.2)

    def test_ppm(self):
        """PPM L=4: half a bit per slot at quarter duty."""
        metrics = scheme_metrics(PpmConfig(4))
        assert (metrics.bits_per_slot, metrics.duty_cycle) == pytest.approx((0.5, 0.25))

    def test_oppm_beats_equal_duty_ppm(self):
        """OPPM n=8 w=4 carries log2(5)/8 bits per chip; 2-PPM with the same pulse and frame carries 1/8."""
        assert scheme_metrics(OppmConfig(8, 4)).bits_per_slot == pytest.approx(math.log2(5) / 8)
        assert scheme_metrics(OppmConfig(8, 4)).bits_per_slot > math.log2(2) / 8

    def test_vppm_and_pwm(self):
        """VPPM spends two slots per bit; both track dimming as duty."""
        assert scheme_metrics(VppmConfig(0.3)).bits_per_slot == 0.5
        assert scheme_metrics(VppmConfig(0.3)).duty_cycle == pytest.approx(0.3)
        assert scheme_metrics(PwmConfig(0.4)).duty_cycle == pytest.approx(0.4)

    @pytest.mark.parametrize("config", ALL_CONFIGS, ids=config_id)
    def test_ranges(self, config):
        """Duty cycle and rate factor lie in (0, 1]."""
        metrics = scheme_metrics(config)
        assert metrics.bits_per_slot > 0
        assert 0 < metrics.duty_cycle <= 1
        assert 0 < metrics.rate_factor <= 1

    @pytest.mark.parametrize("dimming", [0.2, 0.5, 0.75])
    def test_ook_achieved_rate(self, dimming):
        """Data slots over total slots equals the rate factor."""
        config = OokConfig(dimming)
        wf = encode(balanced_bits(10, 1000), config)
        achieved = 1000 / len(wf) * 1e6
        assert achieved == pytest.approx(information_rate(config, 1e6), rel=1.0 / len(wf))
