"""
Channel tests
=============
Lambertian LOS gain, received power, SNR and the calibration helpers.

Usage:
    pytest tests/test_channel.py -v
"""

import math
from dataclasses import replace

import pytest
from scipy.special import erfc

from modules.lifisim.channel import (
    TABLE3_THETAS,
    LedPanel,
    Mobility,
    NoiseModel,
    Receiver,
    ber_ook,
    ber_threshold_snr,
    calibrate_to_anchor,
    calibrate_to_ber,
    lambertian_order,
    link_snr,
    los_gain,
    max_irradiance_angle,
    primary_link,
    radiant_intensity,
    received_power,
    snr,
    snr_at_angles,
    table3_sweep,
)
from modules.lifisim.errors import (
    CalibrationError,
    InvalidParameterError,
    InvalidScenarioError,
)
from modules.lifisim.geometry import LinkGeometry, Point3, Room
from modules.lifisim.planner import Scenario
from modules.lifisim.scenario_file import default_scenario

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

PANEL = LedPanel(position=Point3(2.5, 2.5, 3.0))
RECEIVER = Receiver(position=Point3(4.65, 2.5, 0.85))
NOISE = NoiseModel(1e-7)


def closed_form_gain(m, d, area, theta, ts, n, fov, phi) -> float:
    """LOS gain written out longhand."""
    g = n**2 / math.sin(math.radians(fov)) ** 2
    return (
        (m + 1) / (2 * math.pi * d**2)
        * area
        * math.cos(math.radians(theta)) ** m
        * ts
        * g
        * math.cos(math.radians(phi))
    )


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


class TestTypes:
    """Parameter validation on panels, receivers and noise."""

    @pytest.mark.parametrize("semi_angle", [0.0, 90.0, -5.0])
    def test_semi_angle_range(self, semi_angle):
        """Semi-angle must be strictly inside (0, 90)."""
        with pytest.raises(InvalidParameterError):
            LedPanel(position=Point3(1, 1, 3), semi_angle=semi_angle)

    def test_brightness_range(self):
        """Brightness is a level in (0, 1]."""
        with pytest.raises(InvalidParameterError):
            LedPanel(position=Point3(1, 1, 3), brightness=0.0)
        with pytest.raises(InvalidParameterError):
            LedPanel(position=Point3(1, 1, 3), brightness=1.2)

    def test_receiver_fov_and_index(self):
        """FOV in (0, 90], concentrator index >= 1."""
        with pytest.raises(InvalidParameterError):
            Receiver(position=Point3(1, 1, 1), fov=0.0)
        with pytest.raises(InvalidParameterError):
            Receiver(position=Point3(1, 1, 1), concentrator_index=0.9)

    def test_noise_positive(self):
        """Zero noise variance is rejected."""
        with pytest.raises(InvalidParameterError):
            NoiseModel(0.0)

    def test_moveable_tilt_limit(self):
        """A moveable panel's max tilt must lie in [0, 90]."""
        assert Mobility.moveable(60).is_moveable
        with pytest.raises(InvalidParameterError):
            Mobility.moveable(120)

    def test_total_power_counts_leds(self):
        """Panel power aggregates every LED."""
        lp = LedPanel(position=Point3(1, 1, 3), optical_power=0.5, led_count=4)
        assert lp.total_power == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


class TestGain:
    """Lambertian order and LOS gain."""

    @pytest.mark.parametrize(
        "semi_angle, expected",
        [(60.0, 1.0), (45.0, 2.0), (15.0, 20.0)],
    )
    def test_lambertian_order(self, semi_angle, expected):
        """m = -ln 2 / ln cos(semi-angle)."""
        assert lambertian_order(semi_angle) == pytest.approx(expected, rel=1e-3)

    def test_gain_matches_closed_form(self):
        """los_gain equals the longhand formula at the default link."""
        geom = LinkGeometry(theta=45.0, phi=45.0, distance=3.0406)
        expected = closed_form_gain(1.0, 3.0406, 1e-4, 45.0, 1.0, 1.5, 60.0, 45.0)
        assert los_gain(geom, PANEL, RECEIVER) == pytest.approx(expected, rel=1e-12)

    def test_gain_zero_outside_fov(self):
        """Incidence beyond the field of view gives zero gain."""
        geom = LinkGeometry(theta=10.0, phi=60.5, distance=3.0)
        assert los_gain(geom, PANEL, RECEIVER) == 0.0

    def test_gain_zero_behind_panel(self):
        """Irradiance at or past 90 degrees gives zero gain."""
        assert los_gain(LinkGeometry(90.0, 10.0, 3.0), PANEL, RECEIVER) == 0.0
        assert los_gain(LinkGeometry(120.0, 10.0, 3.0), PANEL, RECEIVER) == 0.0

    def test_gain_at_fov_edge(self):
        """phi exactly at the FOV still counts."""
        assert los_gain(LinkGeometry(10.0, 60.0, 3.0), PANEL, RECEIVER) > 0.0

    def test_gain_inverse_square(self):
        """Doubling distance quarters the gain."""
        near = los_gain(LinkGeometry(30.0, 30.0, 1.5), PANEL, RECEIVER)
        far = los_gain(LinkGeometry(30.0, 30.0, 3.0), PANEL, RECEIVER)
        assert near / far == pytest.approx(4.0)

    def test_radiant_intensity_on_axis(self):
        """On-axis intensity is (m+1)/(2 pi) times the power."""
        assert radiant_intensity(PANEL, 0.0) == pytest.approx(2.0 / (2.0 * math.pi))
        assert radiant_intensity(PANEL, 90.0) == 0.0


class TestSnr:
    """Received power and the SNR ratio."""

    def test_received_power_scales(self):
        """P_rec scales with LED count and detector gain."""
        lp = LedPanel(position=Point3(1, 1, 3), led_count=3)
        assert received_power(lp, 2e-6, detector_gain=2.0) == pytest.approx(1.2e-5)

    def test_negative_gain_rejected(self):
        """A negative channel gain is a caller error."""
        with pytest.raises(InvalidParameterError):
            received_power(PANEL, -1e-6)

    def test_brightness_squared(self):
        """Halving brightness quarters the SNR."""
        full = snr(1.0, 1e-5, NOISE).snr_linear
        half = snr(0.5, 1e-5, NOISE).snr_linear
        assert half / full == pytest.approx(0.25)

    def test_linear_in_power(self):
        """SNR is linear in received power."""
        assert snr(1.0, 2e-5, NOISE).snr_linear == pytest.approx(2 * snr(1.0, 1e-5, NOISE).snr_linear)

    def test_zero_power_is_no_signal(self):
        """Zero received power reports -inf dB."""
        report = snr(1.0, 0.0, NOISE)
        assert report.snr_db == -math.inf
        assert not report.has_signal

    def test_link_snr_carries_gain(self):
        """link_snr reports H and P_rec alongside the ratio."""
        report = link_snr(PANEL, RECEIVER, NOISE)
        assert report.channel_gain > 0
        assert report.received_power == pytest.approx(report.channel_gain)
        assert report.snr_linear == pytest.approx(report.received_power / 1e-7)

    @pytest.mark.parametrize("factor", [0.1, 7.0, 1e3])
    def test_power_and_noise_scale_together(self, factor):
        """Scaling P_t and sigma^2 by the same factor leaves the SNR unchanged."""
        base = link_snr(PANEL, RECEIVER, NOISE)
        scaled = link_snr(
            replace(PANEL, optical_power=PANEL.optical_power * factor),
            RECEIVER,
            NoiseModel(NOISE.variance * factor),
        )
        assert scaled.snr_linear == pytest.approx(base.snr_linear, rel=1e-12)


class TestBer:
    """OOK BER map and its inverse."""

    @pytest.mark.parametrize("snr_linear", [0.0, 1.0, 6.3, 18.2, 40.0])
    def test_ber_matches_erfc(self, snr_linear):
        """ber_ook = erfc(sqrt(SNR / 2)) / 2."""
        assert ber_ook(snr_linear) == pytest.approx(0.5 * erfc(math.sqrt(snr_linear / 2.0)), rel=1e-12)

    def test_threshold_for_1e5(self):
        """OOK needs about 12.60 dB for a 1e-5 BER."""
        threshold_db = 10 * math.log10(ber_threshold_snr(1e-5))
        assert threshold_db == pytest.approx(12.60, abs=0.01)

    @pytest.mark.parametrize("target", [1e-3, 1e-5, 1e-9])
    def test_threshold_inverts_ber(self, target):
        """ber_ook(ber_threshold_snr(p)) == p."""
        assert ber_ook(ber_threshold_snr(target)) == pytest.approx(target, rel=1e-9)

    @pytest.mark.parametrize("target", [0.0, 0.5, 0.7])
    def test_threshold_domain(self, target):
        """Targets outside (0, 0.5) are rejected."""
        with pytest.raises(InvalidParameterError):
            ber_threshold_snr(target)


# ---------------------------------------------------------------------------
# Scenario-level operations
# ---------------------------------------------------------------------------


class TestCalibration:
    """Anchoring the noise floor and sweeping irradiance angle."""

    def test_anchor_exact(self):
        """The anchor geometry hits the anchor SNR exactly."""
        scenario = default_scenario()
        calibrated = scenario.with_noise(calibrate_to_anchor(scenario, 65.0, 45.0, 128.0))
        assert snr_at_angles(calibrated, 65.0, 45.0).snr_db == pytest.approx(128.0, abs=1e-9)

    def test_anchor_zero_gain(self):
        """An anchor outside the FOV cannot be calibrated."""
        scenario = default_scenario()
        with pytest.raises(CalibrationError):
            calibrate_to_anchor(scenario, 65.0, 75.0, 128.0)

    def test_table3_strictly_decreasing(self):
        """SNR falls strictly with irradiance angle."""
        scenario = default_scenario()
        rows = table3_sweep(scenario.with_noise(calibrate_to_anchor(scenario, 65.0, 45.0, 128.0)))
        assert [theta for theta, _ in rows] == list(TABLE3_THETAS)
        values = [snr_db for _, snr_db in rows]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_strictly_decreasing_whole_degrees(self):
        """SNR falls strictly over every whole degree in [0, 90)."""
        scenario = default_scenario()
        values = [snr_at_angles(scenario, float(theta), 45.0).snr_linear for theta in range(90)]
        assert all(v > 0 for v in values)
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("narrow, wide", [(30.0, 60.0), (15.0, 45.0)])
    def test_narrow_beam_drops_faster(self, narrow, wide):
        """A smaller semi-angle loses more SNR between 65 and 78 degrees."""

        def drop(semi_angle: float) -> float:
            scenario = default_scenario()
            lp = replace(scenario.panels[0], semi_angle=semi_angle)
            rows = dict(table3_sweep(replace(scenario, panels=(lp,))))
            return rows[65.0] - rows[78.0]

        assert drop(narrow) > drop(wide) > 0

    def test_distance_held_constant(self):
        """Angle overrides keep the primary link's distance."""
        scenario = default_scenario()
        _, _, geom = primary_link(scenario)
        at_geometry = link_snr(scenario.panels[0], scenario.receivers[0], scenario.noise)
        overridden = snr_at_angles(scenario, geom.theta, geom.phi)
        assert overridden.snr_db == pytest.approx(at_geometry.snr_db, rel=1e-12)

    def test_ber_calibration_threshold_angle(self):
        """Under the 70 degree calibration the largest passing angle is 70."""
        scenario = default_scenario()
        calibrated = scenario.with_noise(calibrate_to_ber(scenario, theta=70.0))
        assert max_irradiance_angle(calibrated) == pytest.approx(70.0, abs=1e-6)

    def test_max_angle_none_when_hopeless(self):
        """Huge noise: even normal irradiance misses the target."""
        scenario = default_scenario().with_noise(NoiseModel(1e3))
        assert max_irradiance_angle(scenario) is None

    def test_primary_link_needs_receiver(self):
        """No receiver, no primary link."""
        scenario = Scenario(Room(5, 5, 3), (PANEL,), (), NOISE)
        with pytest.raises(InvalidScenarioError):
            primary_link(scenario)
