"""
Channel - Lambertian line-of-sight gain, received power and SNR
================================================================
LOS gain (Lambertian source, optical filter, non-imaging concentrator):

    H = (m+1) / (2 pi d^2) * A * cos^m(theta) * T_s * g(phi) * cos(phi)
        for phi <= FOV and theta < 90 deg, else 0
    g(phi) = n^2 / sin^2(FOV)
    m = -ln 2 / ln cos(semi_angle)

SNR is linear in received power and weighted by the squared brightness level:

    SNR = gamma^2 * P_rec / sigma^2_total

No shot/thermal decomposition: sigma^2_total is one configurable constant.
Everything here is a pure function over immutable inputs; calibration returns a
new NoiseModel instead of mutating a scenario.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Optional

import numpy as np
import structlog
from scipy.optimize import brentq
from scipy.special import erfc, erfcinv

from .errors import CalibrationError, InvalidParameterError, InvalidScenarioError
from .geometry import Direction3, LinkGeometry, Point3, link_geometry

if TYPE_CHECKING:
    from .planner import Scenario

log = structlog.get_logger("lifisim.channel")

# Irradiance angles of the reference SNR sweep, at a fixed 45 degree incidence
TABLE3_THETAS = (65.0, 68.0, 70.0, 75.0, 78.0)
TABLE3_PHI = 45.0
TABLE3_ANCHOR = (65.0, 45.0, 128.0)

BER_TARGET = 1e-5


# ============================================================================
# Domain types
# ============================================================================


class MobilityKind(str, Enum):
    FIXED = "fixed"
    MOVEABLE = "moveable"


class DetectorKind(str, Enum):
    PIN = "PIN"
    APD = "APD"


@dataclass(frozen=True)
class Mobility:
    """Fixed panel, or moveable with a maximum tilt from vertical (degrees)."""

    kind: MobilityKind = MobilityKind.FIXED
    max_tilt: float = 0.0

    def __post_init__(self) -> None:
        if self.kind is MobilityKind.MOVEABLE and not 0.0 <= self.max_tilt <= 90.0:
            raise InvalidParameterError(f"max_tilt must be in [0, 90], got {self.max_tilt}")

    @classmethod
    def fixed(cls) -> "Mobility":
        return cls(MobilityKind.FIXED, 0.0)

    @classmethod
    def moveable(cls, max_tilt: float) -> "Mobility":
        return cls(MobilityKind.MOVEABLE, float(max_tilt))

    @property
    def is_moveable(self) -> bool:
        return self.kind is MobilityKind.MOVEABLE


@dataclass(frozen=True)
class LedPanel:
    """One or more LEDs acting as a single Lambertian source."""

    position: Point3
    normal: Direction3 = field(default_factory=Direction3.down)
    semi_angle: float = 60.0
    optical_power: float = 1.0
    brightness: float = 1.0
    mobility: Mobility = field(default_factory=Mobility.fixed)
    led_count: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.semi_angle < 90.0:
            raise InvalidParameterError(f"semi_angle must be in (0, 90), got {self.semi_angle}")
        if not self.optical_power > 0:
            raise InvalidParameterError(f"optical_power must be > 0, got {self.optical_power}")
        if not 0.0 < self.brightness <= 1.0:
            raise InvalidParameterError(f"brightness must be in (0, 1], got {self.brightness}")
        if self.led_count < 1:
            raise InvalidParameterError(f"led_count must be >= 1, got {self.led_count}")

    @property
    def lambertian_order(self) -> float:
        return lambertian_order(self.semi_angle)

    @property
    def total_power(self) -> float:
        """Optical power aggregated over every LED in the panel."""
        return self.optical_power * self.led_count

    def pointed(self, normal: Direction3) -> "LedPanel":
        return replace(self, normal=normal)


@dataclass(frozen=True)
class Receiver:
    """Photodiode with optical filter and concentrator."""

    position: Point3
    normal: Direction3 = field(default_factory=Direction3.up)
    area: float = 1e-4
    fov: float = 60.0
    filter_gain: float = 1.0
    concentrator_index: float = 1.5
    detector_kind: DetectorKind = DetectorKind.PIN
    detector_gain: float = 1.0  # responsivity advantage multiplier on P_rec

    def __post_init__(self) -> None:
        if not self.area > 0:
            raise InvalidParameterError(f"area must be > 0, got {self.area}")
        if not 0.0 < self.fov <= 90.0:
            raise InvalidParameterError(f"fov must be in (0, 90], got {self.fov}")
        if not 0.0 < self.filter_gain <= 1.0:
            raise InvalidParameterError(f"filter_gain must be in (0, 1], got {self.filter_gain}")
        if not self.concentrator_index >= 1.0:
            raise InvalidParameterError(
                f"concentrator_index must be >= 1, got {self.concentrator_index}"
            )
        if not self.detector_gain > 0:
            raise InvalidParameterError(f"detector_gain must be > 0, got {self.detector_gain}")

    @property
    def concentrator_gain(self) -> float:
        return self.concentrator_index**2 / math.sin(math.radians(self.fov)) ** 2

    def at(self, position: Point3, normal: Optional[Direction3] = None) -> "Receiver":
        return replace(self, position=position, normal=normal or self.normal)


@dataclass(frozen=True)
class NoiseModel:
    """Total noise variance, in the normalized units of received power."""

    variance: float

    def __post_init__(self) -> None:
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise InvalidParameterError(f"noise variance must be > 0, got {self.variance}")


@dataclass(frozen=True)
class SnrReport:
    snr_linear: float
    snr_db: float
    received_power: float
    channel_gain: Optional[float] = None

    @property
    def has_signal(self) -> bool:
        return self.snr_linear > 0.0


# ============================================================================
# Closed forms
# ============================================================================


def lambertian_order(semi_angle_half_power: float) -> float:
    """Lambertian order m = -ln 2 / ln cos(semi-angle)."""
    if not 0.0 < semi_angle_half_power < 90.0:
        raise InvalidParameterError(
            f"semi_angle must be in (0, 90) degrees, got {semi_angle_half_power}"
        )
    return -math.log(2.0) / math.log(math.cos(math.radians(semi_angle_half_power)))


def gain_array(theta_deg, phi_deg, distance, lp: LedPanel, rx: Receiver) -> np.ndarray:
    """Vectorized LOS gain over arrays of angles and distances."""
    theta = np.asarray(theta_deg, dtype=float)
    phi = np.asarray(phi_deg, dtype=float)
    d = np.asarray(distance, dtype=float)
    m = lp.lambertian_order

    cos_theta = np.clip(np.cos(np.radians(theta)), 0.0, None)
    cos_phi = np.clip(np.cos(np.radians(phi)), 0.0, None)
    gain = (
        (m + 1.0) / (2.0 * math.pi * d**2)
        * rx.area
        * cos_theta**m
        * rx.filter_gain
        * rx.concentrator_gain
        * cos_phi
    )
    inside = (phi <= rx.fov) & (theta < 90.0)
    return np.where(inside, gain, 0.0)


def los_gain(geom: LinkGeometry, lp: LedPanel, rx: Receiver) -> float:
    """Line-of-sight DC gain; zero outside the field of view or behind the panel."""
    return float(gain_array(geom.theta, geom.phi, geom.distance, lp, rx))


def radiant_intensity(lp: LedPanel, theta_deg: float) -> float:
    """Lambertian radiant intensity (W/sr) at irradiance angle theta."""
    if theta_deg >= 90.0:
        return 0.0
    m = lp.lambertian_order
    return (m + 1.0) / (2.0 * math.pi) * lp.total_power * math.cos(math.radians(theta_deg)) ** m


def received_power(lp: LedPanel, H: float, detector_gain: float = 1.0) -> float:
    """P_rec = P_t * H, scaled by the LED count and detector advantage factor."""
    if H < 0:
        raise InvalidParameterError(f"channel gain must be >= 0, got {H}")
    return lp.total_power * H * detector_gain


def snr(
    brightness: float,
    p_rec: float,
    noise: NoiseModel,
    channel_gain: Optional[float] = None,
) -> SnrReport:
    """SNR = gamma^2 * P_rec / sigma^2_total."""
    if not noise.variance > 0:
        raise InvalidParameterError(f"noise variance must be > 0, got {noise.variance}")
    if p_rec < 0:
        raise InvalidParameterError(f"received power must be >= 0, got {p_rec}")

    snr_linear = brightness**2 * p_rec / noise.variance
    snr_db = 10.0 * math.log10(snr_linear) if snr_linear > 0 else -math.inf
    return SnrReport(
        snr_linear=snr_linear,
        snr_db=snr_db,
        received_power=p_rec,
        channel_gain=channel_gain,
    )


def q_function(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt 2) / 2."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def ber_ook(snr_linear: float) -> float:
    """OOK bit error rate Q(sqrt(SNR))."""
    if snr_linear < 0:
        raise InvalidParameterError(f"SNR must be >= 0, got {snr_linear}")
    return float(q_function(math.sqrt(snr_linear)))


def ber_threshold_snr(target_ber: float) -> float:
    """Linear SNR at which OOK reaches target_ber: (Q^-1(p))^2."""
    if not 0.0 < target_ber < 0.5:
        raise InvalidParameterError(f"target BER must be in (0, 0.5), got {target_ber}")
    return float((math.sqrt(2.0) * erfcinv(2.0 * target_ber)) ** 2)


def link_snr(
    lp: LedPanel,
    rx: Receiver,
    noise: NoiseModel,
    geom: Optional[LinkGeometry] = None,
) -> SnrReport:
    """Electrical SNR for one panel/receiver pair."""
    if geom is None:
        geom = link_geometry(lp.position, lp.normal, rx.position, rx.normal)
    H = los_gain(geom, lp, rx)
    p_rec = received_power(lp, H, rx.detector_gain)
    return snr(lp.brightness, p_rec, noise, channel_gain=H)


# ============================================================================
# Scenario-level operations (primary link = panel 0 -> receiver 0)
# ============================================================================


def primary_link(scenario: "Scenario") -> tuple[LedPanel, Receiver, LinkGeometry]:
    if not scenario.panels or not scenario.receivers:
        raise InvalidScenarioError("Scenario needs at least one panel and one receiver")
    lp, rx = scenario.panels[0], scenario.receivers[0]
    return lp, rx, link_geometry(lp.position, lp.normal, rx.position, rx.normal)


def snr_at_angles(
    scenario: "Scenario",
    theta: float,
    phi: Optional[float] = None,
    noise: Optional[NoiseModel] = None,
) -> SnrReport:
    """SNR with the primary link's distance and an overridden (theta, phi).

    The receiver stays put while the panel turns, so distance is held constant.
    """
    lp, rx, geom = primary_link(scenario)
    angles = LinkGeometry(theta=theta, phi=geom.phi if phi is None else phi, distance=geom.distance)
    return link_snr(lp, rx, noise or scenario.noise, angles)


def calibrate_to_anchor(
    scenario: "Scenario",
    anchor_theta: float,
    anchor_phi: float,
    anchor_snr_db: float,
) -> NoiseModel:
    """sigma^2_total that makes the anchor geometry hit anchor_snr_db exactly."""
    lp, rx, geom = primary_link(scenario)
    anchor = LinkGeometry(theta=anchor_theta, phi=anchor_phi, distance=geom.distance)
    H = los_gain(anchor, lp, rx)
    signal = lp.brightness**2 * received_power(lp, H, rx.detector_gain)
    if signal <= 0.0:
        raise CalibrationError(
            f"Zero channel gain at anchor theta={anchor_theta} phi={anchor_phi}; cannot calibrate"
        )

    variance = signal / 10.0 ** (anchor_snr_db / 10.0)
    log.info(
        "noise_calibrated",
        anchor_theta=anchor_theta,
        anchor_phi=anchor_phi,
        anchor_snr_db=anchor_snr_db,
        variance=variance,
    )
    return NoiseModel(variance=variance)


def calibrate_to_ber(
    scenario: "Scenario",
    theta: float = 70.0,
    target_ber: float = BER_TARGET,
    phi: float = TABLE3_PHI,
) -> NoiseModel:
    """Noise that puts the link at (theta, phi) exactly on the OOK target-BER SNR."""
    threshold_db = 10.0 * math.log10(ber_threshold_snr(target_ber))
    return calibrate_to_anchor(scenario, theta, phi, threshold_db)


def table3_sweep(
    scenario: "Scenario",
    thetas: tuple[float, ...] = TABLE3_THETAS,
    phi: float = TABLE3_PHI,
) -> list[tuple[float, float]]:
    """SNR (dB) against irradiance angle at constant incidence and distance."""
    rows = [(theta, snr_at_angles(scenario, theta, phi).snr_db) for theta in thetas]
    log.debug("table3_swept", rows=len(rows), phi=phi)
    return rows


def max_irradiance_angle(
    scenario: "Scenario",
    target_ber: float = BER_TARGET,
    phi: float = TABLE3_PHI,
) -> Optional[float]:
    """Largest irradiance angle whose analytic OOK BER still meets target_ber.

    None when even normal irradiance misses the target.
    """
    threshold_db = 10.0 * math.log10(ber_threshold_snr(target_ber))

    def margin(theta: float) -> float:
        return snr_at_angles(scenario, theta, phi).snr_db - threshold_db

    lo, hi = 0.0, 90.0 - 1e-6
    if margin(lo) < 0:
        return None
    if margin(hi) >= 0:
        return 90.0
    return float(brentq(margin, lo, hi, xtol=1e-10))
