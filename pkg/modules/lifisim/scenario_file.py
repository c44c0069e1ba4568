"""
Scenario files - JSON schema and loader
=======================================
Scenario JSON mirrors the Scenario type field-for-field. Angles in degrees,
lengths in meters, power in watts.

Validation (pydantic v2, unknown keys rejected everywhere):
    - normals must be unit vectors within 1e-6; accepted ones are renormalized
    - every panel and receiver must sit inside the room
    - JSON syntax errors report line/column, schema errors report field paths

All failures surface as ScenarioFileError carrying (location, message) pairs.
"""

import json
import math
from dataclasses import asdict
from pathlib import Path
from typing import Annotated, Literal, Union

import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from lifi_commons.config import DEFAULT_SCENARIO_PATH

from .channel import DetectorKind, LedPanel, Mobility, MobilityKind, NoiseModel, Receiver
from .errors import LifiSimError, ScenarioFileError
from .geometry import Direction3, Point3, Room
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
from .planner import Scenario, Strategy

log = structlog.get_logger("lifisim.scenario_file")

NORMAL_TOLERANCE = 1e-6

Vec3 = tuple[float, float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _unit(value: Vec3) -> Vec3:
    norm = math.sqrt(sum(c * c for c in value))
    if not math.isfinite(norm) or abs(norm - 1.0) > NORMAL_TOLERANCE:
        raise ValueError(
            f"normal must be a unit vector (|n| = 1 +/- {NORMAL_TOLERANCE}), got |n| = {norm:.9g}"
        )
    return tuple(c / norm for c in value)


# ============================================================================
# Schema
# ============================================================================


class RoomSpec(_Strict):
    width: float = Field(gt=0)
    depth: float = Field(gt=0)
    height: float = Field(gt=0)
    receiver_plane_height: float = Field(default=0.85, ge=0)

    @model_validator(mode="after")
    def check_plane(self) -> "RoomSpec":
        if self.receiver_plane_height >= self.height:
            raise ValueError("receiver_plane_height must be below the room height")
        return self


class MobilitySpec(_Strict):
    kind: Literal["fixed", "moveable"] = "fixed"
    max_tilt_deg: float = Field(default=0.0, ge=0, le=90)


class PanelSpec(_Strict):
    position: Vec3
    normal: Vec3 = (0.0, 0.0, -1.0)
    semi_angle_deg: float = Field(default=60.0, gt=0, lt=90)
    optical_power_w: float = Field(default=1.0, gt=0)
    brightness: float = Field(default=1.0, gt=0, le=1)
    mobility: MobilitySpec = MobilitySpec()
    led_count: int = Field(default=1, ge=1)

    @field_validator("normal")
    @classmethod
    def check_normal(cls, value: Vec3) -> Vec3:
        return _unit(value)


class ReceiverSpec(_Strict):
    position: Vec3
    normal: Vec3 = (0.0, 0.0, 1.0)
    area_m2: float = Field(default=1e-4, gt=0)
    fov_deg: float = Field(default=60.0, gt=0, le=90)
    filter_gain: float = Field(default=1.0, gt=0, le=1)
    concentrator_index: float = Field(default=1.5, ge=1)
    detector_kind: Literal["PIN", "APD"] = "PIN"
    detector_gain: float = Field(default=1.0, gt=0)

    @field_validator("normal")
    @classmethod
    def check_normal(cls, value: Vec3) -> Vec3:
        return _unit(value)


class NoiseSpec(_Strict):
    variance: float = Field(gt=0)


class OokSpec(_Strict):
    kind: Literal["ook"] = "ook"
    dimming: float = 0.5


class PwmSpec(_Strict):
    kind: Literal["pwm"]
    dimming: float = 0.5
    width_delta: float = 0.1
    samples_per_slot: int = 20


class PpmSpec(_Strict):
    kind: Literal["ppm"]
    slots_per_symbol: int = 4
    average_power: float = 0.5


class VppmSpec(_Strict):
    kind: Literal["vppm"]
    dimming: float = 0.5
    samples_per_symbol: int = 20


class OppmSpec(_Strict):
    kind: Literal["oppm"]
    chips_per_symbol: int = 8
    pulse_width_chips: int = 4
    average_power: float = 0.5


class DcoOfdmSpec(_Strict):
    kind: Literal["dco-ofdm"]
    subcarriers: int = 16
    qam_order: int = 4
    bias_db: float = 13.0


class AcoOfdmSpec(_Strict):
    kind: Literal["aco-ofdm"]
    subcarriers: int = 16
    qam_order: int = 4


SchemeSpec = Annotated[
    Union[OokSpec, PwmSpec, PpmSpec, VppmSpec, OppmSpec, DcoOfdmSpec, AcoOfdmSpec],
    Field(discriminator="kind"),
]

_SCHEME_TYPES: dict[str, type] = {
    "ook": OokConfig,
    "pwm": PwmConfig,
    "ppm": PpmConfig,
    "vppm": VppmConfig,
    "oppm": OppmConfig,
    "dco-ofdm": DcoOfdmConfig,
    "aco-ofdm": AcoOfdmConfig,
}


class ScenarioSpec(_Strict):
    room: RoomSpec
    panels: list[PanelSpec] = Field(default_factory=list)
    receivers: list[ReceiverSpec] = Field(default_factory=list)
    noise: NoiseSpec
    scheme: SchemeSpec = OokSpec()
    strategy: Literal["FixedWide", "Dedicated", "Moveable", "Hybrid"] = "FixedWide"
    wide_panel: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_inside_room(self) -> "ScenarioSpec":
        room = Room(self.room.width, self.room.depth, self.room.height, self.room.receiver_plane_height)
        outside = [
            f"{group}.{i}.position {tuple(item.position)}"
            for group, items in (("panels", self.panels), ("receivers", self.receivers))
            for i, item in enumerate(items)
            if not room.contains(Point3.of(item.position))
        ]
        if outside:
            raise ValueError(
                f"outside the {room.width:g} x {room.depth:g} x {room.height:g} m room: "
                + ", ".join(outside)
            )
        return self


# ============================================================================
# Conversion
# ============================================================================


def _to_scenario(spec: ScenarioSpec) -> Scenario:
    room = Room(spec.room.width, spec.room.depth, spec.room.height, spec.room.receiver_plane_height)
    panels = [
        LedPanel(
            position=Point3.of(p.position),
            normal=Direction3.normalized(*p.normal),
            semi_angle=p.semi_angle_deg,
            optical_power=p.optical_power_w,
            brightness=p.brightness,
            mobility=Mobility(MobilityKind(p.mobility.kind), p.mobility.max_tilt_deg),
            led_count=p.led_count,
        )
        for p in spec.panels
    ]
    receivers = [
        Receiver(
            position=Point3.of(r.position),
            normal=Direction3.normalized(*r.normal),
            area=r.area_m2,
            fov=r.fov_deg,
            filter_gain=r.filter_gain,
            concentrator_index=r.concentrator_index,
            detector_kind=DetectorKind(r.detector_kind),
            detector_gain=r.detector_gain,
        )
        for r in spec.receivers
    ]
    scheme_fields = spec.scheme.model_dump(exclude={"kind"})
    return Scenario(
        room=room,
        panels=tuple(panels),
        receivers=tuple(receivers),
        noise=NoiseModel(spec.noise.variance),
        scheme=_SCHEME_TYPES[spec.scheme.kind](**scheme_fields),
        strategy=Strategy(spec.strategy),
        wide_panel=spec.wide_panel,
    )


def _diagnostics(exc: ValidationError) -> list[tuple[str, str]]:
    return [
        (".".join(str(part) for part in err["loc"]) or "scenario", err["msg"])
        for err in exc.errors()
    ]


def parse_scenario(data: dict, source: str = "<scenario>") -> Scenario:
    """Validate a decoded JSON document and build the Scenario."""
    try:
        spec = ScenarioSpec.model_validate(data)
    except ValidationError as exc:
        diagnostics = _diagnostics(exc)
        raise ScenarioFileError(
            f"{source}: {len(diagnostics)} schema error(s)", diagnostics=diagnostics
        ) from None

    try:
        return _to_scenario(spec)
    except LifiSimError as exc:
        raise ScenarioFileError(f"{source}: {exc}", diagnostics=[("scenario", str(exc))]) from None


def load_scenario(path: str | Path) -> Scenario:
    """Read, validate and build a scenario from a JSON file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFileError(f"{path}: cannot read scenario ({exc.strerror or exc})") from None

    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFileError(
            f"{path}: invalid JSON",
            diagnostics=[(f"line {exc.lineno}, column {exc.colno}", exc.msg)],
        ) from None

    scenario = parse_scenario(data, source=str(path))
    log.debug(
        "scenario_loaded",
        path=str(path),
        panels=len(scenario.panels),
        receivers=len(scenario.receivers),
        strategy=scenario.strategy.value,
    )
    return scenario


def default_scenario() -> Scenario:
    """The shipped baseline scenario."""
    return load_scenario(DEFAULT_SCENARIO_PATH)


def _scheme_dict(config: SchemeConfig) -> dict:
    return {"kind": config.kind, **asdict(config)}


def dump_scenario(scenario: Scenario) -> dict:
    """JSON-ready document that parse_scenario reads back to an equal Scenario."""
    room = scenario.room
    return {
        "room": {
            "width": room.width,
            "depth": room.depth,
            "height": room.height,
            "receiver_plane_height": room.receiver_plane_height,
        },
        "panels": [
            {
                "position": [lp.position.x, lp.position.y, lp.position.z],
                "normal": [lp.normal.x, lp.normal.y, lp.normal.z],
                "semi_angle_deg": lp.semi_angle,
                "optical_power_w": lp.optical_power,
                "brightness": lp.brightness,
                "mobility": {"kind": lp.mobility.kind.value, "max_tilt_deg": lp.mobility.max_tilt},
                "led_count": lp.led_count,
            }
            for lp in scenario.panels
        ],
        "receivers": [
            {
                "position": [rx.position.x, rx.position.y, rx.position.z],
                "normal": [rx.normal.x, rx.normal.y, rx.normal.z],
                "area_m2": rx.area,
                "fov_deg": rx.fov,
                "filter_gain": rx.filter_gain,
                "concentrator_index": rx.concentrator_index,
                "detector_kind": rx.detector_kind.value,
                "detector_gain": rx.detector_gain,
            }
            for rx in scenario.receivers
        ],
        "noise": {"variance": scenario.noise.variance},
        "scheme": _scheme_dict(scenario.scheme),
        "strategy": scenario.strategy.value,
        "wide_panel": scenario.wide_panel,
    }
