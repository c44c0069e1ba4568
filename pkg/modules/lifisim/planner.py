"""
Planner - LED panel placement strategies
=========================================
Fixed wide, dedicated, moveable and hybrid placements evaluated on
receiver-plane coverage grids.

Rules:
    - a grid cell is served by its best single panel (no power summation)
    - overlap = cells where two or more panels individually clear a threshold
    - tilt search is an exhaustive (tilt, azimuth) grid per moveable panel,
      maximizing the minimum SNR over the users assigned to it; the first
      maximum wins, so ties go to the smaller tilt, then the smaller azimuth
    - fixed panels are never re-aimed

Every operation is a pure function of the Scenario; nothing here mutates it.
"""

import itertools
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional

import numpy as np
import structlog

from .channel import (
    BER_TARGET,
    LedPanel,
    NoiseModel,
    Receiver,
    ber_threshold_snr,
    gain_array,
    link_snr,
    q_function,
)
from .errors import (
    InfeasibleAssignmentError,
    InvalidParameterError,
    InvalidScenarioError,
    InvalidTiltError,
)
from .geometry import Direction3, Point3, Room, aim_tilt, link_angles, tilt_panel, tilted_normals
from .modem import OokConfig, SchemeConfig

log = structlog.get_logger("lifisim.planner")

EXHAUSTIVE_MATCHING_LIMIT = 6
DEFAULT_PLAN_RESOLUTION = 0.25
DEFAULT_TILT_STEP = 1.0
# Coverage boundary: the SNR at which OOK meets the 1e-5 target
DEFAULT_COVERAGE_THRESHOLD_DB = 10.0 * math.log10(ber_threshold_snr(BER_TARGET))


class Strategy(str, Enum):
    FIXED_WIDE = "FixedWide"
    DEDICATED = "Dedicated"
    MOVEABLE = "Moveable"
    HYBRID = "Hybrid"


# ============================================================================
# Domain types
# ============================================================================


@dataclass(frozen=True)
class Scenario:
    room: Room
    panels: tuple[LedPanel, ...]
    receivers: tuple[Receiver, ...]
    noise: NoiseModel
    scheme: SchemeConfig = field(default_factory=OokConfig)
    strategy: Strategy = Strategy.FIXED_WIDE
    wide_panel: int = 0  # the panel every user joins under FixedWide

    def __post_init__(self) -> None:
        object.__setattr__(self, "panels", tuple(self.panels))
        object.__setattr__(self, "receivers", tuple(self.receivers))

        for i, lp in enumerate(self.panels):
            if not self.room.contains(lp.position):
                raise InvalidScenarioError(f"panels[{i}] at {lp.position} is outside the room")
        for i, rx in enumerate(self.receivers):
            if not self.room.contains(rx.position):
                raise InvalidScenarioError(f"receivers[{i}] at {rx.position} is outside the room")
        if self.panels and not 0 <= self.wide_panel < len(self.panels):
            raise InvalidScenarioError(
                f"wide_panel {self.wide_panel} out of range for {len(self.panels)} panels"
            )
        if self.strategy is Strategy.DEDICATED and len(self.panels) < len(self.receivers):
            raise InfeasibleAssignmentError(
                f"Dedicated placement needs one panel per user: "
                f"{len(self.panels)} panels for {len(self.receivers)} receivers"
            )

    @property
    def moveable_panels(self) -> list[int]:
        return [j for j, lp in enumerate(self.panels) if lp.mobility.is_moveable]

    def with_noise(self, noise: NoiseModel) -> "Scenario":
        return replace(self, noise=noise)

    def with_panels(self, panels) -> "Scenario":
        return replace(self, panels=tuple(panels))


@dataclass(frozen=True, eq=False)
class CoverageGrid:
    """Receiver-plane grid; arrays are indexed [row = y, col = x]."""

    resolution: float
    xs: np.ndarray
    ys: np.ndarray
    snr_linear: np.ndarray
    received_power: np.ndarray
    serving_panel: np.ndarray  # -1 where no panel reaches the cell
    ber_values: np.ndarray
    ber_flagged: np.ndarray  # True where the scheme has no analytic BER map
    panel_snr_linear: np.ndarray  # (panels, ny, nx)

    @property
    def shape(self) -> tuple[int, int]:
        return self.snr_linear.shape

    @property
    def snr_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.snr_linear)

    def covered(self, snr_threshold_db: float) -> np.ndarray:
        return self.snr_db > snr_threshold_db


@dataclass(frozen=True)
class PlanReport:
    strategy: Strategy
    assignment: tuple[int, ...]  # receiver index -> panel index
    tilts: dict[int, tuple[float, float]]  # moveable panel -> (tilt, azimuth) degrees
    per_user_snr_db: tuple[float, ...]
    per_user_ber: tuple[float, ...]
    min_user_snr_db: float
    overlap_cells: int = 0

    @property
    def panels_used(self) -> int:
        return len(set(self.assignment))


@dataclass(frozen=True)
class PlacementComparison:
    """Cost (panels used) against speed (min-user SNR) for the same room and users."""

    fixed_wide: PlanReport
    dedicated: Optional[PlanReport]


# ============================================================================
# Coverage
# ============================================================================


def _probe_receiver(scenario: Scenario) -> Receiver:
    plane = scenario.room.receiver_plane_height
    origin = Point3(0.0, 0.0, plane)
    if scenario.receivers:
        return scenario.receivers[0].at(origin, Direction3.up())
    return Receiver(position=origin)


def _panel_snr(lp: LedPanel, rx: Receiver, noise: NoiseModel, gain: np.ndarray) -> np.ndarray:
    return lp.brightness**2 * lp.total_power * gain * rx.detector_gain / noise.variance


def coverage_grid(scenario: Scenario, resolution: float) -> CoverageGrid:
    """Per-cell best-panel SNR over the receiver plane.

    The probe takes receiver 0's optics (or a default receiver), facing up.
    """
    if not 0.01 < resolution <= 1.0:
        raise InvalidParameterError(f"resolution must be in (0.01, 1] m, got {resolution}")

    room = scenario.room
    xs, ys = room.grid_centers(resolution)
    gx, gy = np.meshgrid(xs, ys)
    points = np.column_stack(
        [gx.ravel(), gy.ravel(), np.full(gx.size, room.receiver_plane_height)]
    )
    probe = _probe_receiver(scenario)

    per_panel = np.zeros((len(scenario.panels), gx.size))
    per_panel_power = np.zeros_like(per_panel)
    for j, lp in enumerate(scenario.panels):
        # A panel on the receiver plane has no link to its own cell
        reach = np.linalg.norm(points - lp.position.as_array(), axis=1) > 0.0
        gain = np.zeros(gx.size)
        if reach.any():
            theta, phi, dist = link_angles(lp.position, lp.normal, points[reach], probe.normal)
            gain[reach] = gain_array(theta, phi, dist, lp, probe)
        per_panel_power[j] = lp.total_power * gain * probe.detector_gain
        per_panel[j] = _panel_snr(lp, probe, scenario.noise, gain)

    shape = gx.shape
    if per_panel.shape[0]:
        best = per_panel.max(axis=0)
        serving = np.where(best > 0, per_panel.argmax(axis=0), -1)
        power = np.where(serving >= 0, per_panel_power[np.maximum(serving, 0), np.arange(gx.size)], 0.0)
    else:
        best = np.zeros(gx.size)
        serving = np.full(gx.size, -1)
        power = np.zeros(gx.size)

    if isinstance(scenario.scheme, OokConfig):
        ber = q_function(np.sqrt(best))
        flagged = np.zeros(gx.size, dtype=bool)
    else:
        # No analytic map: only the no-signal cells get a value
        ber = np.where(best > 0, np.nan, 0.5)
        flagged = best > 0

    log.debug("coverage_grid", shape=shape, resolution=resolution, panels=len(scenario.panels))
    return CoverageGrid(
        resolution=resolution,
        xs=xs,
        ys=ys,
        snr_linear=best.reshape(shape),
        received_power=power.reshape(shape),
        serving_panel=serving.reshape(shape),
        ber_values=ber.reshape(shape),
        ber_flagged=flagged.reshape(shape),
        panel_snr_linear=per_panel.reshape((-1,) + shape),
    )


def overlap_report(
    scenario: Scenario,
    snr_threshold_db: float,
    resolution: float = DEFAULT_PLAN_RESOLUTION,
) -> int:
    """Grid cells where at least two panels individually exceed the threshold."""
    grid = coverage_grid(scenario, resolution)
    with np.errstate(divide="ignore"):
        above = 10.0 * np.log10(grid.panel_snr_linear) > snr_threshold_db
    cells = int(np.count_nonzero(above.sum(axis=0) >= 2))
    log.debug("overlap_report", threshold_db=snr_threshold_db, overlap_cells=cells)
    return cells


# ============================================================================
# Assignment
# ============================================================================


def _to_db(snr_linear: float) -> float:
    return 10.0 * math.log10(snr_linear) if snr_linear > 0 else -math.inf


def _aimed(lp: LedPanel, target: Point3) -> LedPanel:
    """The panel turned as far toward target as its tilt limit allows."""
    tilt, azimuth = aim_tilt(lp.position, target)
    return lp.pointed(tilt_panel(Direction3.down(), min(tilt, lp.mobility.max_tilt), azimuth))


def _score_matrix(scenario: Scenario, reachable: bool) -> np.ndarray:
    """Linear SNR of receiver i from panel j, shape (receivers, panels)."""
    scores = np.zeros((len(scenario.receivers), len(scenario.panels)))
    for i, rx in enumerate(scenario.receivers):
        for j, lp in enumerate(scenario.panels):
            if reachable and lp.mobility.is_moveable:
                lp = _aimed(lp, rx.position)
            scores[i, j] = link_snr(lp, rx, scenario.noise).snr_linear
    return scores


def _max_min_matching(scores: np.ndarray) -> tuple[int, ...]:
    """One-to-one receiver -> panel map maximizing the minimum score.

    Exhaustive over panel permutations up to EXHAUSTIVE_MATCHING_LIMIT users,
    with total score as the secondary key; weakest-user-first greedy beyond.
    """
    n_users, n_panels = scores.shape
    if n_users <= EXHAUSTIVE_MATCHING_LIMIT:
        best, best_key = None, None
        rows = np.arange(n_users)
        for perm in itertools.permutations(range(n_panels), n_users):
            picked = scores[rows, list(perm)]
            key = (picked.min(), picked.sum())
            if best_key is None or key > best_key:
                best, best_key = perm, key
        return tuple(int(j) for j in best)

    assignment = [-1] * n_users
    free = set(range(n_panels))
    pending = set(range(n_users))
    while pending:
        # The user whose best free panel is weakest picks first
        def best_free(i: int) -> tuple[float, int]:
            j = max(sorted(free), key=lambda p: scores[i, p])
            return scores[i, j], j

        user = min(sorted(pending), key=lambda i: best_free(i)[0])
        _, panel = best_free(user)
        assignment[user] = panel
        free.discard(panel)
        pending.discard(user)
    return tuple(assignment)


def assign_users(scenario: Scenario) -> tuple[int, ...]:
    """Receiver -> panel mapping under the scenario's strategy."""
    if not scenario.panels:
        raise InfeasibleAssignmentError("No panels to assign users to")
    n_users, n_panels = len(scenario.receivers), len(scenario.panels)
    if n_users == 0:
        return ()

    strategy = scenario.strategy
    if strategy is Strategy.FIXED_WIDE:
        return (scenario.wide_panel,) * n_users

    if strategy is Strategy.DEDICATED:
        if n_panels < n_users:
            raise InfeasibleAssignmentError(
                f"Dedicated placement needs one panel per user: {n_panels} < {n_users}"
            )
        return _max_min_matching(_score_matrix(scenario, reachable=False))

    scores = _score_matrix(scenario, reachable=True)
    if n_panels >= n_users:
        return _max_min_matching(scores)
    return tuple(int(j) for j in scores.argmax(axis=1))


# ============================================================================
# Plans
# ============================================================================


def _apply_tilts(scenario: Scenario, tilts: Mapping[int, tuple[float, float]]) -> list[LedPanel]:
    panels = list(scenario.panels)
    for j, (tilt, azimuth) in tilts.items():
        if not 0 <= j < len(panels):
            raise InvalidScenarioError(f"Tilt given for unknown panel {j}")
        lp = panels[j]
        if not lp.mobility.is_moveable:
            raise InvalidScenarioError(f"Panel {j} is fixed and cannot be tilted")
        if tilt > lp.mobility.max_tilt + 1e-9:
            raise InvalidTiltError(
                f"Panel {j} tilt {tilt} exceeds its max_tilt {lp.mobility.max_tilt}"
            )
        panels[j] = lp.pointed(tilt_panel(Direction3.down(), tilt, azimuth))
    return panels


def evaluate_plan(
    scenario: Scenario,
    assignment: tuple[int, ...],
    tilts: Mapping[int, tuple[float, float]],
    overlap_threshold_db: float = DEFAULT_COVERAGE_THRESHOLD_DB,
    resolution: float = DEFAULT_PLAN_RESOLUTION,
) -> PlanReport:
    """Per-user SNR/BER and overlap for a given assignment and panel aim."""
    if len(assignment) != len(scenario.receivers):
        raise InvalidScenarioError(
            f"Assignment covers {len(assignment)} users, scenario has {len(scenario.receivers)}"
        )
    if not scenario.receivers:
        raise InvalidScenarioError("Scenario has no receivers to plan for")

    panels = _apply_tilts(scenario, tilts)
    planned = scenario.with_panels(panels)

    per_user_snr = []
    per_user_ber = []
    for rx, j in zip(scenario.receivers, assignment):
        report = link_snr(panels[j], rx, scenario.noise)
        per_user_snr.append(report.snr_db)
        if isinstance(scenario.scheme, OokConfig) or not report.has_signal:
            per_user_ber.append(float(q_function(math.sqrt(report.snr_linear))))
        else:
            per_user_ber.append(math.nan)

    return PlanReport(
        strategy=scenario.strategy,
        assignment=tuple(assignment),
        tilts=dict(tilts),
        per_user_snr_db=tuple(per_user_snr),
        per_user_ber=tuple(per_user_ber),
        min_user_snr_db=min(per_user_snr),
        overlap_cells=overlap_report(planned, overlap_threshold_db, resolution),
    )


def frozen_plan(scenario: Scenario, **kwargs) -> PlanReport:
    """Baseline plan: same assignment, every moveable panel at tilt 0."""
    tilts = {j: (0.0, 0.0) for j in scenario.moveable_panels}
    return evaluate_plan(scenario, assign_users(scenario), tilts, **kwargs)


def _tilt_candidates(max_tilt: float, tilt_step: float) -> tuple[np.ndarray, np.ndarray]:
    """Flattened (tilt, azimuth) grid, tilt-major so argmax prefers smaller tilts."""
    tilts = np.arange(0.0, max_tilt + tilt_step / 2.0, tilt_step)
    tilts = tilts[tilts <= max_tilt + 1e-9]
    azimuths = np.arange(0.0, 360.0, tilt_step)
    grid_t, grid_a = np.meshgrid(tilts, azimuths, indexing="ij")
    return grid_t.ravel(), grid_a.ravel()


def _candidate_min_snr(
    lp: LedPanel,
    normals: np.ndarray,
    users: list[Receiver],
    noise: NoiseModel,
) -> np.ndarray:
    """Minimum linear SNR over users for each candidate normal, shape (C,)."""
    worst = np.full(normals.shape[0], np.inf)
    for rx in users:
        v = rx.position.as_array() - lp.position.as_array()
        distance = float(np.linalg.norm(v))
        theta = np.degrees(np.arccos(np.clip(normals @ v / distance, -1.0, 1.0)))
        phi = float(np.degrees(np.arccos(np.clip(-v @ rx.normal.as_array() / distance, -1.0, 1.0))))
        snr = _panel_snr(lp, rx, noise, gain_array(theta, phi, distance, lp, rx))
        worst = np.minimum(worst, snr)
    return worst


def optimize_tilts(
    scenario: Scenario,
    tilt_step: float = DEFAULT_TILT_STEP,
    **kwargs,
) -> PlanReport:
    """Grid-search each moveable panel's aim to maximize its worst user's SNR."""
    if scenario.strategy not in (Strategy.MOVEABLE, Strategy.HYBRID):
        raise InvalidScenarioError(
            f"Tilt optimization needs a Moveable or Hybrid strategy, got {scenario.strategy.value}"
        )
    if not 0.5 <= tilt_step <= 5.0:
        raise InvalidParameterError(f"tilt_step must be in [0.5, 5] degrees, got {tilt_step}")
    moveable = scenario.moveable_panels
    if scenario.strategy is Strategy.MOVEABLE and not moveable:
        raise InvalidScenarioError("Moveable strategy but no panel is moveable")

    assignment = assign_users(scenario)
    tilts: dict[int, tuple[float, float]] = {}
    for j in moveable:
        lp = scenario.panels[j]
        users = [rx for rx, k in zip(scenario.receivers, assignment) if k == j]
        if not users:
            tilts[j] = (0.0, 0.0)
            continue
        cand_t, cand_a = _tilt_candidates(lp.mobility.max_tilt, tilt_step)
        objective = _candidate_min_snr(lp, tilted_normals(cand_t, cand_a), users, scenario.noise)
        best = int(np.argmax(objective))
        # Tilt 0 points straight down whatever the azimuth
        azimuth = float(cand_a[best]) if cand_t[best] > 0 else 0.0
        tilts[j] = (float(cand_t[best]), azimuth)

    report = evaluate_plan(scenario, assignment, tilts, **kwargs)
    log.info(
        "plan_optimized",
        strategy=scenario.strategy.value,
        moveable=len(moveable),
        min_user_snr_db=report.min_user_snr_db,
    )
    return report


def compare_placements(scenario: Scenario, **kwargs) -> PlacementComparison:
    """FixedWide and Dedicated readings of the same panels and users, side by side."""
    wide = replace(scenario, strategy=Strategy.FIXED_WIDE)
    fixed_wide = evaluate_plan(wide, assign_users(wide), {}, **kwargs)

    dedicated = None
    if len(scenario.panels) >= len(scenario.receivers):
        ded = replace(scenario, strategy=Strategy.DEDICATED)
        dedicated = evaluate_plan(ded, assign_users(ded), {}, **kwargs)
    else:
        log.debug("dedicated_infeasible", panels=len(scenario.panels), users=len(scenario.receivers))
    return PlacementComparison(fixed_wide=fixed_wide, dedicated=dedicated)
