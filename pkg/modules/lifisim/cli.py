"""
lifisim CLI - experiment front end
==================================
Usage:
    lifisim snr --theta 70
    lifisim table3
    lifisim ber --scheme ook --snr-db 8,10,12 --bits 1000000 --seed 7
    lifisim coverage --resolution 0.25 --out grid.csv --heatmap grid.pgm --threshold-db 10
    lifisim plan --scenario modules/lifisim/scenarios/hybrid_two_user.json --frozen
    lifisim threshold --target-ber 1e-5

Output contract:
    - reports go to stdout as key=value lines or CSV (header row, "\\n" endings,
      6 significant digits, NONE for -inf/NaN); logs go to stderr
    - exit 0 success, 2 user/config error, 3 I/O error
"""

import argparse
import csv
import math
import sys
from pathlib import Path
from typing import Optional, TextIO

import numpy as np
import structlog

from lifi_commons.config import DEFAULT_SCENARIO_PATH, configure_logging

from .channel import (
    BER_TARGET,
    TABLE3_ANCHOR,
    TABLE3_PHI,
    TABLE3_THETAS,
    ber_threshold_snr,
    calibrate_to_anchor,
    calibrate_to_ber,
    max_irradiance_angle,
    primary_link,
    snr_at_angles,
    table3_sweep,
)
from .errors import LifiSimError, ScenarioFileError
from .linksim import ber_sweep
from .planner import (
    DEFAULT_TILT_STEP,
    PlanReport,
    coverage_grid,
    frozen_plan,
    optimize_tilts,
    overlap_report,
)
from .scenario_file import load_scenario
from .schemes import resolve_scheme, scheme_name

log = structlog.get_logger("lifisim.cli")

EXIT_OK = 0
EXIT_USER_ERROR = 2
EXIT_IO_ERROR = 3


# ============================================================================
# Formatting
# ============================================================================


def fmt6(value: float) -> str:
    """Fixed-point with 6 significant digits; NONE for non-finite values."""
    if value is None or not math.isfinite(value):
        return "NONE"
    if value == 0:
        return "0.00000"
    exponent = int(f"{value:.5e}".split("e")[1])
    decimals = max(5 - exponent, 0)
    return f"{value:.{decimals}f}"


def _csv_writer(stream: TextIO):
    return csv.writer(stream, lineterminator="\n")


def _parse_floats(raw: str, expected: Optional[int] = None) -> list[float]:
    parts = [p for p in raw.replace(" ", "").split(",") if p]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{raw}'") from None
    if expected is not None and len(values) != expected:
        raise argparse.ArgumentTypeError(f"expected {expected} comma-separated numbers, got '{raw}'")
    return values


def _anchor(raw: str) -> tuple[float, float, float]:
    theta, phi, snr_db = _parse_floats(raw, expected=3)
    return theta, phi, snr_db


def _snr_points(raw: str) -> list[float]:
    return _parse_floats(raw)


# ============================================================================
# Commands
# ============================================================================


def _calibrated(args: argparse.Namespace):
    scenario = load_scenario(args.scenario)
    if args.no_calibrate:
        return scenario
    theta, phi, snr_db = args.calibrate_anchor
    return scenario.with_noise(calibrate_to_anchor(scenario, theta, phi, snr_db))


def cmd_snr(args: argparse.Namespace, out: TextIO) -> int:
    scenario = _calibrated(args)
    report = snr_at_angles(scenario, args.theta, args.phi)
    phi = args.phi if args.phi is not None else primary_link(scenario)[2].phi

    print(f"theta_deg={args.theta:.3f}", file=out)
    print(f"phi_deg={phi:.3f}", file=out)
    if not report.has_signal:
        print("snr_db=NONE gain=0", file=out)
        print("snr_linear=0", file=out)
        print("p_rec_w=0", file=out)
        return EXIT_OK

    print(f"snr_db={report.snr_db:.3f}", file=out)
    print(f"snr_linear={report.snr_linear:.6e}", file=out)
    print(f"gain={report.channel_gain:.6e}", file=out)
    print(f"p_rec_w={report.received_power:.6e}", file=out)
    return EXIT_OK


def cmd_table3(args: argparse.Namespace, out: TextIO) -> int:
    scenario = _calibrated(args)
    writer = _csv_writer(out)
    writer.writerow(["theta_deg", "snr_db"])
    for theta, snr_db in table3_sweep(scenario, TABLE3_THETAS, args.phi):
        writer.writerow([f"{theta:g}", fmt6(snr_db)])
    return EXIT_OK


def cmd_ber(args: argparse.Namespace, out: TextIO) -> int:
    scheme = resolve_scheme(args.scheme)
    results = ber_sweep(scheme, args.snr_db, args.bits, args.seed, workers=args.workers)
    writer = _csv_writer(out)
    writer.writerow(["snr_db", "ber", "ci95"])
    for snr_db, estimate in results:
        writer.writerow([fmt6(snr_db), fmt6(estimate.ber), fmt6(estimate.ci95_halfwidth)])
    log.info("ber_written", scheme=scheme_name(scheme), points=len(results))
    return EXIT_OK


def _heatmap_bytes(snr_db: np.ndarray, covered: np.ndarray) -> bytes:
    """8-bit P5 image, rows in ascending y, [0 dB, max dB] -> [0, 255]."""
    ny, nx = snr_db.shape
    finite = np.where(covered, snr_db, -np.inf)
    peak = float(finite.max()) if finite.size else -math.inf
    if peak > 0:
        scaled = np.clip(np.where(covered, snr_db, 0.0), 0.0, peak) / peak * 255.0
        pixels = np.where(covered, np.rint(scaled), 0).astype(np.uint8)
    else:
        pixels = np.zeros((ny, nx), dtype=np.uint8)
    return f"P5\n{nx} {ny}\n255\n".encode("ascii") + pixels.tobytes()


def cmd_coverage(args: argparse.Namespace, out: TextIO) -> int:
    scenario = load_scenario(args.scenario)
    grid = coverage_grid(scenario, args.resolution)
    snr_db = grid.snr_db

    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        writer = _csv_writer(handle)
        writer.writerow(["x", "y", "snr_db", "ber", "serving_panel"])
        for iy, y in enumerate(grid.ys):
            for ix, x in enumerate(grid.xs):
                writer.writerow([
                    fmt6(float(x)),
                    fmt6(float(y)),
                    fmt6(float(snr_db[iy, ix])),
                    fmt6(float(grid.ber_values[iy, ix])),
                    int(grid.serving_panel[iy, ix]),
                ])

    if args.heatmap:
        covered = grid.serving_panel >= 0
        if args.threshold_db is not None:
            covered &= grid.covered(args.threshold_db)
        Path(args.heatmap).write_bytes(_heatmap_bytes(snr_db, covered))

    if args.threshold_db is not None:
        cells = overlap_report(scenario, args.threshold_db, args.resolution)
        print(f"overlap_cells={cells}", file=out)
    log.info("coverage_written", out=str(args.out), shape=grid.shape)
    return EXIT_OK


def _print_plan(report: PlanReport, out: TextIO, prefix: str = "") -> None:
    for user, (panel, snr_db, ber) in enumerate(
        zip(report.assignment, report.per_user_snr_db, report.per_user_ber)
    ):
        print(f"{prefix}user={user} panel={panel} snr_db={fmt6(snr_db)} ber={fmt6(ber)}", file=out)
    for panel, (tilt, azimuth) in sorted(report.tilts.items()):
        print(f"{prefix}panel={panel} tilt={tilt:.1f} azimuth={azimuth:.1f}", file=out)
    print(f"{prefix}min_user_snr_db={fmt6(report.min_user_snr_db)}", file=out)
    print(f"{prefix}overlap_cells={report.overlap_cells}", file=out)


def cmd_plan(args: argparse.Namespace, out: TextIO) -> int:
    scenario = load_scenario(args.scenario)
    report = optimize_tilts(scenario, args.tilt_step)
    print(f"strategy={report.strategy.value}", file=out)
    _print_plan(report, out)
    if args.frozen:
        _print_plan(frozen_plan(scenario), out, prefix="frozen_")
    return EXIT_OK


def cmd_threshold(args: argparse.Namespace, out: TextIO) -> int:
    scenario = load_scenario(args.scenario)
    if not args.no_calibrate:
        scenario = scenario.with_noise(
            calibrate_to_ber(scenario, args.theta_cal, args.target_ber, args.phi)
        )
    angle = max_irradiance_angle(scenario, args.target_ber, args.phi)
    threshold_db = 10.0 * math.log10(ber_threshold_snr(args.target_ber))

    print(f"target_ber={args.target_ber:g}", file=out)
    print(f"threshold_snr_db={threshold_db:.3f}", file=out)
    print(f"max_theta_deg={'NONE' if angle is None else f'{angle:.3f}'}", file=out)
    return EXIT_OK


# ============================================================================
# Entry point
# ============================================================================


def _add_scenario(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        type=Path,
        default=DEFAULT_SCENARIO_PATH,
        help="Scenario JSON (default: bundled default.json)",
    )


def _add_calibration(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--calibrate-anchor",
        type=_anchor,
        default=TABLE3_ANCHOR,
        metavar="THETA,PHI,DB",
        help="Set noise so this geometry hits this SNR (default: 65,45,128)",
    )
    parser.add_argument(
        "--no-calibrate", action="store_true", help="Use the scenario noise as-is"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lifisim", description="Indoor Li-Fi link simulator")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Log level for stderr (default: LIFISIM_LOG_LEVEL or WARNING)",
    )
    sub = parser.add_subparsers(dest="command")

    snr = sub.add_parser("snr", help="SNR at an irradiance angle")
    _add_scenario(snr)
    snr.add_argument("--theta", type=float, required=True, help="Irradiance angle (deg)")
    snr.add_argument("--phi", type=float, default=None, help="Incidence angle (deg, default: geometry)")
    _add_calibration(snr)
    snr.set_defaults(handler=cmd_snr)

    table3 = sub.add_parser("table3", help="SNR against irradiance angle, CSV")
    _add_scenario(table3)
    table3.add_argument("--phi", type=float, default=TABLE3_PHI, help="Incidence angle (deg)")
    _add_calibration(table3)
    table3.set_defaults(handler=cmd_table3)

    ber = sub.add_parser("ber", help="Monte Carlo BER sweep, CSV")
    ber.add_argument("--scheme", required=True, help="ook, pwm, ppm<L>, vppm, oppm<n>,<w>, dco-ofdm, aco-ofdm")
    ber.add_argument("--snr-db", type=_snr_points, required=True, help="Comma-separated SNR points (dB)")
    ber.add_argument("--bits", type=int, default=100_000, help="Bits per point (>= 1000)")
    ber.add_argument("--seed", type=int, default=0, help="Master seed")
    ber.add_argument("--workers", type=int, default=None, help="Sweep threads (default: LINKSIM_WORKERS)")
    ber.set_defaults(handler=cmd_ber)

    coverage = sub.add_parser("coverage", help="Receiver-plane coverage grid")
    _add_scenario(coverage)
    coverage.add_argument("--resolution", type=float, default=0.25, help="Cell size (m)")
    coverage.add_argument("--out", type=Path, required=True, help="CSV output path")
    coverage.add_argument("--heatmap", type=Path, default=None, help="PGM heatmap output path")
    coverage.add_argument("--threshold-db", type=float, default=None, help="Coverage threshold (dB)")
    coverage.set_defaults(handler=cmd_coverage)

    plan = sub.add_parser("plan", help="Tilt plan for moveable panels")
    _add_scenario(plan)
    plan.add_argument("--tilt-step", type=float, default=DEFAULT_TILT_STEP, help="Search step (deg)")
    plan.add_argument("--frozen", action="store_true", help="Also print the all-tilt-0 plan")
    plan.set_defaults(handler=cmd_plan)

    threshold = sub.add_parser("threshold", help="Largest irradiance angle meeting a target BER")
    _add_scenario(threshold)
    threshold.add_argument("--target-ber", type=float, default=BER_TARGET, help="Target BER")
    threshold.add_argument("--theta-cal", type=float, default=70.0, help="Angle placed on the target")
    threshold.add_argument("--phi", type=float, default=TABLE3_PHI, help="Incidence angle (deg)")
    threshold.add_argument("--no-calibrate", action="store_true", help="Use the scenario noise as-is")
    threshold.set_defaults(handler=cmd_threshold)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    if not getattr(args, "handler", None):
        parser.print_help(sys.stderr)
        return EXIT_USER_ERROR

    try:
        return args.handler(args, sys.stdout)
    except ScenarioFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for location, message in exc.diagnostics:
            print(f"  {location}: {message}", file=sys.stderr)
        return EXIT_USER_ERROR
    except LifiSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
