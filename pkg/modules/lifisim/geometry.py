"""
Geometry - positions, orientations and link angles
===================================================
Angles are exposed in degrees and converted to radians only at use sites.
Angles above 90 degrees are legal geometry (a panel facing away); the channel
turns them into zero gain instead of raising.

All functions are pure: safe to call from any number of workers.
"""

import math
from dataclasses import dataclass

import numpy as np
import structlog

from .errors import DegenerateGeometryError, InvalidParameterError, InvalidTiltError

log = structlog.get_logger("lifisim.geometry")

UNIT_NORM_TOLERANCE = 1e-9
DOWN = (0.0, 0.0, -1.0)
UP = (0.0, 0.0, 1.0)


# ============================================================================
# Domain types
# ============================================================================


@dataclass(frozen=True)
class Point3:
    """A position in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise InvalidParameterError(f"Point coordinates must be finite, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def of(cls, coords) -> "Point3":
        x, y, z = (float(c) for c in coords)
        return cls(x, y, z)


@dataclass(frozen=True)
class Direction3:
    """A unit vector. Use Direction3.normalized() for raw input."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm = math.sqrt(self.x**2 + self.y**2 + self.z**2)
        if not math.isfinite(norm) or abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
            raise InvalidParameterError(
                f"Direction must be unit-norm within {UNIT_NORM_TOLERANCE}, got norm {norm!r}"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def normalized(cls, x: float, y: float, z: float) -> "Direction3":
        norm = math.sqrt(x * x + y * y + z * z)
        if not math.isfinite(norm) or norm == 0.0:
            raise InvalidParameterError("Cannot normalize a zero or non-finite vector")
        return cls(x / norm, y / norm, z / norm)

    @classmethod
    def down(cls) -> "Direction3":
        return cls(*DOWN)

    @classmethod
    def up(cls) -> "Direction3":
        return cls(*UP)


@dataclass(frozen=True)
class Room:
    """Axis-aligned room with its origin at a floor corner."""

    width: float
    depth: float
    height: float
    receiver_plane_height: float = 0.85

    def __post_init__(self) -> None:
        if min(self.width, self.depth, self.height) <= 0:
            raise InvalidParameterError(
                f"Room dimensions must be > 0, got {self.width}x{self.depth}x{self.height}"
            )
        if not 0 <= self.receiver_plane_height < self.height:
            raise InvalidParameterError(
                f"receiver_plane_height must be in [0, {self.height}), "
                f"got {self.receiver_plane_height}"
            )

    def contains(self, point: Point3, tolerance: float = 1e-9) -> bool:
        return (
            -tolerance <= point.x <= self.width + tolerance
            and -tolerance <= point.y <= self.depth + tolerance
            and -tolerance <= point.z <= self.height + tolerance
        )

    def grid_shape(self, resolution: float) -> tuple[int, int]:
        """ceil(extent / resolution) cells per axis."""
        nx = math.ceil(round(self.width / resolution, 9))
        ny = math.ceil(round(self.depth / resolution, 9))
        return nx, ny

    def grid_centers(self, resolution: float) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates along x and y, clamped into the room."""
        nx, ny = self.grid_shape(resolution)
        xs = np.minimum((np.arange(nx) + 0.5) * resolution, self.width)
        ys = np.minimum((np.arange(ny) + 0.5) * resolution, self.depth)
        return xs, ys


@dataclass(frozen=True)
class LinkGeometry:
    """Irradiance angle theta, incidence angle phi (degrees) and distance (m)."""

    theta: float
    phi: float
    distance: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= 180.0:
            raise InvalidParameterError(f"theta must be in [0, 180], got {self.theta}")
        if not 0.0 <= self.phi <= 180.0:
            raise InvalidParameterError(f"phi must be in [0, 180], got {self.phi}")
        if not self.distance > 0 or not math.isfinite(self.distance):
            raise InvalidParameterError(f"distance must be > 0, got {self.distance}")


# ============================================================================
# Operations
# ============================================================================


def _angle_deg(cosine):
    return np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0)))


def link_geometry(
    tx_pos: Point3,
    tx_normal: Direction3,
    rx_pos: Point3,
    rx_normal: Direction3,
) -> LinkGeometry:
    """Angles of irradiance/incidence and distance for one transmitter/receiver pair."""
    v = rx_pos.as_array() - tx_pos.as_array()
    distance = float(np.linalg.norm(v))
    if distance == 0.0:
        raise DegenerateGeometryError(f"Transmitter and receiver coincide at {tx_pos}")

    theta = float(_angle_deg(np.dot(tx_normal.as_array(), v) / distance))
    phi = float(_angle_deg(np.dot(rx_normal.as_array(), -v) / distance))
    return LinkGeometry(theta=theta, phi=phi, distance=distance)


def link_angles(
    tx_pos: Point3,
    tx_normal: Direction3,
    rx_points: np.ndarray,
    rx_normal: Direction3,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized link_geometry over K receiver points of shape (K, 3).

    Returns (theta_deg, phi_deg, distance), each of shape (K,).
    """
    points = np.asarray(rx_points, dtype=float).reshape(-1, 3)
    v = points - tx_pos.as_array()
    distance = np.linalg.norm(v, axis=1)
    if np.any(distance == 0.0):
        raise DegenerateGeometryError(f"A receiver point coincides with the transmitter at {tx_pos}")

    theta = _angle_deg(v @ tx_normal.as_array() / distance)
    phi = _angle_deg(-v @ rx_normal.as_array() / distance)
    return theta, phi, distance


def tilt_panel(normal: Direction3, tilt_deg: float, azimuth_deg: float) -> Direction3:
    """Rotate a panel normal by tilt_deg away from vertical, toward azimuth_deg.

    The rotation axis is horizontal and perpendicular to the azimuth direction,
    so a downward normal (0, 0, -1) lands on
    (sin t cos a, sin t sin a, -cos t).
    """
    if not 0.0 <= tilt_deg <= 90.0:
        raise InvalidTiltError(f"tilt must be in [0, 90] degrees, got {tilt_deg}")

    t = math.radians(tilt_deg)
    a = math.radians(azimuth_deg)
    k = np.array([math.sin(a), -math.cos(a), 0.0])
    v = normal.as_array()

    # Rodrigues rotation
    rotated = v * math.cos(t) + np.cross(k, v) * math.sin(t) + k * np.dot(k, v) * (1 - math.cos(t))
    return Direction3.normalized(*rotated)


def tilted_normals(tilts_deg: np.ndarray, azimuths_deg: np.ndarray) -> np.ndarray:
    """Downward normals for a batch of (tilt, azimuth) pairs, shape (K, 3)."""
    t = np.radians(np.asarray(tilts_deg, dtype=float))
    a = np.radians(np.asarray(azimuths_deg, dtype=float))
    return np.stack([np.sin(t) * np.cos(a), np.sin(t) * np.sin(a), -np.cos(t)], axis=-1)


def aim_tilt(panel_pos: Point3, target_pos: Point3) -> tuple[float, float]:
    """(tilt, azimuth) that points a downward panel normal along panel -> target.

    Targets level with or above the panel clamp to a 90 degree tilt.
    """
    v = target_pos.as_array() - panel_pos.as_array()
    horizontal = math.hypot(v[0], v[1])
    drop = -v[2]
    if horizontal == 0.0 and drop == 0.0:
        raise DegenerateGeometryError(f"Target coincides with the panel at {panel_pos}")

    tilt = min(math.degrees(math.atan2(horizontal, drop)), 90.0)
    azimuth = math.degrees(math.atan2(v[1], v[0])) % 360.0 if horizontal > 0 else 0.0
    return tilt, azimuth
