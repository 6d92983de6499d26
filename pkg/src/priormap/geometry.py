"""Coordinate frames, polyline utilities and perception-range tests.

Conventions (fixed once, used everywhere):

* A polyline is an ``(N, 3)`` float64 array of ``[e, n, z]`` rows. In the
  global frame ``e``/``n`` are UTM east/north meters; in the ego frame ``e``
  points forward and ``n`` points left.
* Yaw is counterclockwise-positive with zero along the UTM east axis.
* Transforms are planar rigid motions: ``z`` is translated, never rotated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryError

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (a + math.pi) % TWO_PI - math.pi


def as_polyline(points) -> np.ndarray:
    """Validate and return a polyline as an (N, 3) float64 array.

    Raises GeometryError unless the input has at least two points, finite
    coordinates, and no two consecutive identical points.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise GeometryError(f"polyline must be (N, 3), got shape {pts.shape}")
    if pts.shape[0] < 2:
        raise GeometryError("polyline needs at least 2 points")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("polyline has non-finite coordinates")
    if np.any(np.all(pts[1:] == pts[:-1], axis=1)):
        raise GeometryError("polyline has consecutive identical points")
    return pts


def polyline_length(points: np.ndarray) -> float:
    """Total 3D arc length of a polyline."""
    seg = np.diff(np.asarray(points, dtype=np.float64), axis=0)
    return float(np.sqrt((seg * seg).sum(axis=1)).sum())


@dataclass(frozen=True)
class EgoPose:
    """Vehicle pose: UTM east/north, elevation and heading."""

    utm_e: float
    utm_n: float
    z: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("utm_e", "utm_n", "z", "yaw"):
            if not math.isfinite(getattr(self, name)):
                raise GeometryError(f"pose field {name} is not finite")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


@dataclass(frozen=True)
class PerceptionRange:
    """Ego-centered rectangle: forward/backward and lateral extents in meters.

    In the ego frame the rectangle is [-rear, front] x [-right, left], with
    closed boundaries so that edge points count as inside.
    """

    front: float = 30.0
    rear: float = 30.0
    left: float = 15.0
    right: float = 15.0

    def __post_init__(self):
        if min(self.front, self.rear, self.left, self.right) <= 0:
            raise ConfigError("perception range extents must be positive")

    @property
    def long_side(self) -> float:
        return self.front + self.rear

    @property
    def short_side(self) -> float:
        return self.left + self.right


def _rot(yaw: float) -> tuple[float, float]:
    return math.cos(yaw), math.sin(yaw)


def ego_to_global(points: np.ndarray, pose: EgoPose) -> np.ndarray:
    """Map ego-frame points to the global frame: rotate by yaw, then translate."""
    pts = np.asarray(points, dtype=np.float64)
    c, s = _rot(pose.yaw)
    out = np.empty_like(pts)
    out[:, 0] = pose.utm_e + pts[:, 0] * c - pts[:, 1] * s
    out[:, 1] = pose.utm_n + pts[:, 0] * s + pts[:, 1] * c
    out[:, 2] = pts[:, 2] + pose.z
    return out


def global_to_ego(points: np.ndarray, pose: EgoPose) -> np.ndarray:
    """Exact inverse of :func:`ego_to_global`."""
    pts = np.asarray(points, dtype=np.float64)
    c, s = _rot(pose.yaw)
    de = pts[:, 0] - pose.utm_e
    dn = pts[:, 1] - pose.utm_n
    out = np.empty_like(pts)
    out[:, 0] = de * c + dn * s
    out[:, 1] = -de * s + dn * c
    out[:, 2] = pts[:, 2] - pose.z
    return out


def segments_intersect_rect(
    p: np.ndarray, q: np.ndarray, rng: PerceptionRange
) -> np.ndarray:
    """Liang-Barsky clip test for segments p[i] -> q[i] against the closed
    range rectangle. Returns a boolean array, one entry per segment."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    dx = q[:, 0] - p[:, 0]
    dy = q[:, 1] - p[:, 1]
    t0 = np.zeros(len(p))
    t1 = np.ones(len(p))
    alive = np.ones(len(p), dtype=bool)

    # (direction component, distance to boundary) per rectangle edge
    edges = (
        (-dx, p[:, 0] - (-rng.rear)),
        (dx, rng.front - p[:, 0]),
        (-dy, p[:, 1] - (-rng.right)),
        (dy, rng.left - p[:, 1]),
    )
    for pc, qc in edges:
        par = pc == 0.0
        alive &= ~(par & (qc < 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(par, 0.0, qc / np.where(par, 1.0, pc))
        enter = ~par & (pc < 0.0)
        leave = ~par & (pc > 0.0)
        t0 = np.where(enter, np.maximum(t0, t), t0)
        t1 = np.where(leave, np.minimum(t1, t), t1)
    return alive & (t0 <= t1)


def intersects_range(points: np.ndarray, rng: PerceptionRange) -> bool:
    """True iff the ego-frame polyline touches the closed range rectangle."""
    pts = np.asarray(points, dtype=np.float64)
    inside = (
        (pts[:, 0] >= -rng.rear)
        & (pts[:, 0] <= rng.front)
        & (pts[:, 1] >= -rng.right)
        & (pts[:, 1] <= rng.left)
    )
    if inside.any():
        return True
    if len(pts) < 2:
        return False
    return bool(segments_intersect_rect(pts[:-1], pts[1:], rng).any())


def resample_polyline(points: np.ndarray, n_pts: int) -> np.ndarray:
    """Resample a polyline to ``n_pts`` points equidistant in arc length.

    Endpoints are preserved exactly. Raises GeometryError for zero-length
    geometry. The output is a plain (n_pts, 3) array; a folding polyline may
    legitimately produce coincident consecutive samples.
    """
    if n_pts < 2:
        raise GeometryError("resampling needs n_pts >= 2")
    pts = np.asarray(points, dtype=np.float64)
    seg = np.diff(pts, axis=0)
    seglen = np.sqrt((seg * seg).sum(axis=1))
    total = float(seglen.sum())
    if total <= 0.0:
        raise GeometryError("cannot resample a zero-length polyline")
    cum = np.concatenate(([0.0], np.cumsum(seglen)))
    targets = np.linspace(0.0, total, n_pts)
    out = np.empty((n_pts, 3))
    for k in range(3):
        out[:, k] = np.interp(targets, cum, pts[:, k])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out
