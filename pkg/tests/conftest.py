"""Shared fixtures and independent oracles used across the test suite."""

import math

import numpy as np
import pytest
import shapely

from priormap import MapClass, MapVector, PerceptionRange


def random_vectors(rng, n, area_lo=-500.0, area_hi=500.0, max_pts=5, id_start=1):
    """Random short polylines scattered over a square region."""
    out = []
    for k in range(n):
        n_pts = int(rng.integers(2, max_pts + 1))
        start = rng.uniform(area_lo, area_hi, 2)
        ang = rng.uniform(0, 2 * math.pi)
        length = rng.uniform(2.0, 40.0)
        ts = np.linspace(0.0, 1.0, n_pts)
        jitter = rng.normal(0, 0.5, (n_pts, 2))
        pts = np.stack(
            [
                start[0] + ts * length * math.cos(ang) + jitter[:, 0],
                start[1] + ts * length * math.sin(ang) + jitter[:, 1],
                rng.uniform(-2, 2, n_pts),
            ],
            axis=1,
        )
        out.append(
            MapVector(id_start + k, MapClass(int(rng.integers(0, 3))), pts,
                      float(rng.uniform(0, 1)))
        )
    return out


def ego_transform_oracle(points, pose):
    """Global -> ego transform written out from first principles."""
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    de = points[:, 0] - pose.utm_e
    dn = points[:, 1] - pose.utm_n
    return np.stack([de * c + dn * s, -de * s + dn * c, points[:, 2] - pose.z], axis=1)


def brute_in_range(vectors, pose, rng: PerceptionRange):
    """Exhaustive range filter over every vector, bypassing tile indexing.

    Returns (set of in-range ids, dict id -> ego distance to the polyline),
    with intersection decided by an independent geometry library.
    """
    if not vectors:
        return set(), {}
    ids = np.array([v.vec_id for v in vectors])
    lens = np.array([len(v.geometry) for v in vectors])
    pts = np.concatenate([v.geometry for v in vectors])
    ego = ego_transform_oracle(pts, pose)[:, :2]
    idx = np.repeat(np.arange(len(vectors)), lens)
    lines = shapely.linestrings(ego, indices=idx)
    rect = shapely.box(-rng.rear, -rng.right, rng.front, rng.left)
    mask = shapely.intersects(lines, rect)
    dist = shapely.distance(lines, shapely.points([0.0, 0.0]))
    return set(ids[mask].tolist()), dict(zip(ids.tolist(), dist.tolist()))


def raster_oracle_cells(vectors, cfg, samples_per_seg=10_000):
    """Dense-sampling rasterization oracle: the cell of every sampled point."""
    cells = set()
    for v in vectors:
        u = (cfg.rng.front - v.geometry[:, 0]) / cfg.cell
        w = (cfg.rng.left - v.geometry[:, 1]) / cfg.cell
        for k in range(len(u) - 1):
            ts = np.linspace(0.0, 1.0, samples_per_seg)
            rr = np.floor(u[k] + ts * (u[k + 1] - u[k])).astype(int)
            cc = np.floor(w[k] + ts * (w[k + 1] - w[k])).astype(int)
            ok = (rr >= 0) & (rr < cfg.rows) & (cc >= 0) & (cc < cfg.cols)
            cells.update(zip((int(v.cls) * np.ones_like(rr))[ok].tolist(),
                             rr[ok].tolist(), cc[ok].tolist()))
    return cells


def point_segment_distance(p, a, b):
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
