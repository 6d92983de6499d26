"""Tri-mode prior assembly: mode sampling, vertical filtering and BEV
rasterization into per-class binary heatmaps.

Grid convention (fixed): rows index the forward axis with row 0 front-most,
columns index the lateral axis with column 0 left-most, and the ego sits at
cell (rows // 2, cols // 2) for the default symmetric range. A cell is set
when a polyline segment passes through it (conservative traversal computed
from exact gridline crossings), with points on a gridline belonging to the
floor-side cell.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, MapDecodeError
from .geometry import EgoPose, PerceptionRange
from .tilemap import GlobalMap, Layer, MapVector


class Mode(Enum):
    NON_PRIOR = "non_prior"
    TEMPORAL_PRIOR = "temporal_prior"
    TEMPORAL_MAP_FUSION = "temporal_map_fusion"


@dataclass(frozen=True)
class ModeRatio:
    """Categorical sampling weights over the three operating modes."""

    p_non: float = 0.5
    p_temporal: float = 0.3
    p_fusion: float = 0.2

    def __post_init__(self):
        if min(self.p_non, self.p_temporal, self.p_fusion) < 0:
            raise ConfigError("mode probabilities must be >= 0")
        if abs(self.p_non + self.p_temporal + self.p_fusion - 1.0) > 1e-12:
            raise ConfigError("mode probabilities must sum to 1")


@dataclass(frozen=True)
class RasterConfig:
    """BEV grid geometry: cell size, perception range and stroke width."""

    cell: float = 0.3
    rng: PerceptionRange = PerceptionRange()
    classes: int = 3
    line_halfwidth: int = 0

    def __post_init__(self):
        if self.cell <= 0:
            raise ConfigError("cell size must be positive")
        if self.classes < 1 or self.line_halfwidth < 0:
            raise ConfigError("classes must be >= 1 and line_halfwidth >= 0")
        self._int_dim(self.rng.long_side, "long")
        self._int_dim(self.rng.short_side, "short")

    def _int_dim(self, extent: float, name: str) -> int:
        dim = extent / self.cell
        if abs(dim - round(dim)) > 1e-6:
            raise ConfigError(f"{name} side {extent} is not an integer number of {self.cell} m cells")
        return int(round(dim))

    @property
    def rows(self) -> int:
        return self._int_dim(self.rng.long_side, "long")

    @property
    def cols(self) -> int:
        return self._int_dim(self.rng.short_side, "short")

    @property
    def grid_shape(self) -> tuple[int, int, int]:
        return (self.classes, self.rows, self.cols)


@dataclass
class PriorHeatmaps:
    """Pair of per-class binary BEV grids: temporal and map priors."""

    h_t: np.ndarray
    h_m: np.ndarray

    def __post_init__(self):
        if self.h_t.shape != self.h_m.shape:
            raise ConfigError("heatmap shapes differ")


def sample_mode(ratio: ModeRatio, rng: np.random.Generator) -> Mode:
    """Draw one operating mode with the configured probabilities."""
    u = rng.random()
    if u < ratio.p_non:
        return Mode.NON_PRIOR
    if u < ratio.p_non + ratio.p_temporal:
        return Mode.TEMPORAL_PRIOR
    return Mode.TEMPORAL_MAP_FUSION


def select_inference_mode(temporal_available: bool, map_available: bool) -> Mode:
    """Availability-driven mode switching at inference time.

    Map data present activates fusion (with an empty temporal retrieval if
    the buffer is cold); temporal data alone uses the temporal prior; with
    neither the system falls back to running prior-free.
    """
    if map_available:
        return Mode.TEMPORAL_MAP_FUSION
    if temporal_available:
        return Mode.TEMPORAL_PRIOR
    return Mode.NON_PRIOR


def vertical_filter(
    vectors: Sequence[MapVector], ego_z: float, band: float
) -> list[MapVector]:
    """Drop vectors whose mean vertex elevation is more than ``band`` meters
    away from the ego elevation (overpass / tunnel rejection)."""
    if band <= 0:
        raise ConfigError("vertical band must be positive")
    return [v for v in vectors if abs(float(v.geometry[:, 2].mean()) - ego_z) <= band]


def _crossing_params(a0: np.ndarray, a1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Segment-relative parameters where each segment crosses integer
    gridlines along one axis. Returns (segment index, t) flattened over all
    segments; segments constant in the axis contribute nothing."""
    da = a1 - a0
    lo = np.minimum(a0, a1)
    hi = np.maximum(a0, a1)
    kstart = np.ceil(lo)
    cnt = np.where(da != 0.0, np.maximum(np.floor(hi) - kstart + 1.0, 0.0), 0.0).astype(np.int64)
    idx = np.repeat(np.arange(len(a0)), cnt)
    if len(idx) == 0:
        return idx, np.empty(0)
    offsets = np.concatenate(([0], np.cumsum(cnt)))[:-1]
    within = np.arange(len(idx)) - np.repeat(offsets, cnt)
    k = kstart[idx] + within
    t = (k - a0[idx]) / da[idx]
    return idx, np.clip(t, 0.0, 1.0)


def rasterize(vectors: Iterable[MapVector], cfg: RasterConfig = RasterConfig()) -> np.ndarray:
    """Draw ego-frame polylines into a per-class binary occupancy grid.

    Every cell a segment passes through is set (cells are touched at exact
    gridline crossings, so no cell with positive chord length is skipped).
    Cells outside the grid are clipped. Returns float32 of shape
    (classes, rows, cols) with entries in {0, 1}.
    """
    grid = np.zeros(cfg.grid_shape, dtype=np.float32)
    segs_u0, segs_v0, segs_u1, segs_v1, segs_ch = [], [], [], [], []
    for v in vectors:
        ch = int(v.cls)
        if ch >= cfg.classes:
            raise ConfigError(f"class {ch} does not fit a {cfg.classes}-channel grid")
        # continuous grid coordinates: u along rows (front -> rear),
        # v along columns (left -> right)
        u = (cfg.rng.front - v.geometry[:, 0]) / cfg.cell
        w = (cfg.rng.left - v.geometry[:, 1]) / cfg.cell
        segs_u0.append(u[:-1])
        segs_u1.append(u[1:])
        segs_v0.append(w[:-1])
        segs_v1.append(w[1:])
        segs_ch.append(np.full(len(u) - 1, ch, dtype=np.int64))
    if not segs_u0:
        return grid

    u0 = np.concatenate(segs_u0)
    u1 = np.concatenate(segs_u1)
    v0 = np.concatenate(segs_v0)
    v1 = np.concatenate(segs_v1)
    chan = np.concatenate(segs_ch)
    m = len(u0)

    iu, tu = _crossing_params(u0, u1)
    iv, tv = _crossing_params(v0, v1)
    ends = np.arange(m)
    idx = np.concatenate((ends, ends, iu, iv))
    ts = np.concatenate((np.zeros(m), np.ones(m), tu, tv))
    order = np.lexsort((ts, idx))
    idx = idx[order]
    ts = ts[order]

    same = idx[:-1] == idx[1:]
    seg = idx[:-1][same]
    tm = 0.5 * (ts[:-1][same] + ts[1:][same])
    pu = u0[seg] + tm * (u1[seg] - u0[seg])
    pv = v0[seg] + tm * (v1[seg] - v0[seg])
    rows = np.floor(pu).astype(np.int64)
    cols = np.floor(pv).astype(np.int64)
    ch = chan[seg]

    hw = cfg.line_halfwidth
    for dr in range(-hw, hw + 1):
        for dc in range(-hw, hw + 1):
            r = rows + dr
            c = cols + dc
            ok = (r >= 0) & (r < cfg.rows) & (c >= 0) & (c < cfg.cols)
            grid[ch[ok], r[ok], c[ok]] = 1.0
    return grid


def assemble_from_vectors(
    mode: Mode,
    temporal_vecs: Sequence[MapVector],
    static_vecs: Sequence[MapVector],
    cfg: RasterConfig = RasterConfig(),
    band: float | None = None,
) -> PriorHeatmaps:
    """Mode semantics applied to already-retrieved ego-frame vectors.

    non-prior mode returns two zero grids regardless of world state; the
    temporal-prior mode rasterizes only the temporal vectors and zeroes the
    map heatmap; fusion rasterizes both. ``band`` enables the vertical filter
    (None disables it, for 2D data).
    """

    def zeros() -> np.ndarray:
        return np.zeros(cfg.grid_shape, dtype=np.float32)

    def build(vecs: Sequence[MapVector]) -> np.ndarray:
        if band is not None:
            vecs = vertical_filter(vecs, 0.0, band)
        return rasterize(vecs, cfg)

    if mode is Mode.NON_PRIOR:
        return PriorHeatmaps(zeros(), zeros())
    if mode is Mode.TEMPORAL_PRIOR:
        return PriorHeatmaps(build(temporal_vecs), zeros())
    if mode is Mode.TEMPORAL_MAP_FUSION:
        return PriorHeatmaps(build(temporal_vecs), build(static_vecs))
    raise ConfigError(f"unknown mode {mode!r}")


def assemble_priors(
    mode: Mode,
    gmap: GlobalMap,
    pose: EgoPose,
    cfg: RasterConfig = RasterConfig(),
    band: float | None = None,
    strict_3x3: bool = False,
    timings: dict | None = None,
) -> PriorHeatmaps:
    """Produce the (temporal, map) heatmap pair for one frame by retrieving
    the layers a mode needs and rasterizing them (see
    :func:`assemble_from_vectors` for the mode semantics). ``timings``
    optionally receives accumulated per-stage seconds under "retrieval_s" /
    "rasterization_s"."""
    temporal_vecs: list[MapVector] = []
    static_vecs: list[MapVector] = []
    t0 = time.perf_counter()
    if mode in (Mode.TEMPORAL_PRIOR, Mode.TEMPORAL_MAP_FUSION):
        temporal_vecs = gmap.retrieve(Layer.TEMPORAL, pose, cfg.rng, strict_3x3=strict_3x3)
    if mode is Mode.TEMPORAL_MAP_FUSION:
        static_vecs = gmap.retrieve(Layer.STATIC, pose, cfg.rng, strict_3x3=strict_3x3)
    t1 = time.perf_counter()
    out = assemble_from_vectors(mode, temporal_vecs, static_vecs, cfg, band)
    t2 = time.perf_counter()
    if timings is not None:
        timings["retrieval_s"] = timings.get("retrieval_s", 0.0) + (t1 - t0)
        timings["rasterization_s"] = timings.get("rasterization_s", 0.0) + (t2 - t1)
    return out


# -- heatmap files -------------------------------------------------------------
#
# Raw container: 16-byte header = magic "BEVH" + u32 C, H, W (little-endian),
# then C*H*W float32 values, row-major. One array per file.

HEATMAP_MAGIC = b"BEVH"


def write_heatmap(path, grid: np.ndarray) -> None:
    arr = np.ascontiguousarray(grid, dtype="<f4")
    if arr.ndim != 3:
        raise ConfigError(f"heatmap must be (C, H, W), got shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(HEATMAP_MAGIC)
        fh.write(struct.pack("<III", *arr.shape))
        fh.write(arr.tobytes())


def read_heatmap(path) -> np.ndarray:
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 16:
        raise MapDecodeError("truncated heatmap header", len(buf))
    if buf[:4] != HEATMAP_MAGIC:
        raise MapDecodeError("bad heatmap magic", 0)
    c, h, w = struct.unpack("<III", buf[4:16])
    need = 16 + c * h * w * 4
    if len(buf) != need:
        raise MapDecodeError(f"heatmap payload should be {need} bytes, got {len(buf)}", 16)
    return np.frombuffer(buf[16:], dtype="<f4").reshape(c, h, w).copy()


def write_pgm(path, channel: np.ndarray) -> None:
    """Binary portable graymap of one heatmap channel (occupied = 255)."""
    arr = np.asarray(channel)
    if arr.ndim != 2:
        raise ConfigError(f"PGM export needs a 2D channel, got shape {arr.shape}")
    data = np.where(arr > 0, 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode())
        fh.write(data.tobytes())
