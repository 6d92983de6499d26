"""Tile-indexed global store for vectorized map elements.

The map plane is partitioned into square tiles of side ``l`` (by default the
long side of the perception range, 60 m). Two independent layers share the
same tiling: a temporal layer accumulating high-confidence predictions, and a
static layer holding a pre-stored (possibly corrupted) vector map.

Tile indexing uses mathematical floor division so negative coordinates
partition the plane uniformly. Retrieval queries the ego tile plus the
adjacent tiles selected by the half-tile rule (see :func:`adjacent_tiles`),
transforms candidates into the ego frame and filters them by the perception
rectangle.
"""

from __future__ import annotations

import math
import struct
import threading
from dataclasses import dataclass, field
from enum import IntEnum
from itertools import product
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ConfigError, MapDecodeError
from .geometry import (
    EgoPose,
    PerceptionRange,
    as_polyline,
    global_to_ego,
    segments_intersect_rect,
)


class MapClass(IntEnum):
    """Map element classes; the value doubles as the heatmap channel index."""

    DIVIDER = 0
    PED_CROSSING = 1
    BOUNDARY = 2


CLASS_NAMES = {
    MapClass.DIVIDER: "divider",
    MapClass.PED_CROSSING: "ped_crossing",
    MapClass.BOUNDARY: "boundary",
}
NAME_TO_CLASS = {v: k for k, v in CLASS_NAMES.items()}


class Layer(IntEnum):
    TEMPORAL = 0
    STATIC = 1


class TileIndex(NamedTuple):
    i: int
    j: int


@dataclass(eq=False)
class MapVector:
    """One vectorized map element.

    ``geometry`` is an (N, 3) polyline; global UTM frame while stored,
    ego frame when returned from retrieval.
    """

    vec_id: int
    cls: MapClass
    geometry: np.ndarray
    confidence: float = 1.0
    layer: Layer = Layer.STATIC

    def __post_init__(self):
        self.cls = MapClass(self.cls)
        self.layer = Layer(self.layer)
        self.geometry = as_polyline(self.geometry)
        if not (0.0 <= self.confidence <= 1.0):
            raise ConfigError(f"confidence {self.confidence} outside [0, 1]")

    @classmethod
    def trusted(
        cls, vec_id: int, map_cls: MapClass, geometry: np.ndarray,
        confidence: float, layer: Layer,
    ) -> "MapVector":
        """Construct without re-validating; only for geometry derived from an
        already-valid polyline by a validity-preserving transform."""
        v = object.__new__(cls)
        v.vec_id = vec_id
        v.cls = map_cls
        v.geometry = geometry
        v.confidence = confidence
        v.layer = layer
        return v

    def with_geometry(self, geometry: np.ndarray, layer: Layer | None = None) -> "MapVector":
        return MapVector.trusted(
            self.vec_id,
            self.cls,
            geometry,
            self.confidence,
            self.layer if layer is None else layer,
        )


def vectors_equal(a: MapVector, b: MapVector) -> bool:
    """Exact structural equality (ids, class, confidence, geometry bytes)."""
    return (
        a.vec_id == b.vec_id
        and a.cls == b.cls
        and a.layer == b.layer
        and a.confidence == b.confidence
        and a.geometry.shape == b.geometry.shape
        and bool(np.all(a.geometry == b.geometry))
    )


@dataclass(frozen=True)
class RefreshConfig:
    """Confidence gate for temporal-layer refreshment."""

    tau: float = 0.8

    def __post_init__(self):
        if not (0.0 <= self.tau <= 1.0):
            raise ConfigError(f"refresh threshold {self.tau} outside [0, 1]")


def tile_index(utm_e: float, utm_n: float, l: float) -> TileIndex:
    """Tile containing a UTM coordinate: floor division of both axes by l."""
    if l <= 0:
        raise ConfigError(f"tile side {l} must be positive")
    return TileIndex(math.floor(utm_e / l), math.floor(utm_n / l))


def tile_indices(utm_e: np.ndarray, utm_n: np.ndarray, l: float):
    """Vectorized :func:`tile_index` for coordinate arrays."""
    if l <= 0:
        raise ConfigError(f"tile side {l} must be positive")
    i = np.floor(np.asarray(utm_e, dtype=np.float64) / l).astype(np.int64)
    j = np.floor(np.asarray(utm_n, dtype=np.float64) / l).astype(np.int64)
    return i, j


def _axis_adjacent(coord: float, l: float) -> tuple[int, ...]:
    idx = math.floor(coord / l)
    frac = coord % l  # floor-consistent: result in [0, l)
    half = l / 2.0
    if frac < half:
        return (idx - 1, idx)
    if frac == half:
        return (idx,)
    return (idx, idx + 1)


def adjacent_tiles(utm_e: float, utm_n: float, l: float) -> set[TileIndex]:
    """Tiles to query for an ego position: the target tile joined with the
    neighbors on the nearer side of each axis (half-tile rule).

    Returns 1, 2 or 4 tiles and always contains the target tile.
    """
    if l <= 0:
        raise ConfigError(f"tile side {l} must be positive")
    ii = _axis_adjacent(utm_e, l)
    jj = _axis_adjacent(utm_n, l)
    return {TileIndex(i, j) for i, j in product(ii, jj)}


class GlobalMap:
    """Two tile-indexed layers of map vectors keyed by integer (i, j).

    Thread contract: many concurrent readers OR one writer per layer.
    Mutations (refresh, ingest, load) serialize on an internal lock;
    retrieval never blocks retrieval.
    """

    FILE_MAGIC = b"UPPM"
    FILE_VERSION = 1

    def __init__(self, tile_side: float = 60.0):
        if tile_side <= 0:
            raise ConfigError(f"tile side {tile_side} must be positive")
        self.tile_side = float(tile_side)
        self._tiles: dict[Layer, dict[TileIndex, list[MapVector]]] = {
            Layer.TEMPORAL: {},
            Layer.STATIC: {},
        }
        self._tile_ids: dict[Layer, dict[TileIndex, set[int]]] = {
            Layer.TEMPORAL: {},
            Layer.STATIC: {},
        }
        self._lock = threading.Lock()

    # -- internals ---------------------------------------------------------

    def _register(self, layer: Layer, tile: TileIndex, vec: MapVector) -> None:
        ids = self._tile_ids[layer].setdefault(tile, set())
        if vec.vec_id in ids:
            return  # no duplicate (id, tile) pairs within a layer
        ids.add(vec.vec_id)
        self._tiles[layer].setdefault(tile, []).append(vec)

    def tiles(self, layer: Layer) -> dict[TileIndex, list[MapVector]]:
        return self._tiles[Layer(layer)]

    def vector_count(self, layer: Layer | None = None) -> int:
        layers = [Layer(layer)] if layer is not None else list(Layer)
        return sum(len(vs) for ly in layers for vs in self._tiles[ly].values())

    def layer_vectors(self, layer: Layer) -> list[MapVector]:
        """Unique vectors of a layer (tile duplicates collapsed), sorted by id."""
        seen: set[int] = set()
        out: list[MapVector] = []
        for tile in sorted(self._tiles[Layer(layer)]):
            for v in self._tiles[Layer(layer)][tile]:
                if v.vec_id not in seen:
                    seen.add(v.vec_id)
                    out.append(v)
        out.sort(key=lambda v: v.vec_id)
        return out

    # -- refreshment and ingestion -----------------------------------------

    def refresh(
        self,
        predictions: Iterable[MapVector],
        pose: EgoPose,
        cfg: RefreshConfig = RefreshConfig(),
    ) -> None:
        """Store ego-frame predictions above the confidence gate.

        Each prediction with confidence strictly greater than ``cfg.tau`` is
        transformed to the global frame and appended to the temporal layer
        under the ego pose's tile. Everything else is discarded; the static
        layer is untouched.
        """
        tile = tile_index(pose.utm_e, pose.utm_n, self.tile_side)
        kept = [p for p in predictions if p.confidence > cfg.tau]
        if not kept:
            return
        from .geometry import ego_to_global

        with self._lock:
            for p in kept:
                geo = ego_to_global(p.geometry, pose)
                self._register(Layer.TEMPORAL, tile, p.with_geometry(geo, Layer.TEMPORAL))

    def ingest_static(self, vectors: Iterable[MapVector]) -> None:
        """Pre-store global-frame vectors in the static layer.

        A vector is registered under every tile its axis-aligned bounding box
        overlaps (duplicated by reference; retrieval deduplicates by id), so
        elements spanning tile boundaries are never missed.
        """
        l = self.tile_side
        with self._lock:
            for v in vectors:
                v = v.with_geometry(v.geometry, Layer.STATIC) if v.layer != Layer.STATIC else v
                geo = v.geometry
                i_lo = math.floor(float(geo[:, 0].min()) / l)
                i_hi = math.floor(float(geo[:, 0].max()) / l)
                j_lo = math.floor(float(geo[:, 1].min()) / l)
                j_hi = math.floor(float(geo[:, 1].max()) / l)
                for i in range(i_lo, i_hi + 1):
                    for j in range(j_lo, j_hi + 1):
                        self._register(Layer.STATIC, TileIndex(i, j), v)

    # -- retrieval -----------------------------------------------------------

    def retrieve(
        self,
        layer: Layer,
        pose: EgoPose,
        rng: PerceptionRange = PerceptionRange(),
        strict_3x3: bool = False,
    ) -> list[MapVector]:
        """Query vectors around the ego pose, returned in the ego frame.

        Candidates come from the target tile plus adjacent tiles (or the full
        3x3 neighborhood with ``strict_3x3``), are deduplicated by id,
        transformed to the ego frame and filtered by intersection with the
        closed perception rectangle. Output is sorted by id.
        """
        layer = Layer(layer)
        if strict_3x3:
            ti, tj = tile_index(pose.utm_e, pose.utm_n, self.tile_side)
            tiles = {TileIndex(ti + di, tj + dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)}
        else:
            tiles = adjacent_tiles(pose.utm_e, pose.utm_n, self.tile_side)

        store = self._tiles[layer]
        seen: set[int] = set()
        cands: list[MapVector] = []
        for t in sorted(tiles):
            for v in store.get(t, ()):
                if v.vec_id not in seen:
                    seen.add(v.vec_id)
                    cands.append(v)
        return self._filter_to_ego(cands, pose, rng)

    def retrieve_all_tiles(
        self,
        layer: Layer,
        pose: EgoPose,
        rng: PerceptionRange = PerceptionRange(),
    ) -> list[MapVector]:
        """Exhaustive-scan variant of :meth:`retrieve` visiting every tile.

        Same transform/filter path, no tile indexing; exists as the
        benchmarking baseline that tile-indexed retrieval is compared
        against."""
        seen: set[int] = set()
        cands: list[MapVector] = []
        for t in sorted(self._tiles[Layer(layer)]):
            for v in self._tiles[Layer(layer)][t]:
                if v.vec_id not in seen:
                    seen.add(v.vec_id)
                    cands.append(v)
        return self._filter_to_ego(cands, pose, rng)

    def _filter_to_ego(
        self, cands: list[MapVector], pose: EgoPose, rng: PerceptionRange
    ) -> list[MapVector]:
        if not cands:
            return []

        lengths = np.array([len(v.geometry) for v in cands])
        starts = np.concatenate(([0], np.cumsum(lengths)))[:-1]
        pts = global_to_ego(np.concatenate([v.geometry for v in cands]), pose)

        inside = (
            (pts[:, 0] >= -rng.rear)
            & (pts[:, 0] <= rng.front)
            & (pts[:, 1] >= -rng.right)
            & (pts[:, 1] <= rng.left)
        )
        hit = np.logical_or.reduceat(inside, starts)

        # vectors with no vertex inside: bounding-box reject, then clip test
        bb_lo_e = np.minimum.reduceat(pts[:, 0], starts)
        bb_hi_e = np.maximum.reduceat(pts[:, 0], starts)
        bb_lo_n = np.minimum.reduceat(pts[:, 1], starts)
        bb_hi_n = np.maximum.reduceat(pts[:, 1], starts)
        maybe = ~hit & (
            (bb_lo_e <= rng.front)
            & (bb_hi_e >= -rng.rear)
            & (bb_lo_n <= rng.left)
            & (bb_hi_n >= -rng.right)
        )
        for k in np.nonzero(maybe)[0]:
            seg = pts[starts[k] : starts[k] + lengths[k]]
            if segments_intersect_rect(seg[:-1], seg[1:], rng).any():
                hit[k] = True

        out = [
            cands[k].with_geometry(pts[starts[k] : starts[k] + lengths[k]].copy())
            for k in np.nonzero(hit)[0]
        ]
        out.sort(key=lambda v: v.vec_id)
        return out

    # -- persistence ---------------------------------------------------------

    def save(self, path) -> None:
        """Write the versioned binary container (documented in the README)."""
        chunks = [self.FILE_MAGIC, struct.pack("<Hd", self.FILE_VERSION, self.tile_side)]
        for layer in (Layer.TEMPORAL, Layer.STATIC):
            tiles = self._tiles[layer]
            chunks.append(struct.pack("<Q", len(tiles)))
            for (i, j) in sorted(tiles):
                vecs = tiles[TileIndex(i, j)]
                chunks.append(struct.pack("<qqQ", i, j, len(vecs)))
                for v in vecs:
                    geo = v.geometry
                    chunks.append(
                        struct.pack("<QBdI", v.vec_id, int(v.cls), v.confidence, len(geo))
                    )
                    chunks.append(geo.astype("<f8").tobytes())
        with open(path, "wb") as fh:
            fh.write(b"".join(chunks))

    @classmethod
    def load(cls, path) -> "GlobalMap":
        """Read a map container; raises MapDecodeError with the byte offset
        of the failure, never returning a partial map."""
        with open(path, "rb") as fh:
            buf = fh.read()
        r = _Reader(buf)
        if r.take(4) != cls.FILE_MAGIC:
            raise MapDecodeError("bad magic, not a global map file", 0)
        version, tile_side = r.unpack("<Hd")
        if version != cls.FILE_VERSION:
            raise MapDecodeError(f"unsupported version {version}", 4)
        if tile_side <= 0 or not math.isfinite(tile_side):
            raise MapDecodeError(f"invalid tile side {tile_side}", 6)
        m = cls(tile_side)
        for layer in (Layer.TEMPORAL, Layer.STATIC):
            (n_tiles,) = r.unpack("<Q")
            for _ in range(n_tiles):
                i, j, n_vecs = r.unpack("<qqQ")
                tile = TileIndex(i, j)
                for _ in range(n_vecs):
                    vec_id, cls_id, conf, n_pts = r.unpack("<QBdI")
                    at = r.offset
                    pts = r.take(n_pts * 24)
                    geo = np.frombuffer(pts, dtype="<f8").reshape(n_pts, 3).copy()
                    try:
                        vec = MapVector(vec_id, MapClass(cls_id), geo, conf, layer)
                    except ValueError as exc:
                        raise MapDecodeError(f"invalid vector: {exc}", at) from exc
                    m._register(layer, tile, vec)
        if r.offset != len(buf):
            raise MapDecodeError("trailing bytes after map data", r.offset)
        return m

    def equals(self, other: "GlobalMap") -> bool:
        """Structural identity: same tiles, same vectors, same order."""
        if self.tile_side != other.tile_side:
            return False
        for layer in Layer:
            a, b = self._tiles[layer], other._tiles[layer]
            if set(a) != set(b):
                return False
            for tile, vecs in a.items():
                ovecs = b[tile]
                if len(vecs) != len(ovecs):
                    return False
                if not all(vectors_equal(v, o) for v, o in zip(vecs, ovecs)):
                    return False
        return True


class _Reader:
    """Cursor over a bytes buffer that reports offsets on underrun."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.buf):
            raise MapDecodeError("truncated file", self.offset)
        out = self.buf[self.offset : self.offset + n]
        self.offset += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


# -- plain-text vector interchange ------------------------------------------
#
# One record per line:
#   id,class_name,confidence,e0,n0,z0,e1,n1,z1,...
# Blank lines and lines starting with '#' are skipped. Floats are written
# with shortest round-trip repr, so files re-read bit-identically.


def write_vector_file(path, vectors: Iterable[MapVector]) -> None:
    with open(path, "w") as fh:
        fh.write("# id,class,confidence,e0,n0,z0,e1,n1,z1,...\n")
        for v in vectors:
            coords = ",".join(repr(float(x)) for x in v.geometry.ravel())
            fh.write(f"{v.vec_id},{CLASS_NAMES[v.cls]},{repr(float(v.confidence))},{coords}\n")


def read_vector_file(path, layer: Layer = Layer.STATIC) -> list[MapVector]:
    vectors = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                if len(parts) < 9 or (len(parts) - 3) % 3 != 0:
                    raise ValueError("expected id,class,confidence plus >= 2 e,n,z triples")
                vec_id = int(parts[0])
                cls = NAME_TO_CLASS[parts[1]]
                conf = float(parts[2])
                geo = np.array([float(x) for x in parts[3:]], dtype=np.float64).reshape(-1, 3)
                vectors.append(MapVector(vec_id, cls, geo, conf, layer))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: bad vector record: {exc}") from exc
    return vectors
