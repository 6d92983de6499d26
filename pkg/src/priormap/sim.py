"""Deterministic synthetic worlds and the frame-by-frame replay loop.

The generated world is a city grid: square blocks bounded by two-lane roads,
with one divider per road centerline, closed boundary loops around each block
(plus the outer perimeter), and pedestrian crossings scattered over road
segments. A stand-in detector jitters ground truth to produce per-frame
predictions with confidences, which drive refreshment of the temporal layer.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from statistics import median
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .evaluation import evaluate
from .geometry import EgoPose, PerceptionRange
from .perturb import ElementPool, PerturbationSpec, bounding_rect
from .perturb import apply as apply_perturbations
from .priors import Mode, ModeRatio, RasterConfig, assemble_from_vectors, sample_mode, select_inference_mode
from .tilemap import GlobalMap, Layer, MapClass, MapVector, RefreshConfig


@dataclass(frozen=True)
class WorldSpec:
    """City-grid world: blocks x blocks square blocks of two-lane roads."""

    seed: int = 0
    blocks: int = 4
    block_size: float = 120.0
    lane_width: float = 3.5
    crossing_density: float = 0.5

    def __post_init__(self):
        if self.blocks < 1 or self.block_size <= 0 or self.lane_width <= 0:
            raise ConfigError("world dimensions must be positive")
        if not (0.0 <= self.crossing_density <= 1.0):
            raise ConfigError("crossing density outside [0, 1]")
        if self.lane_width * 2 >= self.block_size:
            raise ConfigError("blocks too small for the lane width")


@dataclass(frozen=True)
class ReplaySpec:
    """Stand-in detector and episode parameters."""

    seed: int = 0
    detector_noise_sigma: float = 0.1
    detector_dropout: float = 0.05
    sigma_ref: float = 1.0
    frame_rate: float = 10.0
    map_coverage: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.detector_dropout <= 1.0):
            raise ConfigError("dropout outside [0, 1]")
        if not (0.0 <= self.map_coverage <= 1.0):
            raise ConfigError("map coverage outside [0, 1]")
        if self.detector_noise_sigma < 0 or self.sigma_ref <= 0 or self.frame_rate <= 0:
            raise ConfigError("sigma must be >= 0, sigma_ref and frame_rate > 0")


def generate_world(spec: WorldSpec, pose_step: float = 2.0) -> tuple[list[MapVector], list[EgoPose]]:
    """Build the grid world and a smooth ego loop along its outer road.

    Deterministic per seed. Returns global-frame vectors and a pose
    trajectory sampled every ``pose_step`` meters.
    """
    rng = np.random.default_rng(spec.seed)
    bs, lw = spec.block_size, spec.lane_width
    extent = spec.blocks * bs
    grid = [k * bs for k in range(spec.blocks + 1)]
    vectors: list[MapVector] = []
    next_id = 1

    def add(cls: MapClass, pts) -> None:
        nonlocal next_id
        geo = np.asarray(pts, dtype=np.float64)
        vectors.append(MapVector(next_id, cls, geo, 1.0, Layer.STATIC))
        next_id += 1

    # dividers: one centerline polyline per road, vertices at every crossing
    for g in grid:
        add(MapClass.DIVIDER, [(g, y, 0.0) for y in grid])
        add(MapClass.DIVIDER, [(x, g, 0.0) for x in grid])

    def rectangle(lo_e, lo_n, hi_e, hi_n):
        return [
            (lo_e, lo_n, 0.0),
            (hi_e, lo_n, 0.0),
            (hi_e, hi_n, 0.0),
            (lo_e, hi_n, 0.0),
            (lo_e, lo_n, 0.0),
        ]

    # boundaries: outer perimeter plus one closed loop per block interior
    add(MapClass.BOUNDARY, rectangle(-lw, -lw, extent + lw, extent + lw))
    for bi in range(spec.blocks):
        for bj in range(spec.blocks):
            add(
                MapClass.BOUNDARY,
                rectangle(grid[bi] + lw, grid[bj] + lw, grid[bi + 1] - lw, grid[bj + 1] - lw),
            )

    # pedestrian crossings: at most one per road segment, across the road
    for g in grid:
        for k in range(spec.blocks):
            span_lo = grid[k] + 0.25 * bs
            span_hi = grid[k + 1] - 0.25 * bs
            if rng.random() < spec.crossing_density:
                pos = rng.uniform(span_lo, span_hi)
                add(MapClass.PED_CROSSING, [(g - lw, pos, 0.0), (g + lw, pos, 0.0)])
            if rng.random() < spec.crossing_density:
                pos = rng.uniform(span_lo, span_hi)
                add(MapClass.PED_CROSSING, [(pos, g - lw, 0.0), (pos, g + lw, 0.0)])

    # counterclockwise loop along the outer road, right-hand lane, with
    # corner cuts so headings change gradually
    h = lw / 2.0
    loop = [
        (0.0, -h),
        (extent, -h),
        (extent + h, 0.0),
        (extent + h, extent),
        (extent, extent + h),
        (0.0, extent + h),
        (-h, extent),
        (-h, 0.0),
        (0.0, -h),
    ]
    trajectory: list[EgoPose] = []
    for (x0, y0), (x1, y1) in zip(loop[:-1], loop[1:]):
        seg_len = math.hypot(x1 - x0, y1 - y0)
        yaw = math.atan2(y1 - y0, x1 - x0)
        n_steps = max(1, int(seg_len // pose_step))
        for s in range(n_steps):
            t = s * pose_step / seg_len
            trajectory.append(EgoPose(x0 + t * (x1 - x0), y0 + t * (y1 - y0), 0.0, yaw))
    return vectors, trajectory


def replay_predict(
    gts: Sequence[MapVector],
    spec: ReplaySpec,
    rng: np.random.Generator,
    id_start: int = 1_000_000,
) -> list[MapVector]:
    """Jittered ground truth standing in for a detector.

    Vertices get in-plane Gaussian noise, instances drop out with the
    configured probability, and confidence decays with the mean applied
    jitter: exp(-mean_jitter / sigma_ref).
    """
    preds: list[MapVector] = []
    for vec in gts:
        if rng.random() < spec.detector_dropout:
            continue
        noise = rng.normal(0.0, spec.detector_noise_sigma, (len(vec.geometry), 2))
        geo = vec.geometry.copy()
        geo[:, :2] += noise
        mean_jitter = float(np.sqrt((noise * noise).sum(axis=1)).mean())
        conf = math.exp(-mean_jitter / spec.sigma_ref)
        preds.append(MapVector(id_start + len(preds), vec.cls, geo, conf, Layer.TEMPORAL))
    return preds


@dataclass
class RunReport:
    """Frame-by-frame episode record plus stage latency samples.

    The canonical serialization excludes latencies by default so that runs
    with equal seeds produce byte-identical files (timings are wall-clock
    and inherently non-reproducible).
    """

    seeds: dict = field(default_factory=dict)
    frames: list[dict] = field(default_factory=list)
    latencies_ms: dict[str, list[float]] = field(
        default_factory=lambda: {"retrieval": [], "rasterization": [], "refreshment": []}
    )

    def mode_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for fr in self.frames:
            counts[fr["mode"]] = counts.get(fr["mode"], 0) + 1
        return counts

    def median_latencies_ms(self) -> dict[str, float]:
        return {k: (median(v) if v else 0.0) for k, v in self.latencies_ms.items()}

    def mean_prior_map(self) -> float | None:
        vals = [fr["prior_map"] for fr in self.frames if fr.get("prior_map") is not None]
        return float(np.mean(vals)) if vals else None

    def to_json_dict(self, include_timings: bool = False) -> dict:
        out = {
            "seeds": self.seeds,
            "mode_counts": self.mode_counts(),
            "mean_prior_map": self.mean_prior_map(),
            "frames": self.frames,
        }
        if include_timings:
            out["median_latencies_ms"] = self.median_latencies_ms()
        return out

    def write(self, path, include_timings: bool = False) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(include_timings), fh, sort_keys=True, indent=2)
            fh.write("\n")


def run_episode(
    world: Sequence[MapVector],
    trajectory: Sequence[EgoPose],
    replay: ReplaySpec = ReplaySpec(),
    refresh_cfg: RefreshConfig = RefreshConfig(),
    mode_ratio: ModeRatio | None = None,
    raster_cfg: RasterConfig = RasterConfig(),
    perturb_spec: PerturbationSpec | None = None,
    perturb_tags: Sequence[str] = (),
    pool: ElementPool | None = None,
    band: float | None = None,
    strict_3x3: bool = False,
    eval_every: int = 1,
    max_frames: int | None = None,
) -> RunReport:
    """Replay one episode: per frame, pick the operating mode, retrieve and
    assemble priors, run the stand-in detector, and refresh the temporal
    layer.

    The static layer is ingested once at the start, optionally corrupted
    (instance operators work on the global frame; frame operators act about
    the world origin) and thinned to ``replay.map_coverage`` of its tiles.
    ``mode_ratio`` switches from availability-driven inference switching to
    training-style mode sampling. ``eval_every`` controls how often the
    retrieved priors are scored against in-range ground truth (0 disables).
    """
    rng = np.random.default_rng(replay.seed)
    tile_side = raster_cfg.rng.long_side

    gt_map = GlobalMap(tile_side)
    gt_map.ingest_static(world)

    live = GlobalMap(tile_side)
    static_vectors = list(world)
    if perturb_spec is not None and perturb_tags:
        static_vectors = apply_perturbations(
            static_vectors, pool, perturb_spec, perturb_tags,
            perturb_spec.rng(), bounding_rect(static_vectors),
        )
    live.ingest_static(static_vectors)
    if replay.map_coverage < 1.0:
        store = live.tiles(Layer.STATIC)
        for tile in sorted(store):
            if rng.random() >= replay.map_coverage:
                del store[tile]

    report = RunReport(
        seeds={
            "replay": replay.seed,
            "perturb": perturb_spec.seed if perturb_spec is not None else None,
        }
    )
    n_frames = len(trajectory) if max_frames is None else min(max_frames, len(trajectory))
    for f in range(n_frames):
        pose = trajectory[f]

        t0 = time.perf_counter()
        temporal_vecs = live.retrieve(Layer.TEMPORAL, pose, raster_cfg.rng, strict_3x3=strict_3x3)
        static_vecs = live.retrieve(Layer.STATIC, pose, raster_cfg.rng, strict_3x3=strict_3x3)
        t1 = time.perf_counter()

        t_avail = len(temporal_vecs) > 0
        m_avail = len(static_vecs) > 0
        if mode_ratio is None:
            mode = select_inference_mode(t_avail, m_avail)
        else:
            mode = sample_mode(mode_ratio, rng)

        heat = assemble_from_vectors(mode, temporal_vecs, static_vecs, raster_cfg, band)
        t2 = time.perf_counter()

        gt_in_range = gt_map.retrieve(Layer.STATIC, pose, raster_cfg.rng, strict_3x3=True)
        preds = replay_predict(gt_in_range, replay, rng, id_start=1_000_000 + f * 10_000)

        t3 = time.perf_counter()
        live.refresh(preds, pose, refresh_cfg)
        t4 = time.perf_counter()

        prior_map = None
        if eval_every and f % eval_every == 0 and gt_in_range:
            prior_vecs = [(v, v.confidence) for v in temporal_vecs + static_vecs]
            prior_map = evaluate(prior_vecs, gt_in_range).map_score

        report.frames.append(
            {
                "frame": f,
                "mode": mode.value,
                "temporal_available": t_avail,
                "map_available": m_avail,
                "n_temporal": len(temporal_vecs),
                "n_static": len(static_vecs),
                "n_predictions": len(preds),
                "prior_map": prior_map,
            }
        )
        report.latencies_ms["retrieval"].append((t1 - t0) * 1e3)
        report.latencies_ms["rasterization"].append((t2 - t1) * 1e3)
        report.latencies_ms["refreshment"].append((t4 - t3) * 1e3)
        del heat
    return report


def write_trajectory_file(path, trajectory: Sequence[EgoPose]) -> None:
    """One pose per line: ``e,n,z,yaw`` with round-trip float repr, so
    scenario files (world vectors + trajectory) can be kept as regression
    corpora alongside the vector interchange format."""
    with open(path, "w") as fh:
        fh.write("# e,n,z,yaw\n")
        for p in trajectory:
            fh.write(f"{p.utm_e!r},{p.utm_n!r},{p.z!r},{p.yaw!r}\n")


def read_trajectory_file(path) -> list[EgoPose]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected e,n,z,yaw")
            out.append(EgoPose(*(float(x) for x in parts)))
    return out


def scatter_vectors(
    n: int, rng: np.random.Generator, density_per_tile: float = 25.0, tile_side: float = 60.0
) -> list[MapVector]:
    """Random short polylines at roughly constant spatial density, used by
    the latency benchmark to scale worlds from 10^2 to 10^5 vectors."""
    area_side = math.sqrt(max(n, 1) / density_per_tile) * tile_side
    out = []
    for k in range(n):
        x0 = rng.uniform(0, area_side)
        y0 = rng.uniform(0, area_side)
        ang = rng.uniform(0, 2 * math.pi)
        length = rng.uniform(5.0, 30.0)
        n_pts = int(rng.integers(2, 6))
        ts = np.linspace(0.0, 1.0, n_pts)
        pts = np.stack(
            [
                x0 + ts * length * math.cos(ang),
                y0 + ts * length * math.sin(ang),
                np.zeros(n_pts),
            ],
            axis=1,
        )
        out.append(MapVector(k + 1, MapClass(int(rng.integers(0, 3))), pts, 1.0, Layer.STATIC))
    return out


def bench(
    sizes: Sequence[int] = (100, 1_000, 10_000),
    frames: int = 100,
    seed: int = 0,
    raster_cfg: RasterConfig = RasterConfig(),
) -> list[dict]:
    """Median per-stage latency at several world sizes.

    Each row reports tile-indexed retrieval, rasterization and refreshment
    per frame, plus the exhaustive-scan retrieval baseline for comparison.
    """
    rows = []
    for n in sizes:
        rng = np.random.default_rng(seed)
        tile_side = raster_cfg.rng.long_side
        world = scatter_vectors(n, rng, tile_side=tile_side)
        gmap = GlobalMap(tile_side)
        gmap.ingest_static(world)
        area_side = math.sqrt(max(n, 1) / 25.0) * tile_side
        replay = ReplaySpec(seed=seed, detector_noise_sigma=0.1, detector_dropout=0.0)

        lat = {"retrieval": [], "rasterization": [], "refreshment": [], "scan_baseline": []}
        for f in range(frames):
            t = f / max(frames - 1, 1)
            pose = EgoPose(t * area_side, t * area_side, 0.0, rng.uniform(-math.pi, math.pi))

            t0 = time.perf_counter()
            static_vecs = gmap.retrieve(Layer.STATIC, pose, raster_cfg.rng)
            temporal_vecs = gmap.retrieve(Layer.TEMPORAL, pose, raster_cfg.rng)
            t1 = time.perf_counter()
            assemble_from_vectors(Mode.TEMPORAL_MAP_FUSION, temporal_vecs, static_vecs, raster_cfg)
            t2 = time.perf_counter()
            preds = replay_predict(static_vecs, replay, rng, id_start=10_000_000 + f * 10_000)
            t3 = time.perf_counter()
            gmap.refresh(preds, pose, RefreshConfig(tau=0.5))
            t4 = time.perf_counter()
            gmap.retrieve_all_tiles(Layer.STATIC, pose, raster_cfg.rng)
            t5 = time.perf_counter()

            lat["retrieval"].append((t1 - t0) * 1e3)
            lat["rasterization"].append((t2 - t1) * 1e3)
            lat["refreshment"].append((t4 - t3) * 1e3)
            lat["scan_baseline"].append((t5 - t4) * 1e3)
        rows.append(
            {
                "n_vectors": n,
                "retrieval_ms": median(lat["retrieval"]),
                "rasterization_ms": median(lat["rasterization"]),
                "refreshment_ms": median(lat["refreshment"]),
                "scan_baseline_ms": median(lat["scan_baseline"]),
            }
        )
    return rows


def check_latency_budget(rows: Sequence[dict]) -> list[str]:
    """Budget violations on the 10^4-vector row (empty list = within budget):
    retrieval + refreshment below 10 ms and rasterization below 30 ms."""
    problems = []
    for row in rows:
        if row["n_vectors"] == 10_000:
            rr = row["retrieval_ms"] + row["refreshment_ms"]
            if rr >= 10.0:
                problems.append(f"retrieval+refreshment {rr:.2f} ms >= 10 ms")
            if row["rasterization_ms"] >= 30.0:
                problems.append(f"rasterization {row['rasterization_ms']:.2f} ms >= 30 ms")
    return problems
