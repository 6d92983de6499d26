"""Command-line surface for batch experiments.

Subcommands: ingest, perturb, retrieve, rasterize, assemble, sim, eval,
bench. Usage errors exit with status 2 and name the offending flag; runtime
failures exit with status 1. When the PRIORMAP_OUT environment variable is
set, relative output paths are placed under that directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .evaluation import DEFAULT_THRESHOLDS, evaluate
from .geometry import EgoPose, PerceptionRange
from .perturb import (
    OPERATOR_TAGS,
    ElementPool,
    PerturbationSpec,
    apply as apply_perturbations,
    bounding_rect,
    read_spec_file,
)
from .priors import (
    Mode,
    ModeRatio,
    RasterConfig,
    assemble_priors,
    rasterize,
    select_inference_mode,
    write_heatmap,
    write_pgm,
)
from .sim import ReplaySpec, WorldSpec, bench, check_latency_budget, generate_world, run_episode
from .tilemap import (
    CLASS_NAMES,
    GlobalMap,
    Layer,
    RefreshConfig,
    read_vector_file,
    write_vector_file,
)


def _out_path(path: str) -> Path:
    base = os.environ.get("PRIORMAP_OUT")
    p = Path(path)
    if base and not p.is_absolute():
        out = Path(base) / p
    else:
        out = p
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _parse_pose(text: str) -> EgoPose:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise ConfigError("--pose needs E,N,Z,YAW")
    return EgoPose(*parts)


def _parse_range(text: str) -> PerceptionRange:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise ConfigError("--range needs FRONT,REAR,LEFT,RIGHT")
    return PerceptionRange(*parts)


def _parse_ratio(text: str) -> ModeRatio:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ConfigError("--ratio needs N,T,F")
    return ModeRatio(*parts)


def _add_range_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--range", default="30,30,15,15", metavar="F,R,L,Rt",
                   help="perception rectangle extents front,rear,left,right in meters")
    p.add_argument("--cell", type=float, default=0.3, help="BEV grid cell size in meters")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="priormap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a global map file from a vector map file")
    p.add_argument("--vectors", required=True, help="input vector map file (one record per line)")
    p.add_argument("--tile-side", type=float, default=60.0, help="tile side length in meters")
    p.add_argument("--out", required=True, help="output global map file")

    p = sub.add_parser("perturb", help="corrupt the static layer of a global map")
    p.add_argument("--map", required=True, help="input global map file")
    p.add_argument("--spec", help="perturbation spec file (key=value)")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--which", default="inst_displacement",
                   help="comma-separated operator tags, default applies instance "
                        f"displacement in isolation; tags: {', '.join(OPERATOR_TAGS)}")
    p.add_argument("--pool", help="vector file of addition templates "
                                  "(default: the map's own static vectors)")
    p.add_argument("--out", required=True, help="output global map file")
    p.add_argument("--plot", help="before/after overlay image (default OUT.png)")

    p = sub.add_parser("retrieve", help="query vectors around a pose, ego frame")
    p.add_argument("--map", required=True, help="global map file")
    p.add_argument("--pose", required=True, metavar="E,N,Z,YAW", help="ego pose, yaw in radians")
    p.add_argument("--layer", choices=["temporal", "static"], default="static")
    p.add_argument("--strict-3x3", action="store_true",
                   help="query the full 3x3 tile neighborhood")
    _add_range_flags(p)
    p.add_argument("--out", help="write retrieved vectors to this file instead of stdout")

    p = sub.add_parser("rasterize", help="draw ego-frame vectors into heatmap files")
    p.add_argument("--vectors", required=True, help="ego-frame vector file")
    _add_range_flags(p)
    p.add_argument("--halfwidth", type=int, default=0, help="stroke half-width in cells")
    p.add_argument("--out", required=True,
                   help="output basename: writes OUT.bevh plus one OUT.<class>.pgm per channel")

    p = sub.add_parser("assemble", help="retrieve and rasterize prior heatmaps for a pose")
    p.add_argument("--map", required=True, help="global map file")
    p.add_argument("--pose", required=True, metavar="E,N,Z,YAW")
    p.add_argument("--mode", default="auto",
                   choices=["auto", "non_prior", "temporal_prior", "temporal_map_fusion"],
                   help="auto switches on layer availability")
    p.add_argument("--band", type=float, help="vertical filter half-band in meters (off by default)")
    p.add_argument("--strict-3x3", action="store_true")
    _add_range_flags(p)
    p.add_argument("--out-ht", required=True, help="temporal heatmap container file")
    p.add_argument("--out-hm", required=True, help="map heatmap container file")

    p = sub.add_parser("sim", help="replay a deterministic synthetic episode")
    p.add_argument("--spec", help="episode spec JSON (world/replay/refresh/perturb sections)")
    p.add_argument("--seed", type=int, help="override world and replay seeds")
    p.add_argument("--frames", type=int, help="cap the number of frames")
    p.add_argument("--coverage", type=float, help="fraction of tiles holding static map data")
    p.add_argument("--tau", type=float, help="refreshment confidence threshold")
    p.add_argument("--ratio", metavar="N,T,F",
                   help="sample modes with these probabilities instead of availability switching")
    _add_range_flags(p)
    p.add_argument("--strict-3x3", action="store_true")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
    p.add_argument("--out", required=True, help="output RunReport JSON")

    p = sub.add_parser("eval", help="Chamfer-distance AP of predictions against ground truth")
    p.add_argument("--pred", required=True, help="prediction vector file (confidence = score)")
    p.add_argument("--gt", required=True, help="ground-truth vector file")
    p.add_argument("--thresholds", default=",".join(str(t) for t in DEFAULT_THRESHOLDS),
                   help="comma-separated Chamfer thresholds in meters")
    p.add_argument("--use-3d", action="store_true", help="include elevation in distances")
    p.add_argument("--out", help="write the report as JSON")

    p = sub.add_parser("bench", help="per-stage latency at several world sizes")
    p.add_argument("--sizes", default="100,1000,10000", help="comma-separated world sizes")
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    return parser


def cmd_ingest(args) -> int:
    vectors = read_vector_file(args.vectors)
    gmap = GlobalMap(args.tile_side)
    gmap.ingest_static(vectors)
    out = _out_path(args.out)
    gmap.save(out)
    print(f"ingested {len(vectors)} vectors into {len(gmap.tiles(Layer.STATIC))} tiles -> {out}")
    return 0


def _plot_before_after(before, after, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 8))
    for v in before:
        ax.plot(v.geometry[:, 0], v.geometry[:, 1], "-", color="green", linewidth=1.0)
    for v in after:
        ax.plot(v.geometry[:, 0], v.geometry[:, 1], "--", color="orange", linewidth=1.0)
    ax.plot([], [], "-", color="green", label="original")
    ax.plot([], [], "--", color="orange", label="corrupted")
    ax.set_aspect("equal")
    ax.set_xlabel("east [m]")
    ax.set_ylabel("north [m]")
    ax.legend(loc="upper right")
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def cmd_perturb(args) -> int:
    gmap = GlobalMap.load(args.map)
    spec = read_spec_file(args.spec) if args.spec else PerturbationSpec()
    if args.seed is not None:
        spec = PerturbationSpec(**{**{f: getattr(spec, f) for f in spec.__dataclass_fields__},
                                   "seed": args.seed})
    tags = [t.strip() for t in args.which.split(",") if t.strip()]
    before = gmap.layer_vectors(Layer.STATIC)
    pool_vecs = read_vector_file(args.pool) if args.pool else before
    after = apply_perturbations(
        before, ElementPool(tuple(pool_vecs)), spec, tags, spec.rng(), bounding_rect(before)
    )

    out_map = GlobalMap(gmap.tile_side)
    out_map.ingest_static(after)
    for tile, vecs in gmap.tiles(Layer.TEMPORAL).items():
        for v in vecs:
            out_map._register(Layer.TEMPORAL, tile, v)
    out = _out_path(args.out)
    out_map.save(out)
    plot = _out_path(args.plot) if args.plot else out.with_suffix(out.suffix + ".png")
    _plot_before_after(before, after, plot)
    print(f"applied {','.join(tags)} with seed {spec.seed}: "
          f"{len(before)} -> {len(after)} vectors; map {out}, plot {plot}")
    return 0


def cmd_retrieve(args) -> int:
    gmap = GlobalMap.load(args.map)
    pose = _parse_pose(args.pose)
    rng = _parse_range(args.range)
    layer = Layer.TEMPORAL if args.layer == "temporal" else Layer.STATIC
    vecs = gmap.retrieve(layer, pose, rng, strict_3x3=args.strict_3x3)
    if args.out:
        out = _out_path(args.out)
        write_vector_file(out, vecs)
        print(f"retrieved {len(vecs)} vectors -> {out}")
    else:
        for v in vecs:
            coords = ",".join(repr(float(x)) for x in v.geometry.ravel())
            print(f"{v.vec_id},{CLASS_NAMES[v.cls]},{v.confidence!r},{coords}")
    return 0


def _raster_cfg(args) -> RasterConfig:
    return RasterConfig(cell=args.cell, rng=_parse_range(args.range),
                        line_halfwidth=getattr(args, "halfwidth", 0))


def cmd_rasterize(args) -> int:
    vectors = read_vector_file(args.vectors)
    cfg = _raster_cfg(args)
    grid = rasterize(vectors, cfg)
    out = _out_path(args.out)
    write_heatmap(out.with_suffix(".bevh"), grid)
    for cls, name in CLASS_NAMES.items():
        write_pgm(out.parent / f"{out.name}.{name}.pgm", grid[int(cls)])
    print(f"rasterized {len(vectors)} vectors into {grid.shape} grid -> {out}.bevh")
    return 0


def cmd_assemble(args) -> int:
    gmap = GlobalMap.load(args.map)
    pose = _parse_pose(args.pose)
    cfg = _raster_cfg(args)
    if args.mode == "auto":
        t_avail = len(gmap.retrieve(Layer.TEMPORAL, pose, cfg.rng, strict_3x3=args.strict_3x3)) > 0
        m_avail = len(gmap.retrieve(Layer.STATIC, pose, cfg.rng, strict_3x3=args.strict_3x3)) > 0
        mode = select_inference_mode(t_avail, m_avail)
    else:
        mode = Mode(args.mode)
    heat = assemble_priors(mode, gmap, pose, cfg, band=args.band, strict_3x3=args.strict_3x3)
    ht_path = _out_path(args.out_ht)
    hm_path = _out_path(args.out_hm)
    write_heatmap(ht_path, heat.h_t)
    write_heatmap(hm_path, heat.h_m)
    print(f"mode {mode.value}: H_t -> {ht_path}, H_m -> {hm_path}")
    return 0


def cmd_sim(args) -> int:
    spec = {}
    if args.spec:
        with open(args.spec) as fh:
            spec = json.load(fh)
    world_kw = dict(spec.get("world", {}))
    replay_kw = dict(spec.get("replay", {}))
    if args.seed is not None:
        world_kw["seed"] = args.seed
        replay_kw["seed"] = args.seed
    if args.coverage is not None:
        replay_kw["map_coverage"] = args.coverage
    world_spec = WorldSpec(**world_kw)
    replay = ReplaySpec(**replay_kw)
    refresh_cfg = RefreshConfig(args.tau if args.tau is not None
                                else spec.get("refresh", {}).get("tau", 0.8))
    raster_cfg = _raster_cfg(args)
    ratio = _parse_ratio(args.ratio) if args.ratio else None
    pspec = PerturbationSpec(**spec["perturb"]) if "perturb" in spec else None
    tags = spec.get("perturb_tags", [])

    world, traj = generate_world(world_spec, pose_step=spec.get("pose_step", 2.0))
    report = run_episode(
        world,
        traj,
        replay=replay,
        refresh_cfg=refresh_cfg,
        mode_ratio=ratio,
        raster_cfg=raster_cfg,
        perturb_spec=pspec,
        perturb_tags=tags,
        band=spec.get("band"),
        strict_3x3=args.strict_3x3,
        eval_every=spec.get("eval_every", 1),
        max_frames=args.frames if args.frames is not None else spec.get("frames"),
    )
    out = _out_path(args.out)
    report.write(out, include_timings=args.timings)
    counts = report.mode_counts()
    lat = report.median_latencies_ms()
    print(f"{len(report.frames)} frames, modes {counts} -> {out}")
    print("median latency ms: "
          + ", ".join(f"{k} {v:.3f}" for k, v in lat.items()))
    return 0


def cmd_eval(args) -> int:
    preds = read_vector_file(args.pred)
    gts = read_vector_file(args.gt)
    thresholds = tuple(float(t) for t in args.thresholds.split(","))
    report = evaluate([(v, v.confidence) for v in preds], gts, thresholds, use_3d=args.use_3d)
    print(report.to_text())
    print(f"mAP {report.map_score:.3f}")
    if args.out:
        out = _out_path(args.out)
        with open(out, "w") as fh:
            json.dump(report.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
    return 0


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = bench(sizes, frames=args.frames, seed=args.seed)
    print(f"{'vectors':>9} {'retrieval':>10} {'raster':>10} {'refresh':>10} {'scan':>10}  (median ms)")
    for row in rows:
        print(f"{row['n_vectors']:>9} {row['retrieval_ms']:>10.3f} {row['rasterization_ms']:>10.3f} "
              f"{row['refreshment_ms']:>10.3f} {row['scan_baseline_ms']:>10.3f}")
    problems = check_latency_budget(rows)
    for msg in problems:
        print(f"budget violation: {msg}")
    return 1 if problems else 0


HANDLERS = {
    "ingest": cmd_ingest,
    "perturb": cmd_perturb,
    "retrieve": cmd_retrieve,
    "rasterize": cmd_rasterize,
    "assemble": cmd_assemble,
    "sim": cmd_sim,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
