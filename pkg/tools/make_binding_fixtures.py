#!/usr/bin/env python3
"""Generate the cross-language fixtures consumed by the frontend tests.

Writes, under --out (default frontend/test/fixtures/):
  world.uppm            a randomized global map container
  retrieve_cases.json   poses with the expected ego-frame retrieval records
  assemble_cases.json   poses with sha256 digests of the heatmap containers
  heatmaps/case_KKKK.{ht,hm}.bevh   full containers for a subset of cases
  refresh_cases.json    refresh inputs plus expected temporal retrieval
  eval_cases.json       scored scenes with expected AP values
  retrieve_sample.txt   one retrieval written as a vector interchange file

Expected values come straight from the native library, so the TypeScript
port must reproduce them through the file formats alone.
"""

import argparse
import hashlib
import io
import json
import math
import struct
import sys
from pathlib import Path

import numpy as np

from priormap import (
    EgoPose,
    GlobalMap,
    Layer,
    MapClass,
    MapVector,
    Mode,
    PerceptionRange,
    RasterConfig,
    RefreshConfig,
    assemble_priors,
    evaluate,
    write_vector_file,
)

N_CASES = 1000
N_FULL_HEATMAPS = 16
N_REFRESH = 50
N_EVAL = 60


def heatmap_container_bytes(grid) -> bytes:
    arr = np.ascontiguousarray(grid, dtype="<f4")
    return b"BEVH" + struct.pack("<III", *arr.shape) + arr.tobytes()


def build_world(rng, n=3000, extent=600.0):
    vectors = []
    for k in range(n):
        n_pts = int(rng.integers(2, 6))
        start = rng.uniform(-extent, extent, 2)
        ang = rng.uniform(0, 2 * math.pi)
        length = rng.uniform(3.0, 35.0)
        ts = np.linspace(0.0, 1.0, n_pts)
        pts = np.stack([
            start[0] + ts * length * math.cos(ang),
            start[1] + ts * length * math.sin(ang),
            rng.uniform(-2, 2, n_pts),
        ], axis=1)
        vectors.append(MapVector(k + 1, MapClass(int(rng.integers(0, 3))), pts,
                                 float(rng.uniform(0, 1))))
    return vectors


def vec_record(v):
    return {
        "id": v.vec_id,
        "cls": int(v.cls),
        "confidence": v.confidence,
        "points": [[float(x) for x in row] for row in v.geometry],
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent
                                         / "frontend" / "test" / "fixtures"))
    ap.add_argument("--seed", type=int, default=90210)
    args = ap.parse_args()
    out = Path(args.out)
    (out / "heatmaps").mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(args.seed)
    world = build_world(rng)
    gmap = GlobalMap(60.0)
    gmap.ingest_static(world)

    # put something in the temporal layer so fusion exercises both layers
    for k in range(40):
        pose = EgoPose(*rng.uniform(-550, 550, 2), 0.0, float(rng.uniform(-math.pi, math.pi)))
        preds = [
            MapVector(500_000 + k * 100 + i, MapClass(int(rng.integers(0, 3))),
                      np.column_stack([rng.uniform(-25, 25, 3), rng.uniform(-12, 12, 3),
                                       rng.uniform(-1, 1, 3)]),
                      float(rng.uniform(0.5, 1.0)), Layer.TEMPORAL)
            for i in range(5)
        ]
        gmap.refresh(preds, pose, RefreshConfig(tau=0.6))
    gmap.save(out / "world.uppm")

    box = PerceptionRange()
    cfg = RasterConfig()

    retrieve_cases = []
    assemble_cases = []
    for k in range(N_CASES):
        pose = EgoPose(*rng.uniform(-550, 550, 2), float(rng.uniform(-2, 2)),
                       float(rng.uniform(-math.pi, math.pi)))
        pose_rec = {"e": pose.utm_e, "n": pose.utm_n, "z": pose.z, "yaw": pose.yaw}
        got = gmap.retrieve(Layer.STATIC, pose, box)
        retrieve_cases.append({"pose": pose_rec, "expected": [vec_record(v) for v in got]})

        heat = assemble_priors(Mode.TEMPORAL_MAP_FUSION, gmap, pose, cfg)
        ht_bytes = heatmap_container_bytes(heat.h_t)
        hm_bytes = heatmap_container_bytes(heat.h_m)
        assemble_cases.append({
            "pose": pose_rec,
            "ht_sha256": hashlib.sha256(ht_bytes).hexdigest(),
            "hm_sha256": hashlib.sha256(hm_bytes).hexdigest(),
            "ht_cells": int(heat.h_t.sum()),
            "hm_cells": int(heat.h_m.sum()),
        })
        if k < N_FULL_HEATMAPS:
            (out / "heatmaps" / f"case_{k:04d}.ht.bevh").write_bytes(ht_bytes)
            (out / "heatmaps" / f"case_{k:04d}.hm.bevh").write_bytes(hm_bytes)

    refresh_cases = []
    for k in range(N_REFRESH):
        fresh = GlobalMap(60.0)
        pose = EgoPose(*rng.uniform(-200, 200, 2), 0.0, float(rng.uniform(-math.pi, math.pi)))
        tau = float(rng.uniform(0.2, 0.9))
        preds = [
            MapVector(1 + i, MapClass(int(rng.integers(0, 3))),
                      np.column_stack([rng.uniform(-25, 25, 3), rng.uniform(-12, 12, 3),
                                       rng.uniform(-1, 1, 3)]),
                      float(rng.uniform(0, 1)), Layer.TEMPORAL)
            for i in range(8)
        ]
        fresh.refresh(preds, pose, RefreshConfig(tau=tau))
        got = fresh.retrieve(Layer.TEMPORAL, pose, box)
        refresh_cases.append({
            "pose": {"e": pose.utm_e, "n": pose.utm_n, "z": pose.z, "yaw": pose.yaw},
            "tau": tau,
            "predictions": [vec_record(p) for p in preds],
            "expected_retrieve": [vec_record(v) for v in got],
        })

    eval_cases = []
    for k in range(N_EVAL):
        n_gt = int(rng.integers(1, 6))
        gts = build_world(rng, n=n_gt, extent=15.0)
        for g in gts:
            g.cls = MapClass(int(rng.integers(0, 3)))
        preds = []
        for _ in range(int(rng.integers(0, 6))):
            src = gts[int(rng.integers(0, n_gt))]
            noisy = src.with_geometry(src.geometry + rng.normal(0, 0.8, src.geometry.shape))
            preds.append((noisy, float(rng.random())))
        thresholds = (0.5, 1.0, 1.5) if k % 2 == 0 else (1.0, 1.5, 2.0)
        report = evaluate(preds, gts, thresholds)
        eval_cases.append({
            "thresholds": list(thresholds),
            "gts": [vec_record(g) for g in gts],
            "preds": [{**vec_record(p), "score": s} for p, s in preds],
            "expected_map": report.map_score,
            "expected_class_mean": {
                str(int(c)): (ca.mean_ap if ca.defined else None)
                for c, ca in report.per_class.items()
            },
        })

    sample_pose = EgoPose(25.0, -40.0, 0.0, 0.8)
    write_vector_file(out / "retrieve_sample.txt",
                      gmap.retrieve(Layer.STATIC, sample_pose, box))
    (out / "retrieve_sample.json").write_text(json.dumps({
        "pose": {"e": 25.0, "n": -40.0, "z": 0.0, "yaw": 0.8},
    }))

    (out / "retrieve_cases.json").write_text(json.dumps(retrieve_cases))
    (out / "assemble_cases.json").write_text(json.dumps(assemble_cases))
    (out / "refresh_cases.json").write_text(json.dumps(refresh_cases))
    (out / "eval_cases.json").write_text(json.dumps(eval_cases))
    (out / "meta.json").write_text(json.dumps({
        "seed": args.seed, "n_cases": N_CASES, "n_full_heatmaps": N_FULL_HEATMAPS,
        "version": "0.1.0",
    }))
    print(f"fixtures -> {out} ({N_CASES} retrieve/assemble cases, "
          f"{N_REFRESH} refresh, {N_EVAL} eval)")


if __name__ == "__main__":
    main()
