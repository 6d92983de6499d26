"""Tri-mode prior assembly into BEV heatmaps.

Builds a small world, accumulates a few frames of temporal predictions, then
assembles the (temporal, map) heatmap pair in each of the three operating
modes. Also shows the vertical filter dropping an overpass, and exports the
heatmaps as raw containers and graymaps. Writes demo_out/priors.png.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from priormap import (
    CLASS_NAMES,
    EgoPose,
    GlobalMap,
    Layer,
    MapClass,
    MapVector,
    Mode,
    RasterConfig,
    RefreshConfig,
    ReplaySpec,
    WorldSpec,
    assemble_priors,
    generate_world,
    replay_predict,
    select_inference_mode,
    vertical_filter,
    write_heatmap,
    write_pgm,
)

OUT = Path(__file__).parent / "demo_out"
OUT.mkdir(exist_ok=True)

cfg = RasterConfig()  # 0.3 m cells over 60 x 30 m -> 3 x 200 x 100
print("grid shape:", cfg.grid_shape)

world, traj = generate_world(WorldSpec(seed=9, blocks=2, block_size=90.0))
gmap = GlobalMap(cfg.rng.long_side)
gmap.ingest_static(world)

# a few frames of detector output populate the temporal layer
import numpy.random as npr

rng = npr.default_rng(0)
replay = ReplaySpec(detector_noise_sigma=0.15, detector_dropout=0.0)
for f, pose in enumerate(traj[:10]):
    gt = gmap.retrieve(Layer.STATIC, pose, cfg.rng, strict_3x3=True)
    preds = replay_predict(gt, replay, rng, id_start=1_000_000 + f * 1_000)
    gmap.refresh(preds, pose, RefreshConfig(tau=0.5))

pose = traj[10]
fig, axes = plt.subplots(3, 2, figsize=(8, 12))
for row, mode in enumerate(Mode):
    heat = assemble_priors(mode, gmap, pose, cfg)
    for col, (name, grid) in enumerate((("temporal", heat.h_t), ("map", heat.h_m))):
        axes[row, col].imshow(grid.max(axis=0), cmap="gray_r", interpolation="nearest")
        axes[row, col].set_title(f"{mode.value}: H_{name[0]} ({int(grid.sum())} cells)")
    print(f"{mode.value:>22}: H_t {int(heat.h_t.sum()):4d} cells, "
          f"H_m {int(heat.h_m.sum()):4d} cells")
fig.tight_layout()
fig.savefig(OUT / "priors.png", dpi=110)
print(f"wrote {OUT / 'priors.png'}")

# inference-time switching follows layer availability
print("\nmode when nothing available: ", select_inference_mode(False, False).value)
print("mode with temporal only:     ", select_inference_mode(True, False).value)
print("mode with both:              ", select_inference_mode(True, True).value)

# vertical filter: an overpass 10 m above the ego is rejected at a 3 m band
street = MapVector(1, MapClass.DIVIDER, [[5.0, 0.0, 0.0], [20.0, 0.0, 0.0]])
overpass = MapVector(2, MapClass.BOUNDARY, [[5.0, 1.0, 10.0], [20.0, 1.0, 10.0]])
kept = vertical_filter([street, overpass], ego_z=0.0, band=3.0)
print(f"\nvertical filter kept {[v.vec_id for v in kept]} of [1, 2] (band 3 m)")

# exports: raw float container plus one graymap per class channel
heat = assemble_priors(Mode.TEMPORAL_MAP_FUSION, gmap, pose, cfg)
write_heatmap(OUT / "h_m.bevh", heat.h_m)
for cls, name in CLASS_NAMES.items():
    write_pgm(OUT / f"h_m.{name}.pgm", heat.h_m[int(cls)])
print(f"wrote {OUT / 'h_m.bevh'} and per-class .pgm files")
