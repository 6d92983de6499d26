"""Tile-indexed global map store: ingesting, refreshing, retrieving, saving.

Walks through the storage layer with a handful of hand-placed vectors:
floor-division tile indexing, the half-tile adjacency rule, confidence-gated
refreshment of detector predictions, ego-centric retrieval, and the binary
map container round trip.
"""

from pathlib import Path

import numpy as np

from priormap import (
    EgoPose,
    GlobalMap,
    Layer,
    MapClass,
    MapVector,
    RefreshConfig,
    adjacent_tiles,
    tile_index,
)

OUT = Path(__file__).parent / "demo_out"
OUT.mkdir(exist_ok=True)

# ----------------------------------------------------------------------------
# Tile indexing: the plane is cut into 60 m squares by floor division, so
# negative coordinates tile uniformly too.
# ----------------------------------------------------------------------------
print("tile of (10, 10):     ", tile_index(10.0, 10.0, 60.0))
print("tile of (-1, 5):      ", tile_index(-1.0, 5.0, 60.0))
print("tile of (123456.7, 654321.9):", tile_index(123456.7, 654321.9, 60.0))

# Adjacency: the ego's tile plus the neighbors on the nearer side of each
# axis. 1, 2 or 4 tiles depending on where the ego sits inside its tile.
print("\nadjacent @ (10, 10):", sorted(adjacent_tiles(10.0, 10.0, 60.0)))
print("adjacent @ (50, 10):", sorted(adjacent_tiles(50.0, 10.0, 60.0)))
print("adjacent @ (30, 30):", sorted(adjacent_tiles(30.0, 30.0, 60.0)), "(dead center)")

# ----------------------------------------------------------------------------
# A small static map: one divider spanning a tile boundary, one crossing.
# The spanning divider is registered under both tiles it overlaps but
# retrieval returns it exactly once.
# ----------------------------------------------------------------------------
gmap = GlobalMap(tile_side=60.0)
gmap.ingest_static([
    MapVector(1, MapClass.DIVIDER, [[40.0, 10.0, 0.0], [80.0, 10.0, 0.0]]),
    MapVector(2, MapClass.PED_CROSSING, [[55.0, 5.0, 0.0], [55.0, 15.0, 0.0]]),
])
print("\nstatic tiles after ingest:", sorted(gmap.tiles(Layer.STATIC)))

pose = EgoPose(utm_e=50.0, utm_n=10.0, z=0.0, yaw=0.0)
for vec in gmap.retrieve(Layer.STATIC, pose):
    print(f"  retrieved id={vec.vec_id} {vec.cls.name} head={vec.geometry[0]}")

# ----------------------------------------------------------------------------
# Refreshment: detector predictions live in the ego frame; anything above
# the confidence gate is transformed to UTM and stored under the ego's tile.
# ----------------------------------------------------------------------------
predictions = [
    MapVector(100, MapClass.BOUNDARY, [[5.0, -2.0, 0.0], [15.0, -2.0, 0.0]], confidence=0.92),
    MapVector(101, MapClass.BOUNDARY, [[5.0, 2.0, 0.0], [15.0, 2.0, 0.0]], confidence=0.35),
]
gmap.refresh(predictions, pose, RefreshConfig(tau=0.8))
kept = gmap.layer_vectors(Layer.TEMPORAL)
print(f"\nrefresh kept {len(kept)} of {len(predictions)} predictions (tau=0.8)")
print("  stored in UTM:", kept[0].geometry[0], "->", kept[0].geometry[-1])

# ----------------------------------------------------------------------------
# Persistence: the container round-trips bit-identically.
# ----------------------------------------------------------------------------
path = OUT / "demo_map.uppm"
gmap.save(path)
loaded = GlobalMap.load(path)
print(f"\nsaved {path.stat().st_size} bytes; round-trip equal: {loaded.equals(gmap)}")
