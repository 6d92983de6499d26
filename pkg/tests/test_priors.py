import math

import numpy as np
import pytest

from priormap import (
    ConfigError,
    EgoPose,
    GlobalMap,
    Layer,
    MapClass,
    MapDecodeError,
    MapVector,
    Mode,
    ModeRatio,
    PerceptionRange,
    RasterConfig,
    RefreshConfig,
    assemble_priors,
    rasterize,
    read_heatmap,
    sample_mode,
    select_inference_mode,
    vertical_filter,
    write_heatmap,
    write_pgm,
)
from conftest import point_segment_distance, random_vectors, raster_oracle_cells


def _vec(vid, pts, cls=MapClass.DIVIDER, conf=1.0):
    return MapVector(vid, cls, np.asarray(pts, dtype=float), conf)


# -- mode sampling ----------------------------------------------------------------


def test_mode_ratio_validation():
    with pytest.raises(ConfigError):
        ModeRatio(0.5, 0.5, 0.5)
    with pytest.raises(ConfigError):
        ModeRatio(-0.1, 0.6, 0.5)
    ModeRatio(1.0, 0.0, 0.0)


def test_sample_mode_degenerate():
    rng = np.random.default_rng(0)
    ratio = ModeRatio(1.0, 0.0, 0.0)
    assert all(sample_mode(ratio, rng) is Mode.NON_PRIOR for _ in range(100))


def test_sample_mode_frequencies():
    rng = np.random.default_rng(23)
    ratio = ModeRatio(0.5, 0.3, 0.2)
    counts = {m: 0 for m in Mode}
    n = 100_000
    for _ in range(n):
        counts[sample_mode(ratio, rng)] += 1
    assert abs(counts[Mode.NON_PRIOR] / n - 0.5) < 0.01
    assert abs(counts[Mode.TEMPORAL_PRIOR] / n - 0.3) < 0.01
    assert abs(counts[Mode.TEMPORAL_MAP_FUSION] / n - 0.2) < 0.01


def test_sample_mode_deterministic():
    ratio = ModeRatio()
    a = [sample_mode(ratio, np.random.default_rng(5)) for _ in range(50)]
    b = [sample_mode(ratio, np.random.default_rng(5)) for _ in range(50)]
    assert a == b


def test_select_inference_mode_policy():
    assert select_inference_mode(True, True) is Mode.TEMPORAL_MAP_FUSION
    assert select_inference_mode(True, False) is Mode.TEMPORAL_PRIOR
    assert select_inference_mode(False, False) is Mode.NON_PRIOR
    # map-only degenerate case still runs fusion (empty temporal retrieval)
    assert select_inference_mode(False, True) is Mode.TEMPORAL_MAP_FUSION


# -- vertical filter ---------------------------------------------------------------


def test_vertical_filter_flat_world_identity():
    vecs = [_vec(1, [[0, 0, 5.0], [1, 0, 5.0]])]
    assert vertical_filter(vecs, 5.0, 3.0) == vecs


def test_vertical_filter_drops_overpass():
    street = _vec(1, [[0, 0, 0.0], [10, 0, 0.0]])
    overpass = _vec(2, [[0, 1, 10.0], [10, 1, 10.0]])
    kept = vertical_filter([street, overpass], 0.0, 3.0)
    assert kept == [street]


def test_vertical_filter_infinite_band_identity(rng):
    vecs = random_vectors(rng, 20)
    assert vertical_filter(vecs, 0.0, math.inf) == vecs


def test_vertical_filter_uses_mean_vertex():
    # vertices straddle the band but their mean stays inside
    v = _vec(1, [[0, 0, -4.0], [1, 0, 4.0]])
    assert vertical_filter([v], 0.0, 3.0) == [v]
    with pytest.raises(ConfigError):
        vertical_filter([v], 0.0, 0.0)


# -- rasterization -----------------------------------------------------------------


def test_default_grid_shape():
    cfg = RasterConfig()
    assert cfg.grid_shape == (3, 200, 100)
    assert rasterize([], cfg).shape == (3, 200, 100)


def test_raster_empty_is_zero():
    grid = rasterize([], RasterConfig())
    assert grid.dtype == np.float32
    assert not grid.any()


def test_raster_rejects_non_integral_grid():
    with pytest.raises(ConfigError):
        RasterConfig(cell=0.7)


def test_raster_center_cell():
    # the ego origin lies on the boundary of cell (100, 50); a vanishing
    # vector just on the floor side of it sets exactly the center cell
    cfg = RasterConfig()
    tiny = _vec(1, [[-2e-4, 0, 0], [-1e-4, 0, 0]])
    grid = rasterize([tiny], cfg)
    assert grid[0, 100, 50] == 1.0
    assert grid.sum() == 1.0


def test_raster_orientation_front_is_row_zero():
    cfg = RasterConfig()
    ahead = _vec(1, [[29.8, 0, 0], [29.9, 0, 0]])
    grid = rasterize([ahead], cfg)
    rows = np.nonzero(grid[0].any(axis=1))[0]
    assert rows.max() <= 1
    left = _vec(2, [[0, 14.8, 0], [0, 14.9, 0]])
    grid = rasterize([left], cfg)
    cols = np.nonzero(grid[0].any(axis=0))[0]
    assert cols.max() <= 1


def test_raster_classes_use_own_channels():
    cfg = RasterConfig()
    vecs = [
        _vec(1, [[5, 0, 0], [6, 0, 0]], cls=MapClass.DIVIDER),
        _vec(2, [[0, 5, 0], [0, 6, 0]], cls=MapClass.PED_CROSSING),
        _vec(3, [[-5, 0, 0], [-6, 0, 0]], cls=MapClass.BOUNDARY),
    ]
    grid = rasterize(vecs, cfg)
    for k in range(3):
        assert grid[k].any()
    assert not (grid[0] * grid[1]).any()


def test_raster_binary_entries(rng):
    vecs = random_vectors(rng, 30, area_lo=-30, area_hi=30)
    grid = rasterize(vecs, RasterConfig())
    assert set(np.unique(grid)) <= {0.0, 1.0}


def test_raster_clips_outside(rng):
    vecs = [_vec(1, [[500, 500, 0], [510, 510, 0]])]
    assert not rasterize(vecs, RasterConfig()).any()


def test_raster_conservative_vs_dense_sampling(rng):
    """Dense-sampling oracle cells are a subset of the rasterized cells, and
    every rasterized cell center is within cell*sqrt(2) of some segment."""
    cfg = RasterConfig()
    for trial in range(8):
        vecs = random_vectors(rng, 6, area_lo=-35, area_hi=35, max_pts=4)
        grid = rasterize(vecs, cfg)
        got = {(int(c), int(r), int(col)) for c, r, col in zip(*np.nonzero(grid))}
        oracle = raster_oracle_cells(vecs, cfg, samples_per_seg=10_000)
        missing = oracle - got
        assert not missing, f"trial {trial}: rasterizer missed cells {sorted(missing)[:5]}"
        # soundness: set cells lie near some segment of their class
        for ch, r, col in got:
            center = np.array([r + 0.5, col + 0.5])
            best = math.inf
            for v in vecs:
                if int(v.cls) != ch:
                    continue
                u = (cfg.rng.front - v.geometry[:, 0]) / cfg.cell
                w = (cfg.rng.left - v.geometry[:, 1]) / cfg.cell
                for k in range(len(u) - 1):
                    best = min(best, point_segment_distance(
                        center, np.array([u[k], w[k]]), np.array([u[k + 1], w[k + 1]])))
            assert best <= math.sqrt(2.0), f"cell ({ch},{r},{col}) is {best:.3f} cells from data"


def test_raster_translation_consistency(rng):
    """Shifting the scene by an integer number of cells shifts the grid."""
    cfg = RasterConfig()
    vecs = random_vectors(rng, 8, area_lo=-20, area_hi=20)
    grid = rasterize(vecs, cfg)
    shift_cells = 7
    shifted = [v.with_geometry(v.geometry + np.array([shift_cells * cfg.cell, 0.0, 0.0]))
               for v in vecs]
    grid_shifted = rasterize(shifted, cfg)
    # rows move up by 7 (forward shift), content identical in the overlap
    assert np.array_equal(grid[:, 10:150, :], grid_shifted[:, 10 - 7:150 - 7, :])


def test_raster_halfwidth_dilates():
    cfg = RasterConfig(line_halfwidth=1)
    tiny = _vec(1, [[-2e-4, 0, 0], [-1e-4, 0, 0]])
    grid = rasterize([tiny], cfg)
    assert grid.sum() == 9.0
    assert grid[0, 99:102, 49:52].sum() == 9.0


def test_raster_gridline_aligned_segment(rng):
    # a segment lying exactly on a cell-edge gridline stays on the floor side
    cfg = RasterConfig()
    y = 15.0 - 50 * 0.3  # exactly the boundary between columns 49 and 50
    v = _vec(1, [[0.0, y, 0.0], [3.0, y, 0.0]])
    grid = rasterize([v], cfg)
    cols = np.nonzero(grid[0].any(axis=0))[0]
    assert list(cols) == [50]


# -- assembly ----------------------------------------------------------------------


def _world_map(rng):
    m = GlobalMap(60)
    m.ingest_static(random_vectors(rng, 40, area_lo=-25, area_hi=25))
    m.refresh(
        [v.with_geometry(v.geometry, Layer.TEMPORAL)
         for v in random_vectors(rng, 10, area_lo=-20, area_hi=20, id_start=900)],
        EgoPose(0, 0, 0, 0),
        RefreshConfig(tau=0.0),
    )
    return m


def test_assemble_non_prior_zero(rng):
    m = _world_map(rng)
    heat = assemble_priors(Mode.NON_PRIOR, m, EgoPose(0, 0, 0, 0))
    assert not heat.h_t.any()
    assert not heat.h_m.any()


def test_assemble_temporal_zeroes_map_heatmap(rng):
    m = _world_map(rng)
    heat = assemble_priors(Mode.TEMPORAL_PRIOR, m, EgoPose(0, 0, 0, 0))
    assert heat.h_t.any()
    assert not heat.h_m.any()


def test_assemble_fusion_matches_direct_rasterization(rng):
    m = _world_map(rng)
    pose = EgoPose(2.0, -3.0, 0.0, 0.3)
    cfg = RasterConfig()
    heat = assemble_priors(Mode.TEMPORAL_MAP_FUSION, m, pose, cfg)
    expected = rasterize(m.retrieve(Layer.STATIC, pose, cfg.rng), cfg)
    assert np.array_equal(heat.h_m, expected)
    assert heat.h_t.any()


def test_assemble_vertical_band(rng):
    m = GlobalMap(60)
    m.ingest_static([
        _vec(1, [[5, 0, 0.0], [6, 0, 0.0]]),
        _vec(2, [[5, 1, 20.0], [6, 1, 20.0]]),  # overpass
    ])
    pose = EgoPose(0, 0, 0, 0)
    with_band = assemble_priors(Mode.TEMPORAL_MAP_FUSION, m, pose, band=3.0)
    without = assemble_priors(Mode.TEMPORAL_MAP_FUSION, m, pose)
    assert with_band.h_m.sum() < without.h_m.sum()


def test_assemble_shapes_and_binary(rng):
    m = _world_map(rng)
    heat = assemble_priors(Mode.TEMPORAL_MAP_FUSION, m, EgoPose(0, 0, 0, 0))
    assert heat.h_t.shape == heat.h_m.shape == (3, 200, 100)
    assert set(np.unique(heat.h_t)) <= {0.0, 1.0}
    assert set(np.unique(heat.h_m)) <= {0.0, 1.0}


# -- heatmap files --------------------------------------------------------------------


def test_heatmap_container_roundtrip(tmp_path, rng):
    grid = rasterize(random_vectors(rng, 10, area_lo=-20, area_hi=20), RasterConfig())
    path = tmp_path / "h.bevh"
    write_heatmap(path, grid)
    back = read_heatmap(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, grid)
    assert path.stat().st_size == 16 + grid.size * 4


def test_heatmap_container_errors(tmp_path):
    path = tmp_path / "h.bevh"
    path.write_bytes(b"BEVH" + b"\x00" * 4)
    with pytest.raises(MapDecodeError):
        read_heatmap(path)
    path.write_bytes(b"XXXX" + b"\x00" * 20)
    with pytest.raises(MapDecodeError):
        read_heatmap(path)


def test_pgm_export(tmp_path):
    grid = np.zeros((2, 3), dtype=np.float32)
    grid[1, 2] = 1.0
    path = tmp_path / "ch.pgm"
    write_pgm(path, grid)
    data = path.read_bytes()
    assert data.startswith(b"P5\n3 2\n255\n")
    assert data[-6:] == bytes([0, 0, 0, 0, 0, 255])
