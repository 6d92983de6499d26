import math

import numpy as np
import pytest
from scipy import stats

from priormap import (
    ConfigError,
    ElementPool,
    MapClass,
    MapVector,
    PerceptionRange,
    PerturbationSpec,
    read_spec_file,
    write_spec_file,
)
from priormap.perturb import (
    apply,
    bounding_rect,
    frame_displacement,
    frame_rotation,
    frame_scaling,
    instance_addition,
    instance_deletion,
    instance_displacement,
)
from conftest import random_vectors


def _frame(rng, n=10):
    return random_vectors(rng, n, area_lo=-25, area_hi=25)


def _pairwise(vectors):
    pts = np.concatenate([v.geometry for v in vectors])
    return np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)


# -- instance displacement ------------------------------------------------------


def test_inst_displacement_zero_range_identity(rng):
    frame = _frame(rng)
    spec = PerturbationSpec(inst_disp_range=0.0)
    out = instance_displacement(frame, spec, spec.rng())
    assert all(a is b for a, b in zip(frame, out))


def test_inst_displacement_statistics():
    """Selected fraction ~ 1/2 and mean magnitude ~ 3 m at the default
    U[0, 6] magnitude law, over 1e5 instances."""
    rng = np.random.default_rng(7)
    frame = [
        MapVector(k + 1, MapClass.DIVIDER, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        for k in range(100_000)
    ]
    spec = PerturbationSpec()
    out = instance_displacement(frame, spec, rng)
    deltas = np.array([o.geometry[0, :2] - f.geometry[0, :2] for f, o in zip(frame, out)])
    mags = np.linalg.norm(deltas, axis=1)
    moved = mags > 0
    assert abs(moved.mean() - 0.5) < 0.02
    assert abs(mags[moved].mean() - 3.0) < 0.05


def test_inst_displacement_rigid_per_instance(rng):
    frame = _frame(rng)
    spec = PerturbationSpec(inst_select_prob=1.0)
    out = instance_displacement(frame, spec, spec.rng())
    for f, o in zip(frame, out):
        delta = o.geometry - f.geometry
        # one rigid in-plane translation: every vertex moves identically
        assert np.allclose(delta, delta[0], atol=1e-12)
        assert np.all(delta[:, 2] == 0)
        assert np.linalg.norm(delta[0, :2]) <= spec.inst_disp_range + 1e-12


def test_inst_displacement_unselected_untouched(rng):
    frame = _frame(rng)
    spec = PerturbationSpec(inst_select_prob=0.0)
    out = instance_displacement(frame, spec, spec.rng())
    assert all(a is b for a, b in zip(frame, out))


# -- instance addition ------------------------------------------------------------


def test_addition_zero_max_identity(rng):
    frame = _frame(rng)
    spec = PerturbationSpec(add_max=0)
    out = instance_addition(frame, ElementPool(()), spec, spec.rng())
    assert out == frame


def test_addition_empty_pool_raises():
    spec = PerturbationSpec(add_max=10, seed=3)
    with pytest.raises(ConfigError):
        # seed chosen so the first draw is nonzero
        instance_addition([], ElementPool(()), spec, spec.rng())


def test_addition_mean_count():
    rng = np.random.default_rng(11)
    tiny = MapVector(1, MapClass.DIVIDER, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    pool = ElementPool((tiny,))
    spec = PerturbationSpec(add_max=10)
    counts = [
        len(instance_addition([], pool, spec, rng)) for _ in range(100_000)
    ]
    assert abs(np.mean(counts) - 5.0) < 0.05


def test_addition_congruent_and_inside_rect(rng):
    pool = ElementPool(tuple(random_vectors(rng, 4)))
    spec = PerturbationSpec(add_max=10, seed=5)
    rect = PerceptionRange()
    frame = _frame(rng, 3)
    out = instance_addition(frame, pool, spec, spec.rng(), rect)
    added = out[len(frame):]
    assert len(added) >= 1
    existing_ids = {v.vec_id for v in frame}
    for a in added:
        assert a.vec_id not in existing_ids
        # congruence: same pairwise distances as some template
        match = [t for t in pool.templates if t.geometry.shape == a.geometry.shape
                 and np.allclose(_pairwise([t]), _pairwise([a]), atol=1e-9)]
        assert match
        c = a.geometry[:, :2].mean(axis=0)
        assert -rect.rear <= c[0] <= rect.front
        assert -rect.right <= c[1] <= rect.left


# -- instance deletion -------------------------------------------------------------


def test_deletion_empty_input():
    spec = PerturbationSpec()
    assert instance_deletion([], spec, spec.rng()) == []


def test_deletion_mean_on_ten_element_frames():
    rng = np.random.default_rng(13)
    frame = [
        MapVector(k + 1, MapClass.BOUNDARY, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        for k in range(10)
    ]
    spec = PerturbationSpec(del_max=10)
    deleted = [10 - len(instance_deletion(frame, spec, rng)) for _ in range(100_000)]
    assert abs(np.mean(deleted) - 5.0) < 0.05


def test_deletion_survivors_identical(rng):
    frame = _frame(rng)
    spec = PerturbationSpec(seed=2)
    out = instance_deletion(frame, spec, spec.rng())
    assert len(out) <= len(frame)
    for o in out:
        assert any(o is f for f in frame)
    # order preserved
    kept_ids = [o.vec_id for o in out]
    orig_ids = [f.vec_id for f in frame if f.vec_id in set(kept_ids)]
    assert kept_ids == orig_ids


def test_deletion_bounded_by_count(rng):
    frame = _frame(rng, 3)
    spec = PerturbationSpec(del_max=10)
    for seed in range(50):
        out = instance_deletion(frame, spec, np.random.default_rng(seed))
        assert 0 <= len(out) <= 3


# -- frame operators -----------------------------------------------------------------


def test_frame_displacement_zero_identity(rng):
    frame = _frame(rng)
    spec = PerturbationSpec(frame_disp_range=0.0)
    out = frame_displacement(frame, spec, spec.rng())
    assert all(a is b for a, b in zip(frame, out))


def test_frame_displacement_rigid_and_bounded(rng):
    frame = _frame(rng)
    spec = PerturbationSpec(frame_disp_range=3.0, seed=4)
    out = frame_displacement(frame, spec, spec.rng())
    assert np.allclose(_pairwise(frame), _pairwise(out), atol=1e-9)
    delta = out[0].geometry[0] - frame[0].geometry[0]
    assert abs(delta[0]) <= 3.0 and abs(delta[1]) <= 3.0 and delta[2] == 0
    for f, o in zip(frame[1:], out[1:]):
        assert np.allclose(o.geometry - f.geometry, delta, atol=1e-12)


def test_frame_displacement_offset_statistics():
    rng = np.random.default_rng(17)
    probe = [MapVector(1, MapClass.DIVIDER, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])]
    spec = PerturbationSpec(frame_disp_range=3.0)
    offs = np.array([
        frame_displacement(probe, spec, rng)[0].geometry[0, :2] for _ in range(100_000)
    ])
    assert np.all(np.abs(offs) <= 3.0)
    assert np.all(np.abs(offs.mean(axis=0)) < 0.05)


def test_frame_rotation_hand_value():
    probe = [MapVector(1, MapClass.DIVIDER, [[10.0, 0.0, 0.0], [11.0, 0.0, 0.0]])]

    class FixedRng:
        def uniform(self, lo, hi):
            return math.radians(15.0)

    out = frame_rotation(probe, PerturbationSpec(), FixedRng())
    assert np.allclose(out[0].geometry[0, :2], [9.659, 2.588], atol=1e-3)


def test_frame_rotation_zero_identity(rng):
    frame = _frame(rng)
    spec = PerturbationSpec(frame_rot_range=0.0)
    out = frame_rotation(frame, spec, spec.rng())
    assert all(a is b for a, b in zip(frame, out))


def test_frame_rotation_rigid(rng):
    frame = _frame(rng)
    spec = PerturbationSpec(seed=6)
    out = frame_rotation(frame, spec, spec.rng())
    assert np.allclose(_pairwise(frame), _pairwise(out), atol=1e-9)
    assert all(np.array_equal(f.geometry[:, 2], o.geometry[:, 2]) for f, o in zip(frame, out))


def test_frame_scaling_hand_value():
    probe = [MapVector(1, MapClass.DIVIDER, [[10.0, 5.0, 0.0], [0.0, 0.0, 0.0]])]

    class FixedRng:
        def uniform(self, lo, hi):
            return 1.2

    out = frame_scaling(probe, PerturbationSpec(), FixedRng())
    assert np.allclose(out[0].geometry[0], [12.0, 6.0, 0.0], atol=1e-12)


def test_frame_scaling_scales_distances(rng):
    frame = _frame(rng)
    spec = PerturbationSpec(seed=8)
    r = spec.rng()
    out = frame_scaling(frame, spec, r)
    s = out[0].geometry[0, 0] / frame[0].geometry[0, 0]
    before = _pairwise(frame)
    after = _pairwise(out)
    # in-plane frames here have z spread, so compare in-plane distances
    pts_b = np.concatenate([v.geometry for v in frame])[:, :2]
    pts_a = np.concatenate([v.geometry for v in out])[:, :2]
    db = np.linalg.norm(pts_b[:, None] - pts_b[None, :], axis=-1)
    da = np.linalg.norm(pts_a[:, None] - pts_a[None, :], axis=-1)
    assert np.allclose(da, db * s, atol=1e-9)


def test_rotation_scale_distributions_ks():
    """theta ~ U[-15 deg, 15 deg] and s ~ U[0.8, 1.2] by KS at alpha 0.01."""
    rng = np.random.default_rng(19)
    probe = [MapVector(1, MapClass.DIVIDER, [[10.0, 0.0, 0.0], [20.0, 0.0, 0.0]])]
    spec = PerturbationSpec()
    thetas = np.empty(100_000)
    scales = np.empty(100_000)
    for k in range(100_000):
        rot = frame_rotation(probe, spec, rng)[0].geometry[0]
        thetas[k] = math.degrees(math.atan2(rot[1], rot[0]))
    for k in range(100_000):
        sc = frame_scaling(probe, spec, rng)[0].geometry[0]
        scales[k] = sc[0] / 10.0
    p_theta = stats.kstest(thetas, stats.uniform(loc=-15, scale=30).cdf).pvalue
    p_scale = stats.kstest(scales, stats.uniform(loc=0.8, scale=0.4).cdf).pvalue
    assert p_theta > 0.01
    assert p_scale > 0.01


# -- composition -----------------------------------------------------------------------


def test_apply_empty_tags_identity(rng):
    frame = _frame(rng)
    spec = PerturbationSpec()
    out = apply(frame, None, spec, (), spec.rng())
    assert out == frame


def test_apply_unknown_tag(rng):
    spec = PerturbationSpec()
    with pytest.raises(ConfigError, match="unknown perturbation tags"):
        apply(_frame(rng), None, spec, ("bogus",), spec.rng())


def test_apply_deterministic(rng):
    frame = _frame(rng)
    pool = ElementPool(tuple(random_vectors(rng, 3, id_start=500)))
    spec = PerturbationSpec(seed=42)
    tags = ("inst_displacement", "inst_addition", "inst_deletion",
            "frame_displacement", "frame_rotation", "frame_scaling")
    a = apply(frame, pool, spec, tags, spec.rng())
    b = apply(frame, pool, spec, tags, spec.rng())
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert x.vec_id == y.vec_id
        assert np.array_equal(x.geometry, y.geometry)


def test_apply_seed_sensitivity(rng):
    frame = _frame(rng)
    spec_a = PerturbationSpec(seed=1)
    spec_b = PerturbationSpec(seed=2)
    a = apply(frame, None, spec_a, ("frame_rotation",), spec_a.rng())
    b = apply(frame, None, spec_b, ("frame_rotation",), spec_b.rng())
    assert not np.allclose(a[0].geometry, b[0].geometry)


# -- spec files ---------------------------------------------------------------------------


def test_spec_file_roundtrip(tmp_path):
    spec = PerturbationSpec(seed=9, inst_disp_range=4.5, add_max=3, frame_scale_hi=1.5)
    path = tmp_path / "spec.cfg"
    write_spec_file(path, spec)
    assert read_spec_file(path) == spec


def test_spec_file_unknown_key(tmp_path):
    path = tmp_path / "spec.cfg"
    path.write_text("wibble=1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        read_spec_file(path)


def test_spec_validation():
    with pytest.raises(ConfigError):
        PerturbationSpec(inst_disp_range=-1)
    with pytest.raises(ConfigError):
        PerturbationSpec(frame_scale_lo=0.0)
    with pytest.raises(ConfigError):
        PerturbationSpec(inst_select_prob=1.5)


def test_bounding_rect(rng):
    vecs = random_vectors(rng, 10)
    rect = bounding_rect(vecs)
    pts = np.concatenate([v.geometry for v in vecs])
    assert rect.front >= pts[:, 0].max()
    assert -rect.rear <= pts[:, 0].min()
    assert rect.left >= pts[:, 1].max()
    assert -rect.right <= pts[:, 1].min()
