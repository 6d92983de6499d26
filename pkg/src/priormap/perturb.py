"""Seeded corruption operators for vectorized maps.

Six operators model real-world map defects: three instance-level
(displacement, addition, deletion) and three frame-level (displacement,
rotation, scaling). All are pure functions of (input, spec, rng state), so a
fixed seed reproduces a corruption bit-identically. Unselected instances are
passed through untouched (same objects).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .geometry import PerceptionRange
from .tilemap import MapVector

OPERATOR_TAGS = (
    "inst_displacement",
    "inst_addition",
    "inst_deletion",
    "frame_displacement",
    "frame_rotation",
    "frame_scaling",
)


@dataclass(frozen=True)
class PerturbationSpec:
    """Distribution parameters for the corruption operators.

    Ranges are half-widths: instance displacement magnitude is drawn from
    U[0, inst_disp_range] with a uniformly random in-plane direction; frame
    displacement draws each in-plane component from U[-r, r]; rotation draws
    degrees from U[-frame_rot_range, +frame_rot_range]; scale from
    U[frame_scale_lo, frame_scale_hi].
    """

    seed: int = 0
    inst_disp_range: float = 6.0
    inst_select_prob: float = 0.5
    add_max: int = 10
    del_max: int = 10
    frame_disp_range: float = 6.0
    frame_rot_range: float = 15.0
    frame_scale_lo: float = 0.8
    frame_scale_hi: float = 1.2

    def __post_init__(self):
        if min(self.inst_disp_range, self.frame_disp_range, self.frame_rot_range) < 0:
            raise ConfigError("perturbation ranges must be >= 0")
        if self.add_max < 0 or self.del_max < 0:
            raise ConfigError("add_max/del_max must be >= 0")
        if not (0.0 <= self.inst_select_prob <= 1.0):
            raise ConfigError("inst_select_prob outside [0, 1]")
        if not (0.0 < self.frame_scale_lo <= self.frame_scale_hi):
            raise ConfigError("scale range must satisfy 0 < lo <= hi")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class ElementPool:
    """Template elements sampled by instance addition."""

    templates: tuple[MapVector, ...]

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(self.templates))

    def __len__(self) -> int:
        return len(self.templates)


def _translated(vec: MapVector, de: float, dn: float) -> MapVector:
    if de == 0.0 and dn == 0.0:
        return vec
    geo = vec.geometry.copy()
    geo[:, 0] += de
    geo[:, 1] += dn
    return vec.with_geometry(geo)


def instance_displacement(
    vectors: Sequence[MapVector], spec: PerturbationSpec, rng: np.random.Generator
) -> list[MapVector]:
    """Rigidly shift an independent Bernoulli subset of instances.

    Each selected instance moves by magnitude U[0, inst_disp_range] along a
    uniformly random in-plane direction (mean displacement = range / 2).
    """
    n = len(vectors)
    selected = rng.random(n) < spec.inst_select_prob
    mags = rng.uniform(0.0, spec.inst_disp_range, n)
    angs = rng.uniform(0.0, 2.0 * math.pi, n)
    out = []
    for k, vec in enumerate(vectors):
        if selected[k]:
            out.append(_translated(vec, mags[k] * math.cos(angs[k]), mags[k] * math.sin(angs[k])))
        else:
            out.append(vec)
    return out


def instance_addition(
    vectors: Sequence[MapVector],
    pool: ElementPool,
    spec: PerturbationSpec,
    rng: np.random.Generator,
    rect: PerceptionRange = PerceptionRange(),
) -> list[MapVector]:
    """Append n ~ U{0..add_max} pool templates, re-centered at uniformly
    random positions inside the perception rectangle (shape preserved).
    Added elements get fresh ids above every existing one."""
    n = int(rng.integers(0, spec.add_max + 1))
    if n == 0:
        return list(vectors)
    if len(pool) == 0:
        raise ConfigError("element pool is empty but addition requested")
    next_id = max((v.vec_id for v in vectors), default=0) + 1
    out = list(vectors)
    for k in range(n):
        tpl = pool.templates[int(rng.integers(0, len(pool)))]
        target_e = rng.uniform(-rect.rear, rect.front)
        target_n = rng.uniform(-rect.right, rect.left)
        centroid = tpl.geometry[:, :2].mean(axis=0)
        geo = tpl.geometry.copy()
        geo[:, 0] += target_e - centroid[0]
        geo[:, 1] += target_n - centroid[1]
        out.append(MapVector.trusted(next_id + k, tpl.cls, geo, tpl.confidence, tpl.layer))
    return out


def instance_deletion(
    vectors: Sequence[MapVector], spec: PerturbationSpec, rng: np.random.Generator
) -> list[MapVector]:
    """Remove n ~ U{0..min(del_max, count)} distinct uniformly chosen
    instances; survivors keep order and identity."""
    count = len(vectors)
    hi = min(spec.del_max, count)
    n = int(rng.integers(0, hi + 1))
    if n == 0:
        return list(vectors)
    doomed = set(rng.choice(count, size=n, replace=False).tolist())
    return [v for k, v in enumerate(vectors) if k not in doomed]


def frame_displacement(
    vectors: Sequence[MapVector], spec: PerturbationSpec, rng: np.random.Generator
) -> list[MapVector]:
    """One rigid translation for the whole frame, each in-plane component
    drawn from U[-frame_disp_range, +frame_disp_range]."""
    r = spec.frame_disp_range
    de = rng.uniform(-r, r)
    dn = rng.uniform(-r, r)
    return [_translated(v, de, dn) for v in vectors]


def frame_rotation(
    vectors: Sequence[MapVector], spec: PerturbationSpec, rng: np.random.Generator
) -> list[MapVector]:
    """Rotate every vector about the ego origin by a single angle drawn from
    U[-frame_rot_range, +frame_rot_range] degrees; z unchanged."""
    r = math.radians(spec.frame_rot_range)
    theta = rng.uniform(-r, r)
    if theta == 0.0:
        return list(vectors)
    c, s = math.cos(theta), math.sin(theta)
    out = []
    for v in vectors:
        geo = v.geometry.copy()
        e, n = geo[:, 0].copy(), geo[:, 1].copy()
        geo[:, 0] = e * c - n * s
        geo[:, 1] = e * s + n * c
        out.append(v.with_geometry(geo))
    return out


def frame_scaling(
    vectors: Sequence[MapVector], spec: PerturbationSpec, rng: np.random.Generator
) -> list[MapVector]:
    """Scale all in-plane coordinates about the ego origin by a single
    s ~ U[frame_scale_lo, frame_scale_hi]; z unchanged."""
    s = rng.uniform(spec.frame_scale_lo, spec.frame_scale_hi)
    if s == 1.0:
        return list(vectors)
    out = []
    for v in vectors:
        geo = v.geometry.copy()
        geo[:, :2] *= s
        out.append(v.with_geometry(geo))
    return out


def apply(
    vectors: Sequence[MapVector],
    pool: ElementPool | None,
    spec: PerturbationSpec,
    which: Iterable[str],
    rng: np.random.Generator,
    rect: PerceptionRange = PerceptionRange(),
) -> list[MapVector]:
    """Apply the selected operators in the fixed canonical order: instance
    displacement, addition, deletion, then frame displacement, rotation,
    scaling. Unknown tags raise ConfigError."""
    tags = set(which)
    unknown = tags - set(OPERATOR_TAGS)
    if unknown:
        raise ConfigError(f"unknown perturbation tags: {sorted(unknown)}")
    out = list(vectors)
    if "inst_displacement" in tags:
        out = instance_displacement(out, spec, rng)
    if "inst_addition" in tags:
        out = instance_addition(out, pool if pool is not None else ElementPool(()), spec, rng, rect)
    if "inst_deletion" in tags:
        out = instance_deletion(out, spec, rng)
    if "frame_displacement" in tags:
        out = frame_displacement(out, spec, rng)
    if "frame_rotation" in tags:
        out = frame_rotation(out, spec, rng)
    if "frame_scaling" in tags:
        out = frame_scaling(out, spec, rng)
    return out


def bounding_rect(vectors: Sequence[MapVector], margin: float = 1.0) -> PerceptionRange:
    """Origin-anchored rectangle covering every vector, used to re-center
    added elements when corrupting a whole global map rather than one
    ego-frame scene."""
    if not vectors:
        return PerceptionRange()
    lo_e = min(float(v.geometry[:, 0].min()) for v in vectors)
    hi_e = max(float(v.geometry[:, 0].max()) for v in vectors)
    lo_n = min(float(v.geometry[:, 1].min()) for v in vectors)
    hi_n = max(float(v.geometry[:, 1].max()) for v in vectors)
    return PerceptionRange(
        front=max(hi_e, margin),
        rear=max(-lo_e, margin),
        left=max(hi_n, margin),
        right=max(-lo_n, margin),
    )


# -- plain-text spec files ---------------------------------------------------
#
# key=value lines, '#' comments. Keys match the PerturbationSpec field names.


def write_spec_file(path, spec: PerturbationSpec) -> None:
    with open(path, "w") as fh:
        fh.write("# perturbation spec (key=value)\n")
        for name in spec.__dataclass_fields__:
            fh.write(f"{name}={getattr(spec, name)!r}\n")


def read_spec_file(path) -> PerturbationSpec:
    fields = PerturbationSpec.__dataclass_fields__
    kwargs = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in fields:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            typ = int if key in ("seed", "add_max", "del_max") else float
            try:
                kwargs[key] = typ(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return PerturbationSpec(**kwargs)
