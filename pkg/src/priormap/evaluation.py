"""Chamfer-distance average precision over the three map classes.

Matching convention (normative for this package): predictions are processed
in descending score order and each greedily takes the nearest unmatched
ground truth if their Chamfer distance is strictly below the threshold.
Precision/recall points are interpolated with the right-max rule. Both
polylines are resampled to 20 points before distance computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import resample_polyline
from .tilemap import CLASS_NAMES, MapClass, MapVector

DEFAULT_THRESHOLDS = (0.5, 1.0, 1.5)
EXTENDED_THRESHOLDS = (1.0, 1.5, 2.0)


def chamfer_distance(a: np.ndarray, b: np.ndarray, n_pts: int = 20, use_3d: bool = False) -> float:
    """Symmetric mean nearest-neighbor distance between two resampled
    polylines. In-plane by default; ``use_3d`` includes elevation."""
    pa = resample_polyline(a, n_pts)
    pb = resample_polyline(b, n_pts)
    dims = 3 if use_3d else 2
    d = cdist(pa[:, :dims], pb[:, :dims])
    return 0.5 * (float(d.min(axis=1).mean()) + float(d.min(axis=0).mean()))


def chamfer_matrix(
    preds: list[MapVector], gts: list[MapVector], n_pts: int = 20, use_3d: bool = False
) -> np.ndarray:
    """Pairwise Chamfer distances, resampling each polyline once."""
    dims = 3 if use_3d else 2
    pa = np.stack([resample_polyline(v.geometry, n_pts)[:, :dims] for v in preds])
    pb = np.stack([resample_polyline(v.geometry, n_pts)[:, :dims] for v in gts])
    # (P, G, n, n) distance tensor; fine at per-frame scene sizes
    diff = pa[:, None, :, None, :] - pb[None, :, None, :, :]
    d = np.sqrt((diff * diff).sum(axis=-1))
    return 0.5 * (d.min(axis=3).mean(axis=2) + d.min(axis=2).mean(axis=2))


def _match_flags(
    preds: list[tuple[MapVector, float]],
    gts: list[MapVector],
    threshold: float,
    n_pts: int,
    use_3d: bool,
) -> np.ndarray:
    """True-positive flags for predictions in descending score order."""
    order = sorted(range(len(preds)), key=lambda k: -preds[k][1])
    cd = chamfer_matrix([v for v, _ in preds], gts, n_pts, use_3d)
    taken = np.zeros(len(gts), dtype=bool)
    flags = np.zeros(len(preds), dtype=bool)
    for rank, k in enumerate(order):
        free = np.nonzero(~taken)[0]
        if len(free) == 0:
            break
        j = free[np.argmin(cd[k, free])]
        if cd[k, j] < threshold:
            taken[j] = True
            flags[rank] = True
    return flags


def ap_from_flags(flags: np.ndarray, n_gt: int) -> float:
    """Average precision from ordered true-positive flags, using right-max
    precision interpolation over the recall axis."""
    if n_gt == 0:
        return 0.0
    if len(flags) == 0:
        return 0.0
    tp = np.cumsum(flags)
    precision = tp / np.arange(1, len(flags) + 1)
    recall = tp / n_gt
    interp = np.maximum.accumulate(precision[::-1])[::-1]
    ap = 0.0
    prev_r = 0.0
    for p, r in zip(interp, recall):
        if r > prev_r:
            ap += (r - prev_r) * p
            prev_r = r
    return float(ap)


def average_precision(
    preds: list[tuple[MapVector, float]],
    gts: list[MapVector],
    threshold: float,
    n_pts: int = 20,
    use_3d: bool = False,
) -> float:
    """AP of one class at one Chamfer threshold. Returns 0.0 when there are
    no ground truths (callers track definedness; see :func:`evaluate`)."""
    if not gts or not preds:
        return 0.0
    flags = _match_flags(preds, gts, threshold, n_pts, use_3d)
    return ap_from_flags(flags, len(gts))


@dataclass
class ClassAP:
    ap_per_threshold: dict[float, float]
    mean_ap: float
    defined: bool
    n_gt: int
    n_pred: int


@dataclass
class APReport:
    """Per-class AP at each threshold plus the overall mean.

    Classes with zero ground truths anywhere in the evaluated set are flagged
    undefined and excluded from the overall mean so absent classes do not
    poison it.
    """

    thresholds: tuple[float, ...]
    per_class: dict[MapClass, ClassAP] = field(default_factory=dict)
    map_score: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "thresholds": list(self.thresholds),
            "classes": {
                CLASS_NAMES[c]: {
                    "ap_per_threshold": {repr(t): ap for t, ap in ca.ap_per_threshold.items()},
                    "mean_ap": ca.mean_ap,
                    "defined": ca.defined,
                    "n_gt": ca.n_gt,
                    "n_pred": ca.n_pred,
                }
                for c, ca in self.per_class.items()
            },
            "mAP": self.map_score,
        }

    def to_text(self) -> str:
        head = "class         " + "".join(f"  AP@{t:<5g}" for t in self.thresholds) + "  mean"
        lines = [head, "-" * len(head)]
        for c, ca in self.per_class.items():
            cells = "".join(f"  {ca.ap_per_threshold[t]:7.4f}" for t in self.thresholds)
            tag = "" if ca.defined else "  (no gt)"
            lines.append(f"{CLASS_NAMES[c]:<14}{cells}  {ca.mean_ap:.4f}{tag}")
        lines.append(f"{'mAP':<14}{'':{9 * len(self.thresholds)}}  {self.map_score:.4f}")
        return "\n".join(lines)


def evaluate(
    preds: list[tuple[MapVector, float]],
    gts: list[MapVector],
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS,
    n_pts: int = 20,
    use_3d: bool = False,
) -> APReport:
    """Full evaluation: AP per class per threshold, class means, overall mAP."""
    report = APReport(thresholds=tuple(thresholds))
    defined_means = []
    for cls in MapClass:
        cls_preds = [(v, s) for v, s in preds if v.cls == cls]
        cls_gts = [v for v in gts if v.cls == cls]
        aps = {t: average_precision(cls_preds, cls_gts, t, n_pts, use_3d) for t in thresholds}
        defined = len(cls_gts) > 0
        mean_ap = float(np.mean(list(aps.values()))) if defined else 0.0
        report.per_class[cls] = ClassAP(aps, mean_ap, defined, len(cls_gts), len(cls_preds))
        if defined:
            defined_means.append(mean_ap)
    report.map_score = float(np.mean(defined_means)) if defined_means else 0.0
    return report
