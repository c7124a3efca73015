"""Confusion-matrix segmentation metrics: per-class IoU, global, weighted.

Label maps use 0 for unlabeled pixels (excluded from everything) and 1..n for
classes.  'global' is overall accuracy over labeled pixels; 'weighted' is the
support-weighted mean IoU.  Classes with an empty union (absent from both
ground truth and prediction) are reported as absent (NaN) and excluded from
aggregates rather than scored zero, so frames missing rare classes are not
penalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EvaluationError, SchemaError, ShapeError


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[g][p] = labeled pixels with ground truth g+1 predicted as p+1."""

    n_classes: int
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (self.n_classes, self.n_classes):
            raise ShapeError(f"counts must be {self.n_classes}x{self.n_classes}, "
                             f"got {c.shape}")
        object.__setattr__(self, "counts", c)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.n_classes != other.n_classes:
            raise SchemaError("cannot add confusion matrices over different "
                              "class sets")
        return ConfusionMatrix(self.n_classes, self.counts + other.counts)


@dataclass(frozen=True)
class MetricsReport:
    """Per-class IoU (NaN = absent), overall accuracy, weighted IoU, support."""

    iou: np.ndarray
    global_acc: float
    weighted: float
    support: np.ndarray

    @property
    def n_classes(self) -> int:
        return int(self.iou.size)

    def present(self) -> np.ndarray:
        return ~np.isnan(self.iou)


def _as_labels(arr) -> np.ndarray:
    a = np.asarray(arr)
    if not np.issubdtype(a.dtype, np.integer):
        raise DomainError("label maps must have an integer dtype")
    return a


def confusion(gt, pred, n_classes: int) -> ConfusionMatrix:
    """Accumulate counts over pixels where the ground truth is labeled."""
    g = _as_labels(gt)
    p = _as_labels(pred)
    if g.shape != p.shape:
        raise ShapeError(f"label map shapes differ: {g.shape} vs {p.shape}")
    if n_classes < 1:
        raise DomainError(f"n_classes must be >= 1, got {n_classes}")
    for name, a in (("ground truth", g), ("prediction", p)):
        if a.size and (int(a.min()) < 0 or int(a.max()) > n_classes):
            raise DomainError(f"{name} contains ids outside [0, {n_classes}]")
    labeled = g > 0
    if np.any(p[labeled] == 0):
        raise EvaluationError("prediction has unlabeled pixels inside labeled "
                              "ground-truth regions")
    gi = g[labeled].astype(np.int64) - 1
    pi = p[labeled].astype(np.int64) - 1
    counts = np.bincount(gi * n_classes + pi,
                         minlength=n_classes * n_classes)
    return ConfusionMatrix(n_classes, counts.reshape(n_classes, n_classes))


def iou_per_class(m: ConfusionMatrix) -> np.ndarray:
    """diag / (row + col - diag) per class; NaN where the union is empty."""
    diag = np.diag(m.counts).astype(np.float64)
    union = m.counts.sum(axis=1) + m.counts.sum(axis=0) - np.diag(m.counts)
    out = np.full(m.n_classes, np.nan)
    present = union > 0
    out[present] = diag[present] / union[present]
    return out


def aggregate(m: ConfusionMatrix) -> MetricsReport:
    """Overall accuracy plus support-weighted mean IoU over present classes."""
    total = int(m.counts.sum())
    if total == 0:
        raise EvaluationError("confusion matrix is empty; nothing was labeled")
    iou = iou_per_class(m)
    support = m.counts.sum(axis=1).astype(np.float64)
    present = ~np.isnan(iou)
    global_acc = float(np.trace(m.counts)) / total
    weighted = float((support[present] * iou[present]).sum()
                     / support[present].sum())
    return MetricsReport(iou=iou, global_acc=global_acc, weighted=weighted,
                         support=support)


def kfold_mean(reports) -> MetricsReport:
    """Field-wise mean across folds; per-class IoU averages folds where present."""
    reports = list(reports)
    if not reports:
        raise DomainError("need at least one fold report")
    n = reports[0].n_classes
    if any(r.n_classes != n for r in reports):
        raise SchemaError("fold reports cover different class sets")
    ious = np.stack([r.iou for r in reports])
    present = ~np.isnan(ious)
    counts = present.sum(axis=0)
    summed = np.where(present, ious, 0.0).sum(axis=0)
    mean_iou = np.full(n, np.nan)
    has = counts > 0
    mean_iou[has] = summed[has] / counts[has]
    return MetricsReport(
        iou=mean_iou,
        global_acc=float(np.mean([r.global_acc for r in reports])),
        weighted=float(np.mean([r.weighted for r in reports])),
        support=np.stack([r.support for r in reports]).mean(axis=0))


def remap_labels(labels, mapping: dict) -> np.ndarray:
    """Apply a class-grouping map; id 0 always stays unlabeled."""
    a = _as_labels(labels)
    lut = np.arange(int(a.max()) + 1 if a.size else 1, dtype=np.int64)
    for src, dst in mapping.items():
        if src == 0:
            raise DomainError("cannot remap the unlabeled id 0")
        if src < lut.size:
            lut[src] = dst
    return lut[a]


def default_class_names(n_classes: int) -> list[str]:
    """Driving-scene class layouts used by the published result tables."""
    if n_classes == 5:
        return ["road", "road_marks", "vegetation", "sky", "others"]
    if n_classes == 6:
        return ["road", "road_marks", "vegetation", "extra", "sky", "others"]
    return [f"class_{i}" for i in range(1, n_classes + 1)]


def report_to_csv(report: MetricsReport, class_names=None) -> str:
    """Header plus one row: per-class IoU columns, then global and weighted."""
    names = class_names or default_class_names(report.n_classes)
    if len(names) != report.n_classes:
        raise SchemaError(f"{len(names)} names for {report.n_classes} classes")
    header = ",".join(list(names) + ["global", "weighted"])
    cells = ["" if np.isnan(x) else f"{x:.6f}" for x in report.iou]
    cells += [f"{report.global_acc:.6f}", f"{report.weighted:.6f}"]
    return header + "\n" + ",".join(cells) + "\n"
