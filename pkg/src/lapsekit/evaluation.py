"""Confusion-matrix metrics, ROC / precision-recall curves and AUC."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("roc", "pr")


class EvalError(ValueError):
    pass


def _inputs(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise EvalError(f"scores and labels differ in shape: {s.shape} vs {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise EvalError("labels must be 0/1")
    return s, y.astype(np.int64)


@dataclass(frozen=True)
class ConfusionMatrix:
    TN: int
    FP: int
    FN: int
    TP: int

    @property
    def N(self) -> int:
        return self.TN + self.FP

    @property
    def P(self) -> int:
        return self.FN + self.TP

    @property
    def N_hat(self) -> int:
        return self.TN + self.FN

    @property
    def P_hat(self) -> int:
        return self.FP + self.TP

    @property
    def n(self) -> int:
        return self.N + self.P


def confusion_at(scores, labels, threshold: float = 0.5) -> ConfusionMatrix:
    """Counts for the rule: predict positive iff score > threshold."""
    s, y = _inputs(scores, labels)
    pred = s > threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    tn = int(np.sum(~pred & (y == 0)))
    return ConfusionMatrix(tn, fp, fn, tp)


@dataclass(frozen=True)
class MetricSet:
    """Threshold metrics; undefined ones are NaN and listed in ``undefined``."""

    recall: float
    fpr: float
    precision: float
    tnr: float
    f1: float
    balanced_accuracy: float
    undefined: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in
                ("recall", "fpr", "precision", "tnr", "f1", "balanced_accuracy")}


def metrics(cm: ConfusionMatrix) -> MetricSet:
    """Recall, FPR, precision, TNR, F1 and balanced accuracy.

    Precision is 0 when nothing is predicted positive and F1 is 0 when
    ``TP = 0``.  Recall needs ``P > 0`` and FPR / TNR need ``N > 0``;
    otherwise they are NaN and flagged, as is balanced accuracy.
    """
    nan = math.nan
    undefined = []
    recall = cm.TP / cm.P if cm.P else nan
    if not cm.P:
        undefined.append("recall")
    fpr = cm.FP / cm.N if cm.N else nan
    tnr = cm.TN / cm.N if cm.N else nan
    if not cm.N:
        undefined += ["fpr", "tnr"]
    precision = cm.TP / cm.P_hat if cm.P_hat else 0.0
    f1 = 2 * cm.TP / (2 * cm.TP + cm.FP + cm.FN) if cm.TP else 0.0
    bac = (recall + tnr) / 2
    if math.isnan(bac):
        undefined.append("balanced_accuracy")
    return MetricSet(recall, fpr, precision, tnr, f1, bac, tuple(undefined))


def brier(scores, labels) -> float:
    """Mean squared difference between score and 0/1 label."""
    s, y = _inputs(scores, labels)
    if not len(s):
        raise EvalError("brier score of an empty sample")
    return float(np.mean((s - y) ** 2))


@dataclass(frozen=True)
class CurvePoints:
    """Curve vertices in drawing order.

    ``roc``: x = FPR, y = recall.  ``pr``: x = recall, y = precision.
    ``threshold[i]`` is the score cut reaching vertex i (``inf`` for the ROC
    origin).
    """

    kind: str
    x: np.ndarray
    y: np.ndarray
    threshold: np.ndarray
    band: tuple[np.ndarray, np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EvalError(f"unknown curve kind {self.kind!r}")

    def __len__(self) -> int:
        return len(self.x)

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))


def _cumulative(s, y):
    """Cumulative TP / FP counts at each distinct score, descending."""
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.cumsum(y)[last]
    fp = np.cumsum(1 - y)[last]
    return s[last], tp, fp


def roc_curve(scores, labels) -> CurvePoints:
    """ROC vertices at every distinct score; tied scores form one step."""
    s, y = _inputs(scores, labels)
    P = int(y.sum())
    N = len(y) - P
    if P == 0 or N == 0:
        raise EvalError("ROC curve needs both classes")
    thr, tp, fp = _cumulative(s, y)
    x = np.r_[0.0, fp / N]
    yy = np.r_[0.0, tp / P]
    return CurvePoints("roc", x, yy, np.r_[np.inf, thr])


def pr_curve(scores, labels) -> CurvePoints:
    """(recall, precision) at every distinct score, descending."""
    s, y = _inputs(scores, labels)
    P = int(y.sum())
    if P == 0:
        raise EvalError("precision-recall curve needs positives")
    thr, tp, fp = _cumulative(s, y)
    return CurvePoints("pr", tp / P, tp / (tp + fp), thr)


def auc(curve: CurvePoints) -> float:
    """Trapezoidal area under a ROC curve."""
    if curve.kind != "roc":
        raise EvalError("auc expects a ROC curve")
    x, y = curve.x, curve.y
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2))


def roc_auc(scores, labels) -> float:
    return auc(roc_curve(scores, labels))


def _vertical(curve: CurvePoints, grid: np.ndarray) -> np.ndarray:
    """Curve height on ``grid``.

    Vertices are in drawing order with x non-decreasing.  At an x shared by
    several vertices the highest one counts; between two distinct x values
    the drawn segment (last vertex of one, first vertex of the next) is
    interpolated linearly.
    """
    x, y = curve.x, curve.y
    ux, first = np.unique(x, return_index=True)
    last = np.r_[first[1:] - 1, len(x) - 1]
    top = np.maximum.reduceat(y, first)
    out = np.empty(len(grid))
    i = np.searchsorted(ux, grid, side="right") - 1
    exact = (i >= 0) & (ux[np.maximum(i, 0)] == grid)
    out[exact] = top[i[exact]]
    below = i < 0
    out[below] = y[first[0]]
    above = ~exact & (i == len(ux) - 1)
    out[above] = y[last[-1]]
    mid = ~exact & ~below & ~above
    j = i[mid]
    w = (grid[mid] - ux[j]) / (ux[j + 1] - ux[j])
    out[mid] = y[last[j]] + w * (y[first[j + 1]] - y[last[j]])
    return out


def aggregate_curves(curves: list[CurvePoints], grid_size: int = 101) -> CurvePoints:
    """Vertical average of per-fold curves on an evenly spaced x grid.

    The returned curve carries the pointwise min / max over folds as
    ``band``.  Below a PR curve's first recall value its first precision is
    carried back to recall 0.
    """
    if len(curves) < 2:
        raise EvalError("aggregation needs at least two curves")
    kinds = {c.kind for c in curves}
    if len(kinds) != 1:
        raise EvalError(f"cannot aggregate mixed curve kinds {sorted(kinds)}")
    grid = np.linspace(0.0, 1.0, grid_size)
    Y = np.vstack([_vertical(c, grid) for c in curves])
    return CurvePoints(curves[0].kind, grid, Y.mean(axis=0), np.full(grid_size, np.nan),
                       band=(Y.min(axis=0), Y.max(axis=0)))


def pooled_curve(kind: str, scores: list, labels: list) -> CurvePoints:
    """One curve over the concatenated out-of-fold scores."""
    s = np.concatenate([np.asarray(v, dtype=np.float64) for v in scores])
    y = np.concatenate([np.asarray(v) for v in labels])
    if kind == "roc":
        return roc_curve(s, y)
    if kind == "pr":
        return pr_curve(s, y)
    raise EvalError(f"unknown curve kind {kind!r}")


def curve_rows(curve: CurvePoints, fold) -> list[tuple]:
    """Rows ``(kind, fold, threshold, x, y)`` for the curves CSV."""
    return [(curve.kind, fold, float(t), float(a), float(b))
            for t, a, b in zip(curve.threshold, curve.x, curve.y)]
