"""Grid search with holdout or k-fold evaluation.

Every grid cell sees the same partitions and the same master seed, so cells
differ only in their hyperparameters.  Training rows are resampled after
partitioning; test rows are never resampled or used for fitting.  Training
("tr") metrics are computed on the resampled training table the model was
fitted on.
"""
from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, parse_scalar, split_list
from .dataset import DataTable, make_folds, stratified_split
from .evaluation import brier, confusion_at, metrics, roc_auc
from .learners import check_family, fit_family, resample_plan, resolve_params

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("auc.te", "auc.tr", "bac.te", "bac.tr", "br.te", "br.tr", "f1.te", "f1.tr")
RESERVED_KEYS = ("family", "protocol", "threshold")


@dataclass(frozen=True)
class Protocol:
    kind: str = "holdout"
    value: float = 0.25

    def __post_init__(self):
        if self.kind == "holdout":
            if not 0 < self.value < 1:
                raise ConfigError(f"holdout fraction must lie in (0, 1), got {self.value}")
        elif self.kind == "cv":
            if int(self.value) != self.value or self.value < 2:
                raise ConfigError(f"cv needs an integer fold count >= 2, got {self.value}")
        else:
            raise ConfigError(f"unknown protocol {self.kind!r}; use holdout:F or cv:K")

    @classmethod
    def parse(cls, text: str) -> "Protocol":
        kind, _, val = text.partition(":")
        try:
            if kind == "holdout":
                return cls("holdout", float(val) if val else 0.25)
            if kind == "cv":
                return cls("cv", int(val) if val else 10)
        except ValueError:
            raise ConfigError(f"bad protocol value in {text!r}") from None
        raise ConfigError(f"unknown protocol {text!r}; use holdout:F or cv:K")

    def __str__(self) -> str:
        return f"{self.kind}:{self.value:g}"


def expand_grid(grid: dict[str, list]) -> list[dict]:
    """Cartesian product in declaration order (last key varies fastest)."""
    if not grid:
        raise ConfigError("empty grid")
    keys = list(grid)
    for k in keys:
        if not grid[k]:
            raise ConfigError(f"grid entry {k!r} has no values")
    return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]


def parse_grid(items: dict[str, str]) -> tuple[str, dict[str, list], dict[str, str]]:
    """Split a run config into (family, grid, reserved settings)."""
    if "family" not in items:
        raise ConfigError("run config lacks a 'family' entry")
    family = items["family"]
    check_family(family)
    grid = {k: [parse_scalar(v) for v in split_list(val)] for k, val in items.items()
            if k not in RESERVED_KEYS}
    if not grid:
        grid = {"osw.rate": [1.0]}
    for cell in expand_grid(grid):
        resolve_params(family, cell)
    reserved = {k: items[k] for k in RESERVED_KEYS if k in items}
    return family, grid, reserved


@dataclass
class TrialResult:
    index: int
    params: dict
    metrics: dict[str, float]
    fit_seconds: float
    seed: int
    error: str | None = None
    notes: list[str] = field(default_factory=list)

    def get(self, key: str) -> float:
        return self.metrics.get(key, math.nan)


def score_metrics(scores, labels, threshold: float = 0.5) -> dict[str, float]:
    """auc, bac, br and f1 of one scored sample."""
    y = np.asarray(labels)
    m = metrics(confusion_at(scores, y, threshold))
    try:
        a = roc_auc(scores, y)
    except ValueError:
        a = math.nan
    return {"auc": a, "bac": m.balanced_accuracy, "br": brier(scores, y), "f1": m.f1}


def _partitions(data: DataTable, protocol: Protocol, seed: int):
    if protocol.kind == "holdout":
        tr, te = stratified_split(data, protocol.value, seed)
        return [(tr, te)]
    plan = make_folds(data, int(protocol.value), seed=seed)
    return [(data.take(a), data.take(b)) for a, b in plan]


def run_trial(family: str, params: dict, parts, seed: int, threshold: float = 0.5) -> dict[str, float]:
    """Metrics averaged over the partitions for one hyperparameter assignment."""
    p = resolve_params(family, params)
    rows = []
    for k, (train, test) in enumerate(parts):
        fit_seed = seed + k
        train_r = resample_plan(p, fit_seed).apply(train)
        model = fit_family(family, train_r, p, seed=fit_seed)
        te = score_metrics(model.predict_proba(test), test.labels, threshold)
        tr = score_metrics(model.predict_proba(train_r), train_r.labels, threshold)
        rows.append({**{f"{m}.te": v for m, v in te.items()},
                     **{f"{m}.tr": v for m, v in tr.items()}})
    return {c: float(np.mean([r[c] for r in rows])) for c in METRIC_COLUMNS}


def grid_search(family: str, grid: dict[str, list], data: DataTable,
                protocol: Protocol = Protocol(), seed: int = 0, threads: int = 1,
                threshold: float = 0.5) -> list[TrialResult]:
    """Evaluate every cell of ``grid``; failing cells are recorded, not raised."""
    check_family(family)
    cells = expand_grid(grid)
    parts = _partitions(data, protocol, seed)

    def one(i: int) -> TrialResult:
        t0 = time.perf_counter()
        try:
            m = run_trial(family, cells[i], parts, seed, threshold)
            err = None
        except Exception as exc:  # recorded per cell, the run continues
            log.warning("grid cell %d %s failed: %s", i, cells[i], exc)
            m, err = {c: math.nan for c in METRIC_COLUMNS}, f"{type(exc).__name__}: {exc}"
        return TrialResult(i, cells[i], m, time.perf_counter() - t0, seed, err)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(len(cells))))
    else:
        results = [one(i) for i in range(len(cells))]
    return sorted(results, key=lambda r: r.index)


def _size_key(r: TrialResult):
    p = r.params
    inf = math.inf
    trees = p.get("ntree", p.get("rounds", 0))
    depth = p.get("max_depth")
    lam = p.get("lambda", 0.0)
    return (trees if trees is not None else inf, depth if depth is not None else inf, -lam)


def select_best(results: list[TrialResult], metric: str = "auc.te") -> TrialResult:
    """Best cell by ``metric``; ties go to fewer trees/rounds, then shallower
    trees, then the larger penalty, then grid order."""
    ok = [r for r in results if r.error is None and not math.isnan(r.get(metric))]
    if not ok:
        raise ValueError("no successful grid cell to select from")
    return min(ok, key=lambda r: (-r.get(metric), *_size_key(r), r.index))


def _fmt(v) -> str:
    if isinstance(v, float):
        return "NA" if math.isnan(v) else repr(float(v))
    return "NA" if v is None else str(v)


def results_csv(results: list[TrialResult], grid_keys: list[str]) -> str:
    lines = [",".join([*grid_keys, *METRIC_COLUMNS])]
    for r in results:
        lines.append(",".join([*(_fmt(r.params[k]) for k in grid_keys),
                               *(_fmt(r.metrics[c]) for c in METRIC_COLUMNS)]))
    return "\n".join(lines) + "\n"
