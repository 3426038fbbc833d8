"""Minority-class oversampling for training tables.

Every function takes only a training table and returns a new one; test
partitions never pass through here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import NUMERIC, DataTable, concat

METHODS = ("none", "random_oversample", "smote")


class ResampleError(ValueError):
    pass


@dataclass(frozen=True)
class ResamplePlan:
    method: str = "none"
    rate: float = 1.0
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ResampleError(f"unknown resampling method {self.method!r}")
        if self.rate < 1:
            raise ResampleError(f"oversampling rate must be >= 1, got {self.rate}")

    def apply(self, table: DataTable) -> DataTable:
        if self.method == "none" or self.rate == 1:
            return table
        if self.method == "random_oversample":
            return random_oversample(table, self.rate, self.seed)
        return smote(table, self.rate, self.k_neighbors, self.seed)


def imbalance_rate(labels) -> float:
    """N / P: negatives per positive."""
    y = np.asarray(labels)
    p = int((y == 1).sum())
    if p == 0:
        raise ResampleError("imbalance rate undefined without positives")
    return (len(y) - p) / p


def _minority_target(p: int, rate: float) -> int:
    if rate < 1:
        raise ResampleError(f"oversampling rate must be >= 1, got {rate}")
    if p == 0:
        raise ResampleError("no positive rows to oversample")
    return int(np.floor(rate * p + 0.5))


def random_oversample(table: DataTable, rate: float, seed: int) -> DataTable:
    """Append copies of randomly drawn positives until there are round(rate * P)."""
    pos = np.flatnonzero(table.labels == 1)
    extra = _minority_target(len(pos), rate) - len(pos)
    if extra <= 0:
        return table
    rng = np.random.default_rng(seed)
    picks = rng.choice(pos, size=extra, replace=True)
    return table.take(np.concatenate([np.arange(table.n), picks]))


def smote(table: DataTable, rate: float, k: int, seed: int, *, return_parents: bool = False):
    """Synthetic Minority Oversampling.

    Each synthetic row starts from a positive seed row ``x``, picks one of its
    ``k`` nearest positive neighbours ``x'`` (Euclidean distance on numeric
    columns standardized over the whole table) and sets every numeric column
    to ``x + u (x' - x)`` with a single ``u ~ U[0, 1]``.  Non-numeric columns
    are copied from ``x``.

    With ``return_parents=True`` a ``(table, parents)`` pair is returned,
    ``parents[i]`` holding the row indices of ``(x, x')`` for synthetic row i.
    """
    pos = np.flatnonzero(table.labels == 1)
    target = _minority_target(len(pos), rate)
    extra = target - len(pos)
    if extra <= 0:
        return (table, np.zeros((0, 2), np.int64)) if return_parents else table
    if len(pos) < k + 1:
        raise ResampleError(f"SMOTE with k={k} needs at least {k + 1} positives, got {len(pos)}")
    num = [c.name for c in table.schema.columns if c.role == NUMERIC]
    if table.has_missing(num):
        raise ResampleError("SMOTE needs imputed numeric columns")
    X = np.column_stack([table[c] for c in num]).astype(np.float64) if num else np.zeros((table.n, 0))
    sd = X.std(axis=0)
    Z = (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    Zp = Z[pos]
    neighbors = _knn(Zp, k)

    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, len(pos), extra)
    mates = neighbors[seeds, rng.integers(0, k, extra)]
    u = rng.random(extra)[:, None]
    Xp = X[pos]
    a, b = Xp[seeds], Xp[mates]
    synth = np.clip(a + u * (b - a), np.minimum(a, b), np.maximum(a, b))

    new = table.take(pos[seeds])
    new = new.with_columns([(table.schema[c], synth[:, j], None) for j, c in enumerate(num)])
    out = concat([table, new])
    if return_parents:
        return out, np.column_stack([pos[seeds], pos[mates]])
    return out


def _knn(Z: np.ndarray, k: int, chunk: int = 2048) -> np.ndarray:
    """Indices of the ``k`` nearest other rows, by exhaustive scan."""
    m = len(Z)
    out = np.empty((m, k), dtype=np.int64)
    sq = (Z ** 2).sum(axis=1)
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        d = sq[start:stop, None] + sq[None, :] - 2 * Z[start:stop] @ Z.T
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        out[start:stop] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out
