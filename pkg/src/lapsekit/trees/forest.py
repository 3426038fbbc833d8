"""Random forests of unpruned Gini trees."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..dataset import DataTable
from .base import Binned, FeatureSpec, Tree, feature_matrix
from .cart import CartParams, grow_tree


@dataclass(frozen=True)
class ForestParams:
    """Forest settings.

    ``ntry`` features are drawn anew at every node (default floor(sqrt(p))).
    ``nodesize`` is the minimum number of rows in a child.  ``bootstrap=False``
    grows every tree on the full training table.
    """

    ntree: int = 500
    ntry: int | None = None
    nodesize: int = 1
    max_depth: int | None = None
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.ntree < 1:
            raise ValueError("ntree must be >= 1")
        if self.ntry is not None and self.ntry < 1:
            raise ValueError("ntry must be >= 1")
        if self.nodesize < 1:
            raise ValueError("nodesize must be >= 1")

    def resolved_ntry(self, p: int) -> int:
        ntry = self.ntry if self.ntry is not None else max(1, math.isqrt(p))
        if ntry > p:
            raise ValueError(f"ntry={ntry} exceeds the {p} available features")
        return ntry


@dataclass
class Forest:
    trees: list[Tree]
    spec: FeatureSpec
    params: ForestParams

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Mean over trees of the leaf positive proportion."""
        total = np.zeros(len(X))
        for t in self.trees:
            total += t.predict(X)
        return total / len(self.trees)

    def predict_vote(self, X: np.ndarray) -> np.ndarray:
        """Majority vote of per-tree class predictions; ties go to 0."""
        votes = np.zeros(len(X), dtype=np.int64)
        for t in self.trees:
            votes += t.predict(X) > 0.5
        return (2 * votes > len(self.trees)).astype(np.int64)


def _tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def fit_forest(table: DataTable, params: ForestParams = ForestParams(), threads: int = 1) -> Forest:
    """Grow ``params.ntree`` trees, each on its own bootstrap sample.

    Tree ``i`` draws everything from a generator seeded by ``(seed, i)`` and
    trees are collected in index order, so the result does not depend on
    ``threads``.
    """
    X, spec = feature_matrix(table)
    y = table.labels.astype(np.int64)
    binned = Binned(X, spec)
    ntry = params.resolved_ntry(spec.p)
    cart = CartParams(max_depth=params.max_depth, min_node_size=params.nodesize)
    n = table.n

    def one(i: int) -> Tree:
        rng = _tree_rng(params.seed, i)
        rows = rng.integers(0, n, n) if params.bootstrap else np.arange(n)
        return grow_tree(binned, y, rows, cart, rng=rng, ntry=ntry)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            trees = list(pool.map(one, range(params.ntree)))
    else:
        trees = [one(i) for i in range(params.ntree)]
    return Forest(trees, spec, params)


def predict_forest(forest: Forest, rows, mode: str = "proba") -> np.ndarray:
    """Scores (``proba``) or 0/1 labels (``vote``) for a table or matrix."""
    X = feature_matrix(rows, forest.spec)[0] if isinstance(rows, DataTable) else rows
    if mode == "proba":
        return forest.predict_proba(X)
    if mode == "vote":
        return forest.predict_vote(X)
    raise ValueError(f"unknown prediction mode {mode!r}")
