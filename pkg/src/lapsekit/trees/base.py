"""Tree structure shared by CART, random forests and boosting."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..dataset import CATEGORICAL, DataError, DataTable


@dataclass
class TreeNode:
    """One node of a binary tree.

    Numeric splits send ``x <= threshold`` left; categorical splits send the
    level codes in ``left_levels`` left.  ``value`` is the leaf payload: the
    positive-class proportion for classification trees, the (unscaled) leaf
    weight for boosted trees.  ``decrease`` is the impurity decrease of the
    chosen split (0 for leaves); ``grad`` / ``hess`` are the gradient and
    hessian sums recorded by the booster.
    """

    id: int
    parent: int
    depth: int
    n: int
    impurity: float
    value: float
    feature: int = -1
    threshold: float = math.nan
    left_levels: frozenset | None = None
    left: int = -1
    right: int = -1
    decrease: float = 0.0
    grad: float = math.nan
    hess: float = math.nan

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass(frozen=True)
class FeatureSpec:
    """Column layout of the matrices a tree model consumes."""

    names: tuple[str, ...]
    categorical: tuple[bool, ...]
    levels: tuple[tuple[str, ...], ...]

    @property
    def p(self) -> int:
        return len(self.names)

    @classmethod
    def numeric(cls, names: Sequence[str]) -> "FeatureSpec":
        names = tuple(names)
        return cls(names, (False,) * len(names), ((),) * len(names))

    @classmethod
    def from_table(cls, table: DataTable) -> "FeatureSpec":
        feats = table.schema.features
        return cls(tuple(c.name for c in feats),
                   tuple(c.role == CATEGORICAL for c in feats),
                   tuple(c.levels for c in feats))


def feature_matrix(table: DataTable, spec: FeatureSpec | None = None) -> tuple[np.ndarray, FeatureSpec]:
    """Numeric matrix with raw numeric values and categorical level codes."""
    own = FeatureSpec.from_table(table)
    if spec is None:
        spec = own
    elif spec != own:
        raise DataError("table features do not match the model's feature layout")
    bad = [f for f in spec.names if f in table.missing]
    if bad:
        raise DataError(f"missing values present in {bad}; impute first")
    if not spec.p:
        return np.zeros((table.n, 0)), spec
    X = np.column_stack([table[f].astype(np.float64) for f in spec.names])
    return X, spec


@dataclass
class Tree:
    nodes: list[TreeNode]
    n_root: int

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def n_leaves(self) -> int:
        return sum(nd.is_leaf for nd in self.nodes)

    @property
    def depth(self) -> int:
        return max(nd.depth for nd in self.nodes)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id reached by every row."""
        out = np.empty(len(X), dtype=np.int64)
        stack = [(0, np.arange(len(X)))]
        while stack:
            nid, rows = stack.pop()
            nd = self.nodes[nid]
            if nd.is_leaf or not len(rows):
                out[rows] = nid
                continue
            x = X[rows, nd.feature]
            if nd.left_levels is not None:
                go_left = np.isin(x, np.fromiter(nd.left_levels, dtype=np.float64))
            else:
                go_left = x <= nd.threshold
            stack.append((nd.right, rows[~go_left]))
            stack.append((nd.left, rows[go_left]))
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        values = np.array([nd.value for nd in self.nodes])
        return values[self.apply(X)]


class Binned:
    """Per-feature integer ranks of a training matrix.

    ``ranks[:, f]`` indexes ``values[f]``, the sorted distinct values of
    feature ``f`` (for categorical features: the level codes).  Split search
    accumulates class counts or gradient sums per rank, which avoids sorting
    at every node.
    """

    def __init__(self, X: np.ndarray, spec: FeatureSpec):
        self.X = X
        self.spec = spec
        n, p = X.shape
        self.ranks = np.empty((n, p), dtype=np.int64, order="F")
        self.values: list[np.ndarray] = []
        for f in range(p):
            if spec.categorical[f]:
                k = len(spec.levels[f])
                self.ranks[:, f] = X[:, f].astype(np.int64)
                self.values.append(np.arange(k, dtype=np.float64))
            else:
                vals, inv = np.unique(X[:, f], return_inverse=True)
                self.ranks[:, f] = inv
                self.values.append(vals)

    def bins(self, rows: np.ndarray, f: int, *weights: np.ndarray):
        """Present bins of feature ``f`` among ``rows`` with per-bin sums.

        Returns ``(bins, counts, sums...)`` where ``bins`` are the sorted
        distinct ranks present and each ``sums`` array totals one weight
        vector (aligned with ``rows``) per bin.
        """
        r = self.ranks[rows, f]
        u = len(self.values[f])
        if u > 8 * len(rows):
            present, inv, counts = np.unique(r, return_inverse=True, return_counts=True)
            sums = [np.bincount(inv, weights=w, minlength=len(present)) for w in weights]
            return (present, counts.astype(np.float64), *sums)
        counts = np.bincount(r, minlength=u)
        present = np.flatnonzero(counts)
        sums = [np.bincount(r, weights=w, minlength=u)[present] for w in weights]
        return (present, counts[present].astype(np.float64), *sums)
