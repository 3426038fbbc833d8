"""Classification trees grown by recursive binary partitioning (Gini)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..dataset import DataTable
from .base import Binned, FeatureSpec, Tree, TreeNode, feature_matrix

TIE_TOL = 1e-12


def gini_impurity(counts) -> float:
    """2 p (1 - p) for the positive fraction p of ``(negatives, positives)``."""
    neg, pos = counts
    total = neg + pos
    if total <= 0:
        raise ValueError("impurity of an empty node")
    p = pos / total
    return 2.0 * p * (1.0 - p)


@dataclass(frozen=True)
class CartParams:
    max_depth: int | None = None
    min_node_size: int = 1
    min_decrease: float = 0.0
    ccp_alpha: float = 0.0

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_node_size < 1:
            raise ValueError("min_node_size must be >= 1")
        if self.min_decrease < 0:
            raise ValueError("min_decrease must be >= 0")


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left_levels: frozenset | None
    gain: float          # n_t * impurity decrease
    decrease: float      # impurity decrease of the node
    n_left: int
    n_right: int


def best_split(binned: Binned, y: np.ndarray, rows: np.ndarray, features: Iterable[int],
               min_child: int = 1) -> Split | None:
    """Gini-optimal binary split of ``rows`` over the candidate ``features``.

    Numeric features are cut at midpoints between consecutive distinct
    values.  Categorical levels are ordered by their positive rate within the
    node and cut at the best prefix (optimal for two classes).  Ties go to
    the lowest feature index, then the lowest threshold / shortest prefix.
    Returns None when no admissible split exists.
    """
    yw = y[rows].astype(np.float64)
    n = len(rows)
    P = float(yw.sum())
    if n < 2 * min_child or P == 0 or P == n:
        return None
    parent = 2.0 * P * (n - P) / n
    tol = TIE_TOL * max(parent, 1.0)
    best = None
    for f in sorted(features):
        present, cnt, pos = binned.bins(rows, f, yw)
        if len(present) < 2:
            continue
        cat = binned.spec.categorical[f]
        if cat:
            order = np.argsort(pos / cnt, kind="stable")
            present, cnt, pos = present[order], cnt[order], pos[order]
        cl = np.cumsum(cnt)[:-1]
        pl = np.cumsum(pos)[:-1]
        cr = n - cl
        pr = P - pl
        ok = (cl >= min_child) & (cr >= min_child)
        if not ok.any():
            continue
        gain = parent - 2.0 * pl * (cl - pl) / cl - 2.0 * pr * (cr - pr) / cr
        gain = np.where(ok, gain, -np.inf)
        i = int(np.flatnonzero(gain >= gain.max() - tol)[0])
        if best is not None and not gain[i] > best.gain + tol:
            continue
        g = max(float(gain[i]), 0.0)
        if cat:
            levels = frozenset(int(v) for v in present[: i + 1])
            thr = np.nan
        else:
            vals = binned.values[f]
            levels = None
            thr = 0.5 * (vals[present[i]] + vals[present[i + 1]])
        best = Split(f, float(thr), levels, g, g / n, int(cl[i]), int(cr[i]))
    return best


def _partition(binned: Binned, rows: np.ndarray, split: Split):
    x = binned.X[rows, split.feature]
    if split.left_levels is not None:
        left = np.isin(x, np.fromiter(split.left_levels, dtype=np.float64))
    else:
        left = x <= split.threshold
    return rows[left], rows[~left]


def grow_tree(binned: Binned, y: np.ndarray, rows: np.ndarray, params: CartParams,
              rng: np.random.Generator | None = None, ntry: int | None = None) -> Tree:
    """Greedy depth-first growth; node ids follow creation (pre-)order.

    With ``ntry`` set, a fresh random subset of that many features is drawn
    from ``rng`` at every node.
    """
    p = binned.spec.p
    n_root = len(rows)
    nodes: list[TreeNode] = []
    stack = [(rows, -1, 0, "")]
    while stack:
        r, parent, depth, side = stack.pop()
        pos = float(y[r].sum())
        nt = len(r)
        nid = len(nodes)
        node = TreeNode(nid, parent, depth, nt, gini_impurity((nt - pos, pos)), pos / nt)
        nodes.append(node)
        if parent >= 0:
            setattr(nodes[parent], side, nid)
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if ntry is not None and ntry < p:
            feats = np.sort(rng.choice(p, ntry, replace=False))
        else:
            feats = range(p)
        split = best_split(binned, y, r, feats, params.min_node_size)
        if split is None or split.decrease < params.min_decrease - 1e-15:
            continue
        node.feature = split.feature
        node.threshold = split.threshold
        node.left_levels = split.left_levels
        node.decrease = split.decrease
        lrows, rrows = _partition(binned, r, split)
        stack.append((rrows, nid, depth + 1, "right"))
        stack.append((lrows, nid, depth + 1, "left"))
    return Tree(nodes, n_root)


def prune(tree: Tree, alpha: float) -> Tree:
    """Minimal cost-complexity pruning with node risk p(t) * i(t)."""
    if alpha <= 0:
        return tree
    nodes = [TreeNode(**vars(nd)) for nd in tree.nodes]
    n = tree.n_root

    def risk(nd):
        return nd.n / n * nd.impurity

    while True:
        # subtree risk and leaf counts, children before parents
        sub_risk, leaves = {}, {}
        for nd in sorted(_reachable(nodes), key=lambda i: -nodes[i].depth):
            x = nodes[nd]
            if x.is_leaf:
                sub_risk[nd], leaves[nd] = risk(x), 1
            else:
                sub_risk[nd] = sub_risk[x.left] + sub_risk[x.right]
                leaves[nd] = leaves[x.left] + leaves[x.right]
        internal = [i for i in _reachable(nodes) if not nodes[i].is_leaf]
        if not internal:
            break
        g = {i: (risk(nodes[i]) - sub_risk[i]) / (leaves[i] - 1) for i in internal}
        weakest = min(internal, key=lambda i: (g[i], i))
        if g[weakest] > alpha:
            break
        x = nodes[weakest]
        x.feature, x.threshold, x.left_levels = -1, np.nan, None
        x.left = x.right = -1
        x.decrease = 0.0
    return _renumber(nodes, n)


def _reachable(nodes):
    out, stack = [], [0]
    while stack:
        i = stack.pop()
        out.append(i)
        if not nodes[i].is_leaf:
            stack.extend((nodes[i].right, nodes[i].left))
    return out


def _renumber(nodes, n_root) -> Tree:
    order = _reachable(nodes)
    new_id = {old: k for k, old in enumerate(order)}
    out = []
    for old in order:
        nd = TreeNode(**vars(nodes[old]))
        nd.id = new_id[old]
        nd.parent = new_id.get(nd.parent, -1)
        if not nd.is_leaf:
            nd.left, nd.right = new_id[nd.left], new_id[nd.right]
        out.append(nd)
    return Tree(out, n_root)


@dataclass
class CartModel:
    tree: Tree
    spec: FeatureSpec
    params: CartParams

    @property
    def trees(self) -> list[Tree]:
        return [self.tree]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.tree.predict(X)


def fit_cart(table: DataTable, params: CartParams = CartParams()) -> CartModel:
    X, spec = feature_matrix(table)
    y = table.labels.astype(np.int64)
    tree = grow_tree(Binned(X, spec), y, np.arange(table.n), params)
    if params.ccp_alpha > 0:
        tree = prune(tree, params.ccp_alpha)
    return CartModel(tree, spec, params)
