"""Impurity-based (Gini) variable importance."""
from __future__ import annotations

import numpy as np

from .base import Tree


def tree_importance(tree: Tree, p: int) -> np.ndarray:
    """Sum of p(t) * decrease(t) over the internal nodes split on each feature.

    ``p(t) = n_t / n_root`` is the share of the tree's training rows that
    reach node ``t``.
    """
    vi = np.zeros(p)
    for nd in tree.nodes:
        if not nd.is_leaf:
            vi[nd.feature] += nd.n / tree.n_root * nd.decrease
    return vi


def gini_importance(model) -> np.ndarray:
    """Per-feature importance averaged over the model's trees.

    Works for a single tree model, a forest (average over ``ntree``) and a
    booster (average over the fitted rounds, indexed by design column).
    """
    trees = model.trees
    p = len(model.provenance) if hasattr(model, "provenance") else model.spec.p
    if not trees:
        return np.zeros(p)
    total = np.zeros(p)
    for t in trees:
        total += tree_importance(t, p)
    return total / len(trees)
