"""Second-order gradient boosting of regression trees for the logistic loss.

Each round fits a tree to the gradients ``g = p - y`` and hessians
``h = p (1 - p)`` of the current model.  With node sums ``G`` and ``H`` and
the soft-thresholded gradient ``T(G) = sign(G) max(|G| - reg_l1, 0)``:

    leaf weight   w = -T(G) / (H + reg_l2)
    split gain      = (T(G_L)^2 / (H_L + reg_l2) + T(G_R)^2 / (H_R + reg_l2)
                       - T(G)^2 / (H + reg_l2)) / 2 - reg_leafcount

Splits with gain <= 0 are rejected.  ``reg_leafcount`` charges every extra
leaf, ``reg_l2`` and ``reg_l1`` shrink the leaf weights.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..dataset import DataTable, DesignMatrix, encode_design
from ..linear import logit, sigmoid
from .base import Binned, FeatureSpec, Tree, TreeNode

log = logging.getLogger(__name__)

TIE_TOL = 1e-12


@dataclass(frozen=True)
class BoostParams:
    rounds: int = 100
    learning_rate: float = 0.3
    max_depth: int = 6
    reg_leafcount: float = 0.0
    reg_l2: float = 1.0
    reg_l1: float = 0.0
    min_child_hessian: float = 1.0
    base_score: float | None = None
    colsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        for name in ("reg_leafcount", "reg_l2", "reg_l1", "min_child_hessian"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 < self.colsample <= 1:
            raise ValueError("colsample must lie in (0, 1]")
        if self.base_score is not None and not 0 < self.base_score < 1:
            raise ValueError("base_score must lie in (0, 1)")


def soft_threshold(G, l1: float):
    G = np.asarray(G, dtype=np.float64)
    return np.sign(G) * np.maximum(np.abs(G) - l1, 0.0)


def leaf_weight(G: float, H: float, reg_l2: float, reg_l1: float) -> float:
    """-T(G) / (H + reg_l2); 0 inside the L1 dead zone."""
    t = float(soft_threshold(G, reg_l1))
    if t == 0.0:
        return 0.0
    return -t / (H + reg_l2)


def _score(G, H, l2, l1):
    t = soft_threshold(G, l1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = t * t / (H + l2)
    return np.where(t == 0.0, 0.0, s)


@dataclass
class Booster:
    trees: list[Tree]
    base_score: float
    provenance: tuple[tuple[str, str], ...]
    params: BoostParams
    notes: list[str] = field(default_factory=list)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(column_label(p) for p in self.provenance)

    def margin(self, X: np.ndarray) -> np.ndarray:
        f = np.full(len(X), logit(self.base_score), dtype=np.float64)
        for t in self.trees:
            f += self.params.learning_rate * t.predict(X)
        return f

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.margin(X))


def column_label(prov: tuple[str, str]) -> str:
    feat, level = prov
    return feat if level == "numeric" else f"{feat}={level}"


def _grow(binned: Binned, g: np.ndarray, h: np.ndarray, features, params: BoostParams) -> Tree:
    l1, l2 = params.reg_l1, params.reg_l2
    mch = params.min_child_hessian
    n_root = len(g)
    nodes: list[TreeNode] = []
    stack = [(np.arange(n_root), -1, 0, "")]
    while stack:
        rows, parent, depth, side = stack.pop()
        gr, hr = g[rows], h[rows]
        G, H = float(gr.sum()), float(hr.sum())
        nt = len(rows)
        nid = len(nodes)
        parent_score = float(_score(G, H, l2, l1))
        node = TreeNode(nid, parent, depth, nt, -0.5 * parent_score / nt,
                        leaf_weight(G, H, l2, l1), grad=G, hess=H)
        nodes.append(node)
        if parent >= 0:
            setattr(nodes[parent], side, nid)
        if depth >= params.max_depth or nt < 2:
            continue
        tol = TIE_TOL * max(parent_score, 1.0)
        best = None  # (gain, feature, threshold)
        for f in features:
            present, _, gs, hs = binned.bins(rows, f, gr, hr)
            if len(present) < 2:
                continue
            GL = np.cumsum(gs)[:-1]
            HL = np.cumsum(hs)[:-1]
            GR, HR = G - GL, H - HL
            ok = (HL >= mch) & (HR >= mch)
            if not ok.any():
                continue
            gain = 0.5 * (_score(GL, HL, l2, l1) + _score(GR, HR, l2, l1) - parent_score)
            gain = np.where(ok & np.isfinite(gain), gain, -np.inf)
            i = int(np.flatnonzero(gain >= gain.max() - tol)[0])
            if best is not None and not gain[i] > best[0] + tol:
                continue
            vals = binned.values[f]
            best = (float(gain[i]), f, 0.5 * (vals[present[i]] + vals[present[i + 1]]))
        if best is None or best[0] - params.reg_leafcount <= 0:
            continue
        gain, f, thr = best
        node.feature, node.threshold = f, float(thr)
        node.decrease = gain / nt
        left = binned.X[rows, f] <= thr
        stack.append((rows[~left], nid, depth + 1, "right"))
        stack.append((rows[left], nid, depth + 1, "left"))
    return Tree(nodes, n_root)


def fit_boost_design(design: DesignMatrix, labels, params: BoostParams = BoostParams()) -> Booster:
    """Boost on a dummy-encoded design matrix."""
    X = np.asarray(design.values, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if y.min() == y.max():
        raise ValueError("boosting needs both classes in the training data")
    base = params.base_score if params.base_score is not None else float(y.mean())
    binned = Binned(X, FeatureSpec.numeric([column_label(p) for p in design.provenance]))
    p = X.shape[1]
    f = np.full(len(y), logit(base))
    model = Booster([], base, design.provenance, params)
    for m in range(params.rounds):
        prob = sigmoid(f)
        g = prob - y
        h = prob * (1 - prob)
        if params.colsample < 1:
            k = max(1, int(round(params.colsample * p)))
            feats = np.sort(np.random.default_rng([params.seed, m]).choice(p, k, replace=False))
        else:
            feats = range(p)
        tree = _grow(binned, g, h, feats, params)
        model.trees.append(tree)
        if tree.n_leaves == 1:
            msg = f"round {m + 1}: no split with positive gain; stopping early"
            log.info(msg)
            model.notes.append(msg)
            break
        f += params.learning_rate * tree.predict(X)
    return model


def fit_boost(table: DataTable, params: BoostParams = BoostParams()) -> Booster:
    """Boost on the full one-hot (unstandardized) encoding of ``table``."""
    return fit_boost_design(encode_design(table), table.labels, params)


def predict_boost(model: Booster, rows) -> np.ndarray:
    """Probabilities for a table, a design matrix or a plain matrix."""
    if isinstance(rows, DataTable):
        design = encode_design(rows)
        if design.provenance != model.provenance:
            raise ValueError("table encoding does not match the model's columns")
        X = design.values
    elif isinstance(rows, DesignMatrix):
        X = rows.values
    else:
        X = np.asarray(rows, dtype=np.float64)
    return model.predict_proba(X)
