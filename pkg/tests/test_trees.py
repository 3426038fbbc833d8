import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lapsekit.dataset import encode_design
from lapsekit.evaluation import roc_auc
from lapsekit.linear import sigmoid
from lapsekit.trees import (Binned, BoostParams, CartParams, FeatureSpec, ForestParams, Tree,
                            TreeNode, best_split, feature_matrix, fit_boost, fit_boost_design,
                            fit_cart, fit_forest, gini_importance, gini_impurity, leaf_weight,
                            predict_boost, predict_forest, prune)
from lapsekit.trees.forest import Forest
from _util import make_table, planted_table


def _node_gini_mass(y):
    n = len(y)
    p = y.mean()
    return n * 2 * p * (1 - p)


def exhaustive_split(X, y, categorical, min_child=1):
    """Best (gain, feature, threshold-or-subset) by enumerating every split."""
    parent = _node_gini_mass(y)
    best = []
    for f in range(X.shape[1]):
        x = X[:, f]
        vals = np.unique(x)
        if categorical[f]:
            cands = [frozenset(s) for r in range(1, len(vals))
                     for s in itertools.combinations(vals.tolist(), r)]
            masks = [(np.isin(x, list(s)), s) for s in cands]
        else:
            masks = [(x <= (a + b) / 2, (a + b) / 2) for a, b in zip(vals[:-1], vals[1:])]
        for left, spec in masks:
            if left.sum() < min_child or (~left).sum() < min_child:
                continue
            gain = parent - _node_gini_mass(y[left]) - _node_gini_mass(y[~left])
            best.append((gain, f, spec))
    return best


def test_gini_values():
    assert gini_impurity((5, 5)) == 0.5
    assert gini_impurity((10, 0)) == 0.0
    assert gini_impurity((3, 1)) == 0.375
    with pytest.raises(ValueError):
        gini_impurity((0, 0))


def test_perfect_and_constant_features():
    y = np.array([0, 0, 1, 1, 0, 1])
    X = np.column_stack([np.ones(6), y.astype(float)])
    b = Binned(X, FeatureSpec.numeric(["c", "y"]))
    s = best_split(b, y, np.arange(6), range(2))
    assert s.feature == 1 and s.threshold == 0.5
    assert s.decrease == pytest.approx(gini_impurity((3, 3)))
    assert best_split(b, y, np.arange(6), [0]) is None


@given(data=st.data())
def test_best_split_equals_exhaustive(data):
    n = data.draw(st.integers(2, 30))
    p = data.draw(st.integers(1, 3))
    seed = data.draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, (n, p)).astype(float)
    y = rng.integers(0, 2, n)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    b = Binned(X, FeatureSpec.numeric([f"f{j}" for j in range(p)]))
    got = best_split(b, y, np.arange(n), range(p))
    cands = exhaustive_split(X, y, [False] * p)
    if not cands:
        assert got is None
        return
    top = max(c[0] for c in cands)
    first = min((c for c in cands if c[0] >= top - 1e-9), key=lambda c: (c[1], c[2]))
    assert got.gain == pytest.approx(max(top, 0.0), abs=1e-12)
    assert (got.feature, got.threshold) == (first[1], first[2])


@given(seed=st.integers(0, 2**31), n=st.integers(4, 30), k=st.integers(2, 5),
       min_child=st.integers(1, 4))
def test_categorical_prefix_is_optimal(seed, n, k, min_child):
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.integers(0, k, n), rng.normal(size=n).round(1)]).astype(float)
    y = rng.integers(0, 2, n)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    spec = FeatureSpec(("g", "x"), (True, False), (tuple("abcde"[:k]), ()))
    got = best_split(Binned(X, spec), y, np.arange(n), [0], min_child)
    # subsets beyond rate-ordered prefixes only matter without a size floor
    cands = exhaustive_split(X[:, :1], y, [True], 1 if min_child == 1 else min_child)
    if min_child == 1:
        if not cands:
            assert got is None
        else:
            assert got.gain == pytest.approx(max(max(c[0] for c in cands), 0.0), abs=1e-12)
    elif got is not None:
        assert got.n_left >= min_child and got.n_right >= min_child


def test_stump_and_pure_and_xor():
    t = planted_table(300, 0)
    stump = fit_cart(t, CartParams(max_depth=1))
    assert stump.tree.n_leaves <= 2
    pure = make_table(np.zeros(10, int), {"x": np.arange(10)})
    assert len(fit_cart(pure).tree) == 1
    a = np.repeat([0, 0, 1, 1], 5)
    b = np.repeat([0, 1, 0, 1], 5)
    xor = make_table(a ^ b, {"a": a, "b": b})
    m = fit_cart(xor, CartParams(max_depth=2))
    X, _ = feature_matrix(xor)
    assert np.all((m.predict_proba(X) > 0.5) == (a ^ b))


def _check_structure(tree: Tree):
    for nd in tree.nodes:
        if nd.is_leaf:
            assert nd.left == nd.right == -1
        else:
            l, r = tree.nodes[nd.left], tree.nodes[nd.right]
            assert l.n + r.n == nd.n and l.parent == r.parent == nd.id
        assert 0 < nd.n / tree.n_root <= 1


def test_tree_invariants_and_limits():
    t = planted_table(500, 1)
    m = fit_cart(t, CartParams(max_depth=4, min_node_size=15))
    _check_structure(m.tree)
    assert m.tree.depth <= 4
    leaves = [nd for nd in m.tree.nodes if nd.is_leaf]
    assert min(nd.n for nd in leaves) >= 15
    big_eps = fit_cart(t, CartParams(min_decrease=1.0))
    assert len(big_eps.tree) == 1


def test_categorical_splits_in_trees():
    rng = np.random.default_rng(0)
    g = rng.integers(0, 4, 400)
    y = (rng.random(400) < np.array([0.1, 0.8, 0.2, 0.9])[g]).astype(int)
    t = make_table(y, categorical={"g": (g, "abcd")})
    m = fit_cart(t, CartParams(max_depth=1))
    assert m.tree.nodes[0].left_levels == frozenset({0, 2})


def test_pruning_shrinks_tree():
    t = planted_table(600, 2)
    full = fit_cart(t, CartParams(min_node_size=5))
    pruned = prune(full.tree, 0.002)
    _check_structure(pruned)
    assert pruned.n_leaves < full.tree.n_leaves
    assert prune(full.tree, 10.0).n_leaves == 1


def test_forest_reduces_to_cart():
    t = planted_table(300, 3)
    p = 4
    forest = fit_forest(t, ForestParams(ntree=1, ntry=p, bootstrap=False, nodesize=3))
    cart = fit_cart(t, CartParams(min_node_size=3))
    assert forest.trees[0].nodes == cart.tree.nodes


def test_forest_thread_independent():
    t = planted_table(400, 4)
    params = ForestParams(ntree=6, ntry=2, nodesize=5, seed=9)
    a = fit_forest(t, params, threads=1)
    b = fit_forest(t, params, threads=3)
    assert all(x.nodes == y.nodes for x, y in zip(a.trees, b.trees))
    c = fit_forest(t, ForestParams(ntree=6, ntry=2, nodesize=5, seed=10))
    assert any(x.nodes != y.nodes for x, y in zip(a.trees, c.trees))


def _leaf(value):
    return Tree([TreeNode(0, -1, 0, 10, 0.0, value)], 10)


def test_forest_prediction_modes():
    spec = FeatureSpec.numeric(["x"])
    X = np.zeros((1, 1))
    f = Forest([_leaf(0.2), _leaf(0.6)], spec, ForestParams(ntree=2))
    assert predict_forest(f, X, "proba")[0] == pytest.approx(0.4)
    assert predict_forest(f, X, "vote")[0] == 0  # one vote each: tie
    agree = Forest([_leaf(0.7), _leaf(0.9), _leaf(0.6)], spec, ForestParams(ntree=3))
    assert predict_forest(agree, X, "vote")[0] == 1


def test_forest_params_validation():
    with pytest.raises(ValueError):
        ForestParams(ntree=0)
    with pytest.raises(ValueError):
        fit_forest(planted_table(50, 0), ForestParams(ntree=1, ntry=9))
    assert ForestParams().resolved_ntry(21) == 4


def test_more_trees_do_not_hurt():
    aucs = {10: [], 300: []}
    for seed in range(5):
        tr, te = planted_table(800, seed), planted_table(800, seed + 100)
        X, _ = feature_matrix(te)
        for k in aucs:
            f = fit_forest(tr, ForestParams(ntree=k, nodesize=10, seed=seed))
            aucs[k].append(roc_auc(f.predict_proba(X), te.labels))
    assert np.mean(aucs[300]) >= np.mean(aucs[10]) - 0.002


def test_leaf_weight_examples():
    assert leaf_weight(4.0, 2.0, 0.0, 0.0) == -2.0
    assert leaf_weight(0.5, 2.0, 1.0, 1.0) == 0.0
    assert leaf_weight(-0.5, 2.0, 1.0, 1.0) == 0.0
    assert leaf_weight(3.0, 1.0, 1.0, 1.0) == -1.0


def _separable():
    x = np.linspace(-2, 2, 40)
    y = (x > 0.1).astype(int)
    return make_table(y, {"x": x, "z": np.cos(7 * x)})


def test_boost_loss_strictly_decreases():
    t = _separable()
    params = BoostParams(rounds=30, learning_rate=0.1, max_depth=2, reg_l2=0.0,
                         reg_l1=0.0, reg_leafcount=0.0, min_child_hessian=0.0)
    model = fit_boost(t, params)
    X = encode_design(t).values
    y = t.labels
    f = np.full(t.n, np.log(y.mean() / (1 - y.mean())))
    losses = [np.mean(np.logaddexp(0, f) - y * f)]
    for tree in model.trees:
        f = f + 0.1 * tree.predict(X)
        losses.append(np.mean(np.logaddexp(0, f) - y * f))
    assert len(model.trees) == 30
    assert np.all(np.diff(losses) < 0)


def test_boost_leaf_weights_closed_form():
    t = planted_table(400, 5)
    params = BoostParams(rounds=5, max_depth=3, reg_l2=0.7, reg_l1=0.3, min_child_hessian=0.5)
    model = fit_boost(t, params)
    for tree in model.trees:
        for nd in tree.nodes:
            if nd.is_leaf:
                T = np.sign(nd.grad) * max(abs(nd.grad) - 0.3, 0.0)
                assert abs(nd.value - (-T / (nd.hess + 0.7))) <= 1e-10


def test_boost_large_leaf_penalty_gives_single_leaves(caplog):
    t = planted_table(300, 6)
    with caplog.at_level(logging.INFO):
        model = fit_boost(t, BoostParams(rounds=10, reg_leafcount=1e6))
    assert all(tree.n_leaves == 1 for tree in model.trees)
    assert len(model.trees) == 1 and model.notes
    assert "stopping early" in caplog.text


def test_boost_prediction_structure():
    t = _separable()
    model = fit_boost(t, BoostParams(rounds=1, max_depth=1, min_child_hessian=0.0))
    p = predict_boost(model, t)
    assert len(np.unique(p)) == 2 and np.all((p > 0) & (p < 1))
    model.trees.clear()
    np.testing.assert_allclose(predict_boost(model, t), t.labels.mean())


def test_boost_design_input_and_params():
    t = planted_table(200, 7)
    d = encode_design(t)
    a = fit_boost_design(d, t.labels, BoostParams(rounds=3))
    b = fit_boost(t, BoostParams(rounds=3))
    np.testing.assert_array_equal(predict_boost(a, d), predict_boost(b, t))
    with pytest.raises(ValueError):
        BoostParams(reg_l2=-1)
    with pytest.raises(ValueError):
        BoostParams(learning_rate=0)


def test_importance_hand_example():
    nodes = [TreeNode(0, -1, 0, 100, 0.5, 0.3, feature=0, threshold=0.5, left=1, right=2, decrease=0.18),
             TreeNode(1, 0, 1, 50, 0.4, 0.2, feature=1, threshold=0.5, left=3, right=4, decrease=0.08),
             TreeNode(2, 0, 1, 50, 0.1, 0.1),
             TreeNode(3, 1, 2, 25, 0.0, 0.0), TreeNode(4, 1, 2, 25, 0.0, 1.0)]
    f = Forest([Tree(nodes, 100)], FeatureSpec.numeric(["x1", "x2", "x3"]), ForestParams(ntree=1))
    np.testing.assert_allclose(gini_importance(f), [0.18, 0.04, 0.0])
    # averaging over trees
    f2 = Forest([Tree(nodes, 100), _leaf(0.5)], f.spec, ForestParams(ntree=2))
    np.testing.assert_allclose(gini_importance(f2), [0.09, 0.02, 0.0])


def test_importance_drops_when_feature_permuted():
    drops = []
    for seed in range(5):
        t = planted_table(500, seed)
        params = ForestParams(ntree=20, nodesize=5, seed=seed)
        base = gini_importance(fit_forest(t, params))[0]
        rng = np.random.default_rng(seed)
        perm = t.with_columns([(t.schema["x1"], rng.permutation(t["x1"]), None)])
        drops.append(base - gini_importance(fit_forest(perm, params))[0])
    assert np.mean(drops) > 0


def test_boost_importance_uses_gain():
    t = planted_table(300, 8)
    model = fit_boost(t, BoostParams(rounds=4, max_depth=2))
    vi = gini_importance(model)
    manual = np.zeros(len(model.provenance))
    for tree in model.trees:
        for nd in tree.nodes:
            if not nd.is_leaf:
                manual[nd.feature] += nd.decrease * nd.n / tree.n_root
    np.testing.assert_allclose(vi, manual / len(model.trees))
    assert vi.sum() > 0
