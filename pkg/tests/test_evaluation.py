import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lapsekit.evaluation import (EvalError, aggregate_curves, auc, brier, confusion_at,
                                 curve_rows, metrics, pooled_curve, pr_curve, roc_auc, roc_curve)


def concordance(scores, labels):
    """P(score+ > score-) + P(tie) / 2 over all positive/negative pairs."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    pos, neg = s[y == 1], s[y == 0]
    diff = pos[:, None] - neg[None, :]
    return ((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size


scored = st.integers(2, 60).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 8).map(lambda v: v / 8), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
)).filter(lambda t: 0 < sum(t[1]) < len(t[1]))


def test_confusion_examples():
    cm = confusion_at([0.9, 0.1], [1, 0])
    assert (cm.TP, cm.TN, cm.FP, cm.FN) == (1, 1, 0, 0)
    assert confusion_at([0.5], [1], 0.5).TP == 0
    cm = confusion_at([0, 0, 0], [1, 0, 1])
    assert cm.P_hat == 0 and metrics(cm).f1 == 0.0 and metrics(cm).precision == 0.0
    with pytest.raises(EvalError):
        confusion_at([0.1, 0.2], [1])


@given(scored, st.floats(0, 1))
def test_confusion_marginals(sy, thr):
    s, y = sy
    cm = confusion_at(s, y, thr)
    y = np.asarray(y)
    assert cm.P == y.sum() and cm.N == len(y) - y.sum() and cm.n == len(y)
    assert cm.P_hat == (np.asarray(s) > thr).sum()
    assert cm.N_hat + cm.P_hat == cm.n


def test_metric_values():
    from lapsekit.evaluation import ConfusionMatrix
    m = metrics(ConfusionMatrix(TN=5, FP=1, FN=1, TP=2))
    assert m.precision == pytest.approx(2 / 3) and m.recall == pytest.approx(2 / 3)
    assert m.f1 == pytest.approx(2 / 3)
    perfect = metrics(confusion_at([0.9, 0.8, 0.1], [1, 1, 0]))
    assert perfect.f1 == 1.0 and perfect.balanced_accuracy == 1.0
    no_neg = metrics(ConfusionMatrix(TN=0, FP=0, FN=1, TP=2))
    assert math.isnan(no_neg.tnr) and "balanced_accuracy" in no_neg.undefined
    no_pos = metrics(ConfusionMatrix(TN=3, FP=1, FN=0, TP=0))
    assert math.isnan(no_pos.recall) and no_pos.f1 == 0.0


def test_brier_base_rate():
    y = np.r_[np.ones(10), np.zeros(360)]
    assert brier(np.full(370, 1 / 37), y) == pytest.approx((1 / 37) * (36 / 37), rel=1e-12)


def test_roc_examples():
    c = roc_curve([0.9, 0.4, 0.1], [1, 1, 0])
    assert c.points() == [(0, 0), (0, 0.5), (0, 1), (1, 1)]
    assert auc(c) == 1.0
    assert roc_curve([0.3, 0.3, 0.3], [1, 0, 1]).points() == [(0, 0), (1, 1)]
    assert roc_auc([0.3, 0.3], [1, 0]) == 0.5
    assert roc_auc([0.9, 0.8, 0.3], [1, 0, 1]) == 0.5
    with pytest.raises(EvalError):
        roc_curve([0.1, 0.2], [1, 1])


def test_pr_examples():
    c = pr_curve([0.9, 0.4, 0.1], [1, 0, 0])
    assert c.points()[0] == (1.0, 1.0)
    assert pr_curve([0.9, 0.8, 0.3], [1, 1, 0]).points()[1] == (1.0, 1.0)
    with pytest.raises(EvalError):
        pr_curve([0.1], [0])


def test_random_scorer_precision_near_base_rate():
    rng = np.random.default_rng(0)
    y = (rng.random(37000) < 1 / 37).astype(int)
    c = pr_curve(rng.random(37000), y)
    tail = c.y[c.x >= 0.2]
    assert abs(np.median(tail) - y.mean()) < 0.003


@given(scored)
def test_auc_equals_concordance(sy):
    s, y = sy
    assert abs(roc_auc(s, y) - concordance(s, y)) <= 1e-12


@given(scored)
def test_flip_symmetry(sy):
    s, y = sy
    assert roc_auc(-np.asarray(s), 1 - np.asarray(y)) == pytest.approx(roc_auc(s, y), abs=1e-12)


@given(scored)
def test_monotone_transform_invariance(sy):
    s, y = sy
    s = np.asarray(s)
    t = np.exp(3 * s) - 7
    assert roc_curve(t, y).points() == roc_curve(s, y).points()
    assert pr_curve(t, y).points() == pr_curve(s, y).points()


@given(scored)
def test_roc_shape(sy):
    c = roc_curve(*sy)
    assert c.points()[0] == (0, 0) and c.points()[-1] == (1, 1)
    assert np.all(np.diff(c.x) >= 0) and np.all(np.diff(c.y) >= 0)
    p = pr_curve(*sy)
    assert np.all(np.diff(p.x) >= 0)


def test_aggregate_identity_and_between():
    a = roc_curve([0.9, 0.7, 0.4, 0.2], [1, 0, 1, 0])
    b = roc_curve([0.9, 0.7, 0.4, 0.2], [0, 1, 1, 0])
    same = aggregate_curves([a, a])
    np.testing.assert_array_equal(same.band[0], same.band[1])
    np.testing.assert_array_equal(same.y, same.band[0])
    mix = aggregate_curves([a, b])
    assert np.all(mix.y >= mix.band[0]) and np.all(mix.y <= mix.band[1])
    assert len(mix) == 101
    with pytest.raises(EvalError):
        aggregate_curves([a, pr_curve([0.9, 0.1], [1, 0])])
    with pytest.raises(EvalError):
        aggregate_curves([a])


def test_aggregate_monotone_over_folds():
    rng = np.random.default_rng(3)
    curves = []
    for _ in range(10):
        y = rng.integers(0, 2, 80)
        curves.append(roc_curve(y + rng.normal(0, 1.2, 80), y))
    agg = aggregate_curves(curves)
    assert np.all(np.diff(agg.y) >= -1e-15)
    assert agg.y[-1] == 1.0


def test_pooled_and_rows():
    c = pooled_curve("roc", [[0.9, 0.1], [0.8]], [[1, 0], [0]])
    assert c.points()[-1] == (1, 1)
    rows = curve_rows(c, 3)
    assert rows[0][:2] == ("roc", 3) and rows[0][2] == math.inf
