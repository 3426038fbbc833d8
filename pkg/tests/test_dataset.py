import numpy as np
import pytest
from hypothesis import given, strategies as st

from lapsekit.dataset import (CATEGORICAL, NUMERIC, Column, DataError, FeatureSchema,
                              concat, encode_design, load_table, make_folds,
                              stratified_split, write_schema, write_table)
from _util import make_table

SCHEMA = """\
contract_id:identifier
begin_date:date
sum_insured:numeric
gender:categorical:F|M
lapsed:target
"""


def _write(tmp_path, body, schema=SCHEMA):
    (tmp_path / "s.txt").write_text(schema)
    (tmp_path / "d.csv").write_text(body)
    return tmp_path / "d.csv", tmp_path / "s.txt"


def test_load_five_rows(tmp_path):
    body = "contract_id,begin_date,sum_insured,gender,lapsed\n" + "".join(
        f"c{i},2001-02-01,{1000 * i},{'FM'[i % 2]},{i % 2}\n" for i in range(5))
    t = load_table(*_write(tmp_path, body))
    assert t.n == 5
    np.testing.assert_array_equal(t["gender"], [0, 1, 0, 1, 0])
    assert t["begin_date"][0] == np.datetime64("2001-02-01")


def test_empty_cells_become_masks(tmp_path):
    body = "contract_id,begin_date,sum_insured,gender,lapsed\nc1,,,F,0\nc2,2001-01-01,5,,1\n"
    t = load_table(*_write(tmp_path, body))
    np.testing.assert_array_equal(t.is_missing("sum_insured"), [True, False])
    np.testing.assert_array_equal(t.is_missing("gender"), [False, True])
    assert t.has_missing(["begin_date"])


def test_non_binary_target(tmp_path):
    body = "contract_id,begin_date,sum_insured,gender,lapsed\nc1,2001-01-01,1,F,2\n"
    with pytest.raises(DataError, match="non-binary target"):
        load_table(*_write(tmp_path, body))


def test_undeclared_level_names_row_and_level(tmp_path):
    body = "contract_id,begin_date,sum_insured,gender,lapsed\nc1,2001-01-01,1,F,0\nc2,2001-01-01,1,X,0\n"
    with pytest.raises(DataError, match=r"row 2.*'X'"):
        load_table(*_write(tmp_path, body))


def test_schema_needs_one_target():
    with pytest.raises(DataError):
        FeatureSchema((Column("a", NUMERIC),))
    with pytest.raises(DataError):
        Column("g", CATEGORICAL, ("a", "a"))


def test_csv_round_trip(tmp_path):
    body = ("contract_id,begin_date,sum_insured,gender,lapsed\n"
            "c1,2001-01-01,1.25,F,0\nc2,,7,,1\n")
    t = load_table(*_write(tmp_path, body))
    write_table(t, tmp_path / "o.csv")
    write_schema(t.schema, tmp_path / "o.txt")
    assert (tmp_path / "o.csv").read_text() == body
    t2 = load_table(tmp_path / "o.csv", tmp_path / "o.txt")
    assert t2.schema == t.schema
    for c in t.schema.names:
        np.testing.assert_array_equal(t2.is_missing(c), t.is_missing(c))


def test_encode_counts_and_one_hot():
    t = make_table([0, 1, 0, 1], {"x": [1, 2, 3, 4]}, {"g": ([0, 1, 2, 1], "abc")})
    d = encode_design(t)
    assert d.shape == (4, 4)
    assert d.provenance == (("x", "numeric"), ("g", "a"), ("g", "b"), ("g", "c"))
    np.testing.assert_array_equal(d.values[:, 1:].sum(axis=1), 1.0)


def test_identifiers_never_encoded(portfolio):
    table, _ = portfolio
    feats = {f for f, _ in encode_design(table).provenance}
    assert "contract_id" not in feats and "part_id" not in feats and "lapsed" not in feats


def test_standardize_and_invert():
    rng = np.random.default_rng(0)
    t = make_table(rng.integers(0, 2, 50), {"a": rng.normal(3, 2, 50), "b": rng.exponential(size=50),
                                            "c": np.ones(50)})
    d = encode_design(t, standardize=True)
    ok = ~d.constant
    np.testing.assert_allclose(d.values[:, ok].mean(axis=0), 0, atol=1e-10)
    np.testing.assert_allclose(d.values[:, ok].std(axis=0), 1, atol=1e-10)
    assert d.constant.tolist() == [False, False, True]
    np.testing.assert_allclose(d.destandardize(), encode_design(t).values, atol=1e-12)
    # reuse of training statistics
    d2 = encode_design(t.take(np.arange(10)), stats=(d.center, d.scale))
    np.testing.assert_array_equal(d2.values, d.values[:10])


def test_split_exact_stratification():
    y = np.r_[np.ones(10), np.zeros(90)].astype(int)
    t = make_table(y, {"x": np.arange(100)})
    tr, te = stratified_split(t, 0.2, seed=1)
    assert te.labels.sum() == 2 and te.n == 20 and tr.n == 80
    tr2, te2 = stratified_split(t, 0.2, seed=1)
    np.testing.assert_array_equal(te["x"], te2["x"])
    for f in (0.0, 1.0):
        with pytest.raises(DataError):
            stratified_split(t, f, seed=1)


def test_folds_examples():
    t = make_table(np.r_[1, np.zeros(9)].astype(int), {"x": np.arange(10)})
    plan = make_folds(t, 10)
    assert sorted(np.bincount(plan.assignment).tolist()) == [1] * 10
    t37 = make_table(np.r_[1, np.zeros(36)].astype(int), {"x": np.arange(37)})
    a = make_folds(t37, 10).assignment
    assert len(set(a[t37.labels == 1])) == 1
    t100 = make_table(np.r_[np.ones(10), np.zeros(90)].astype(int), {"x": np.arange(100)})
    plan = make_folds(t100, 10, seed=5)
    for _, te in plan:
        assert t100.labels[te].sum() == 1


@given(n=st.integers(10, 120), k=st.integers(2, 10), seed=st.integers(0, 10_000))
def test_folds_cover_every_row_once(n, k, seed):
    y = (np.arange(n) % 4 == 0).astype(int)
    t = make_table(y, {"x": np.arange(n)})
    plan = make_folds(t, k, seed=seed)
    test_rows = np.concatenate([te for _, te in plan])
    np.testing.assert_array_equal(np.sort(test_rows), np.arange(n))
    sizes = np.bincount(plan.assignment, minlength=k)
    assert sizes.max() - sizes.min() <= 1


def test_concat_and_take():
    t = make_table([0, 1], {"x": [1.0, 2.0]}, missing={"x": np.array([True, False])})
    c = concat([t, t.take([1])])
    assert c.n == 3
    np.testing.assert_array_equal(c.is_missing("x"), [True, False, False])


def test_tables_are_read_only():
    t = make_table([0, 1], {"x": [1.0, 2.0]})
    with pytest.raises(ValueError):
        t["x"][0] = 5.0
