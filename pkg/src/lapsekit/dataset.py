"""Typed tabular container, schema files, dummy encoding and splitting.

A :class:`DataTable` keeps every column as a numpy array next to an explicit
boolean missing mask.  Columns carry one of five roles:

* ``identifier``  -- kept for data preparation, never modelled
* ``date``        -- calendar dates, consumed by feature engineering
* ``numeric``     -- real valued features
* ``categorical`` -- integer level codes into a declared level list
* ``target``      -- the binary 0/1 outcome
"""
from __future__ import annotations

import csv
import datetime as dt
import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

IDENTIFIER = "identifier"
DATE = "date"
NUMERIC = "numeric"
CATEGORICAL = "categorical"
TARGET = "target"
ROLES = (IDENTIFIER, DATE, NUMERIC, CATEGORICAL, TARGET)

NUMERIC_LEVEL = "numeric"


class DataError(ValueError):
    """Raised for schema violations and malformed data files."""


@dataclass(frozen=True)
class Column:
    name: str
    role: str
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.role not in ROLES:
            raise DataError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.role == CATEGORICAL:
            if not self.levels:
                raise DataError(f"column {self.name!r}: categorical without levels")
            if len(set(self.levels)) != len(self.levels):
                raise DataError(f"column {self.name!r}: duplicate levels")
        elif self.levels:
            raise DataError(f"column {self.name!r}: levels given for role {self.role}")

    def to_line(self) -> str:
        if self.role == CATEGORICAL:
            return f"{self.name}:{self.role}:{'|'.join(self.levels)}"
        return f"{self.name}:{self.role}"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered column descriptors with exactly one target."""

    columns: tuple[Column, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError("duplicate column names in schema")
        n_target = sum(c.role == TARGET for c in self.columns)
        if n_target != 1:
            raise DataError(f"schema needs exactly one target column, got {n_target}")

    def __getitem__(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def target(self) -> str:
        return next(c.name for c in self.columns if c.role == TARGET)

    @property
    def features(self) -> list[Column]:
        """Modelled columns (numeric and categorical) in schema order."""
        return [c for c in self.columns if c.role in (NUMERIC, CATEGORICAL)]

    def to_text(self) -> str:
        return "".join(c.to_line() + "\n" for c in self.columns)

    @classmethod
    def from_text(cls, text: str) -> "FeatureSchema":
        cols = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(":", 2)
            if len(parts) < 2:
                raise DataError(f"schema line {lineno}: expected name:role[:levels]")
            name, role = parts[0].strip(), parts[1].strip()
            levels = tuple(parts[2].split("|")) if len(parts) == 3 else ()
            try:
                cols.append(Column(name, role, levels))
            except DataError as exc:
                raise DataError(f"schema line {lineno}: {exc}") from None
        return cls(tuple(cols))

    def digest(self) -> str:
        """Stable hash of the modelled part of the schema (features + target)."""
        kept = [c.to_line() for c in self.columns if c.role in (NUMERIC, CATEGORICAL, TARGET)]
        return hashlib.sha256("\n".join(kept).encode()).hexdigest()[:16]

    def replace(self, columns: Iterable[Column]) -> "FeatureSchema":
        return FeatureSchema(tuple(columns))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.flags.writeable:
        a = a.copy()
        a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DataTable:
    """Columnar table; arrays are read-only once constructed.

    ``missing`` maps a column name to a boolean mask.  Columns without an entry
    have no missing values.  Masked slots hold a placeholder (0, NaT or "")
    that must never be read as data.
    """

    schema: FeatureSchema
    data: Mapping[str, np.ndarray]
    missing: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(self.data[c]) for c in self.schema.names if c in self.data}
        absent = [c for c in self.schema.names if c not in self.data]
        if absent:
            raise DataError(f"columns missing from table: {absent}")
        if len(lengths) > 1:
            raise DataError(f"column length mismatch: {sorted(lengths)}")
        data = {c: _frozen(self.data[c]) for c in self.schema.names}
        missing = {}
        for c, m in self.missing.items():
            m = np.asarray(m, dtype=bool)
            if m.any():
                missing[c] = _frozen(m)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "missing", missing)
        for col in self.schema.columns:
            v = data[col.name]
            ok = ~missing.get(col.name, np.zeros(len(v), bool))
            if col.role == TARGET:
                if col.name in missing:
                    raise DataError(f"target {col.name!r} has missing values")
                if not np.isin(v, (0, 1)).all():
                    raise DataError(f"non-binary target in {col.name!r}")
            elif col.role == CATEGORICAL:
                bad = ok & ((v < 0) | (v >= len(col.levels)))
                if bad.any():
                    raise DataError(f"column {col.name!r}: level code out of range "
                                    f"at row {int(np.argmax(bad))}")

    @property
    def n(self) -> int:
        return len(self.data[self.schema.names[0]]) if self.schema.names else 0

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[name]

    @property
    def labels(self) -> np.ndarray:
        return self.data[self.schema.target]

    def is_missing(self, name: str) -> np.ndarray:
        m = self.missing.get(name)
        return m if m is not None else np.zeros(self.n, dtype=bool)

    def has_missing(self, names: Iterable[str] | None = None) -> bool:
        names = self.schema.names if names is None else names
        return any(n in self.missing for n in names)

    def take(self, rows) -> "DataTable":
        rows = np.asarray(rows)
        return DataTable(
            self.schema,
            {c: v[rows] for c, v in self.data.items()},
            {c: m[rows] for c, m in self.missing.items()},
        )

    def drop(self, names: Iterable[str]) -> "DataTable":
        names = set(names)
        cols = [c for c in self.schema.columns if c.name not in names]
        return DataTable(
            self.schema.replace(cols),
            {c.name: self.data[c.name] for c in cols},
            {k: v for k, v in self.missing.items() if k not in names},
        )

    def with_columns(self, columns: Sequence[tuple[Column, np.ndarray, np.ndarray | None]]) -> "DataTable":
        """Add or replace columns; new columns are appended in the given order."""
        schema_cols = list(self.schema.columns)
        data = dict(self.data)
        missing = dict(self.missing)
        for col, values, mask in columns:
            idx = next((i for i, c in enumerate(schema_cols) if c.name == col.name), None)
            if idx is None:
                schema_cols.append(col)
            else:
                schema_cols[idx] = col
            data[col.name] = values
            missing.pop(col.name, None)
            if mask is not None:
                missing[col.name] = mask
        return DataTable(self.schema.replace(schema_cols), data, missing)

    def level_names(self, name: str) -> np.ndarray:
        col = self.schema[name]
        out = np.asarray(col.levels, dtype=object)[self.data[name]]
        out[self.is_missing(name)] = None
        return out


def concat(tables: Sequence[DataTable]) -> DataTable:
    schema = tables[0].schema
    for t in tables[1:]:
        if t.schema != schema:
            raise DataError("cannot concatenate tables with different schemas")
    data = {c: np.concatenate([t.data[c] for t in tables]) for c in schema.names}
    missing = {}
    for c in schema.names:
        if any(c in t.missing for t in tables):
            missing[c] = np.concatenate([t.is_missing(c) for t in tables])
    return DataTable(schema, data, missing)


# --------------------------------------------------------------------------
# file io

def read_schema(path) -> FeatureSchema:
    with open(path, encoding="utf-8") as fh:
        return FeatureSchema.from_text(fh.read())


def write_schema(schema: FeatureSchema, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(schema.to_text())


def _parse_cell(col: Column, text: str, lookup, row: int):
    if col.role == NUMERIC:
        try:
            v = float(text)
        except ValueError:
            raise DataError(f"row {row}, column {col.name!r}: not a number: {text!r}") from None
        if not np.isfinite(v):
            raise DataError(f"row {row}, column {col.name!r}: non-finite value")
        return v
    if col.role == CATEGORICAL:
        try:
            return lookup[text]
        except KeyError:
            raise DataError(f"row {row}, column {col.name!r}: level {text!r} "
                            f"not among declared levels") from None
    if col.role == DATE:
        try:
            return np.datetime64(dt.date.fromisoformat(text), "D")
        except ValueError:
            raise DataError(f"row {row}, column {col.name!r}: bad date {text!r}") from None
    if col.role == TARGET:
        if text not in ("0", "1"):
            raise DataError(f"row {row}, column {col.name!r}: non-binary target {text!r}")
        return int(text)
    return text


_DTYPES = {NUMERIC: np.float64, CATEGORICAL: np.int64, DATE: "datetime64[D]",
           TARGET: np.int64, IDENTIFIER: object}
_PLACEHOLDER = {NUMERIC: 0.0, CATEGORICAL: 0, DATE: np.datetime64("NaT"), IDENTIFIER: ""}


def load_table(path, schema_path) -> DataTable:
    """Read a CSV data file described by a schema sidecar file.

    Empty cells are missing values; a missing target is an error.
    """
    schema = read_schema(schema_path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        absent = [c for c in schema.names if c not in header]
        if absent:
            raise DataError(f"{path}: missing column(s) {absent}")
        pos = {c: header.index(c) for c in schema.names}
        lookups = {c.name: {lv: i for i, lv in enumerate(c.levels)} for c in schema.columns}
        cells: dict[str, list] = {c: [] for c in schema.names}
        masks: dict[str, list] = {c: [] for c in schema.names}
        for row, rec in enumerate(reader, 1):
            if len(rec) != len(header):
                raise DataError(f"{path}: row {row} has {len(rec)} fields, "
                                f"header has {len(header)}")
            for col in schema.columns:
                text = rec[pos[col.name]]
                if text == "":
                    if col.role == TARGET:
                        raise DataError(f"row {row}: missing target value")
                    cells[col.name].append(_PLACEHOLDER[col.role])
                    masks[col.name].append(True)
                else:
                    cells[col.name].append(_parse_cell(col, text, lookups[col.name], row))
                    masks[col.name].append(False)
    data = {c.name: np.array(cells[c.name], dtype=_DTYPES[c.role]) for c in schema.columns}
    missing = {c: np.array(m, dtype=bool) for c, m in masks.items()}
    return DataTable(schema, data, missing)


def _format_cell(col: Column, value) -> str:
    if col.role == NUMERIC:
        v = float(value)
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    if col.role == CATEGORICAL:
        return col.levels[int(value)]
    if col.role == DATE:
        return str(value)
    if col.role == TARGET:
        return str(int(value))
    return str(value)


def write_table(table: DataTable, path) -> None:
    """Write CSV with dot decimals; missing cells are left empty."""
    cols = table.schema.columns
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([c.name for c in cols])
        masks = [table.is_missing(c.name) for c in cols]
        arrays = [table[c.name] for c in cols]
        for i in range(table.n):
            w.writerow(["" if m[i] else _format_cell(c, a[i])
                        for c, a, m in zip(cols, arrays, masks)])


# --------------------------------------------------------------------------
# design matrices

@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Dummy-encoded numeric matrix.

    ``provenance[j]`` is ``(feature, level)`` for column ``j``; numeric
    features use the level ``"numeric"``.  When standardized, ``center`` and
    ``scale`` hold the per-column mean and standard deviation that were
    subtracted and divided; ``constant`` flags columns whose standard
    deviation was zero (those are centered only).
    """

    values: np.ndarray
    provenance: tuple[tuple[str, str], ...]
    center: np.ndarray | None = None
    scale: np.ndarray | None = None
    constant: np.ndarray | None = None

    @property
    def standardized(self) -> bool:
        return self.center is not None

    @property
    def shape(self):
        return self.values.shape

    def source(self, j: int) -> str:
        return self.provenance[j][0]

    def columns_of(self, feature: str) -> list[int]:
        return [j for j, (f, _) in enumerate(self.provenance) if f == feature]

    def destandardize(self) -> np.ndarray:
        if not self.standardized:
            return self.values
        return self.values * self.scale + self.center


def design_layout(schema: FeatureSchema) -> tuple[tuple[str, str], ...]:
    prov = []
    for col in schema.features:
        if col.role == NUMERIC:
            prov.append((col.name, NUMERIC_LEVEL))
        else:
            prov.extend((col.name, lv) for lv in col.levels)
    return tuple(prov)


def encode_design(table: DataTable, standardize: bool = False,
                  stats: tuple[np.ndarray, np.ndarray] | None = None) -> DesignMatrix:
    """Expand a table into a full one-hot design matrix.

    Parameters
    ----------
    table : DataTable
        Must hold no missing values in its feature columns.
    standardize : bool
        Center and scale each column.
    stats : (center, scale), optional
        Reuse standardization statistics from another design (e.g. the
        training portion) instead of estimating them from ``table``.
    """
    feats = table.schema.features
    bad = [c.name for c in feats if c.name in table.missing]
    if bad:
        raise DataError(f"missing values present in {bad}; impute first")
    blocks = []
    for col in feats:
        v = table[col.name]
        if col.role == NUMERIC:
            blocks.append(v.astype(np.float64)[:, None])
        else:
            onehot = np.zeros((table.n, len(col.levels)))
            onehot[np.arange(table.n), v] = 1.0
            blocks.append(onehot)
    values = np.hstack(blocks) if blocks else np.zeros((table.n, 0))
    prov = design_layout(table.schema)
    if stats is None and not standardize:
        return DesignMatrix(_frozen(values), prov)
    if stats is None:
        center = values.mean(axis=0)
        scale = values.std(axis=0)
    else:
        center, scale = (np.asarray(s, dtype=np.float64) for s in stats)
    constant = scale == 0
    scale = np.where(constant, 1.0, scale)
    values = (values - center) / scale
    return DesignMatrix(_frozen(values), prov, _frozen(center), _frozen(scale), _frozen(constant))


# --------------------------------------------------------------------------
# splitting

def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(table: DataTable, test_fraction: float, seed: int,
                     stratified: bool = True) -> tuple[DataTable, DataTable]:
    """Partition rows into train and test, preserving the class ratio."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test fraction must lie in (0, 1), got {test_fraction}")
    y = table.labels
    rng = np.random.default_rng(seed)
    if stratified:
        if y.min() == y.max():
            raise DataError("stratified split needs both classes")
        test = []
        for cls in (1, 0):
            idx = np.flatnonzero(y == cls)
            rng.shuffle(idx)
            test.append(idx[:_round_half_up(len(idx) * test_fraction)])
        test_idx = np.concatenate(test)
    else:
        perm = rng.permutation(table.n)
        test_idx = perm[:_round_half_up(table.n * test_fraction)]
    in_test = np.zeros(table.n, dtype=bool)
    in_test[test_idx] = True
    if in_test.all() or not in_test.any():
        raise DataError(f"test fraction {test_fraction} leaves an empty partition")
    return table.take(np.flatnonzero(~in_test)), table.take(np.flatnonzero(in_test))


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignment: np.ndarray
    stratified: bool

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        return np.flatnonzero(self.assignment != fold), np.flatnonzero(self.assignment == fold)

    def __iter__(self):
        return (self.train_test(f) for f in range(self.k))


def make_folds(table: DataTable, k: int, stratified: bool = True, seed: int = 0) -> FoldPlan:
    """Assign rows to ``k`` folds of near-equal size.

    Positives are dealt round-robin first and negatives continue the same
    cycle, so both fold sizes and per-fold positive counts differ by at most
    one.  Fold labels are then randomly permuted.
    """
    n = table.n
    if not 2 <= k <= n:
        raise DataError(f"fold count must satisfy 2 <= k <= n={n}, got {k}")
    rng = np.random.default_rng(seed)
    if stratified:
        y = table.labels
        pos = rng.permutation(np.flatnonzero(y == 1))
        neg = rng.permutation(np.flatnonzero(y == 0))
        order = np.concatenate([pos, neg])
    else:
        order = rng.permutation(n)
    relabel = rng.permutation(k)
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = relabel[np.arange(n) % k]
    return FoldPlan(k, _frozen(assignment), stratified)
