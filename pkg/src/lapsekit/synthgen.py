"""Synthetic endowment / pension portfolios with a planted lapse mechanism.

The real inventory data behind lapse studies is confidential, so this module
draws contracts from simple parametric shapes and plants a logistic lapse
model over engineered features:

* lapse odds rise with the remaining contract term,
* fall with the (log) sum insured,
* rise with dunning / collection events,
* shift with the occupation category,
* plus two terms no linear logit can express: a U-shape in insured age and
  an interaction flag for young policyholders with small contracts.

It also implements the data preparation steps applied to such inventories:
imputation, duration and age features, and contract selection.
"""
from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .config import ConfigError, parse_kv, read_kv, split_list
from .dataset import (CATEGORICAL, DATE, IDENTIFIER, NUMERIC, TARGET, Column,
                      DataTable, FeatureSchema)

log = logging.getLogger(__name__)

PRODUCTS = ("endowment", "pension")
GENDERS = ("F", "M")
OCCUPATIONS = tuple(f"occ_{i}" for i in range(1, 9))
REGIONS = tuple(f"region_{i}" for i in range(1, 7))
PART_TYPES = ("main", "disability", "accident", "term_life")
SUPPLEMENTS = PART_TYPES[1:]
STATUSES = ("active", "benefit")
N_COLLECTION = 8
COLLECTION = tuple(f"coll_{i}" for i in range(1, N_COLLECTION + 1))

# guaranteed actuarial interest rate by contract start (percent)
_RATE_STEPS = ((2017, 0.9), (2015, 1.25), (2012, 1.75), (2007, 2.25),
               (2004, 2.75), (2000, 3.25), (0, 4.0))

DEFAULT_GROUPS = {
    "remaining_duration": "time", "total_duration": "time", "insured_age": "time",
    "sum_insured": "contract", "annual_premium": "contract", "interest_rate": "contract",
    "rejected_dynamics": "contract", "occupation": "contract", "sales_region": "contract",
    "insured_gender": "contract",
    **{f"incl_{s}": "contract" for s in SUPPLEMENTS},
    **{c: "collection" for c in COLLECTION},
}


@dataclass(frozen=True)
class PortfolioConfig:
    n_contracts: int = 20000
    product: str = "pension"
    imbalance_rate: float = 36.0
    seed: int = 0
    reference_date: dt.date = dt.date(2018, 1, 1)
    effect_remaining: float = 0.06
    effect_log_sum_insured: float = -0.4
    effect_collection: tuple[float, ...] = (0.5, 0.5, 0.6, 0.6, 0.6, 0.7, 0.0, 0.0)
    effect_occupation: tuple[float, ...] = (0.0, 0.5, -0.7, 0.6, -0.7, 0.5, 0.7, -0.7)
    effect_rejected_dynamics: float = 0.2
    effect_age_u: float = 0.8
    effect_interaction: float = 0.6
    sum_insured_median: float = 25000.0
    sum_insured_sigma: float = 0.9
    extra_fraction: float = 0.05
    supplementary_rates: tuple[float, ...] = (0.15, 0.10, 0.05)
    single_premium_rate: float = 0.10
    insured_missing_rate: float = 0.03
    holder_missing_rate: float = 0.01

    def __post_init__(self):
        if self.n_contracts < 100:
            raise ConfigError(f"n_contracts must be >= 100, got {self.n_contracts}")
        if self.product not in PRODUCTS:
            raise ConfigError(f"product must be one of {PRODUCTS}, got {self.product!r}")
        if self.imbalance_rate < 1:
            raise ConfigError(f"imbalance_rate must be >= 1, got {self.imbalance_rate}")
        if len(self.effect_collection) != N_COLLECTION:
            raise ConfigError(f"effect_collection needs {N_COLLECTION} values")
        if len(self.effect_occupation) != len(OCCUPATIONS):
            raise ConfigError(f"effect_occupation needs {len(OCCUPATIONS)} values")
        if len(self.supplementary_rates) != len(SUPPLEMENTS):
            raise ConfigError(f"supplementary_rates needs {len(SUPPLEMENTS)} values")

    @classmethod
    def from_mapping(cls, items: dict[str, str]) -> "PortfolioConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        kw = {}
        for key, value in items.items():
            if key not in kinds:
                raise ConfigError(f"unknown config key {key!r}")
            kind = kinds[key]
            try:
                if kind == "int":
                    kw[key] = int(value)
                elif kind == "float":
                    kw[key] = float(value)
                elif kind == "dt.date":
                    kw[key] = dt.date.fromisoformat(value)
                elif kind.startswith("tuple"):
                    kw[key] = tuple(float(v) for v in split_list(value))
                else:
                    kw[key] = value
            except ValueError:
                raise ConfigError(f"bad value for {key!r}: {value!r}") from None
        return cls(**kw)

    @classmethod
    def from_text(cls, text: str) -> "PortfolioConfig":
        return cls.from_mapping(parse_kv(text))

    @classmethod
    def from_file(cls, path) -> "PortfolioConfig":
        return cls.from_mapping(read_kv(path))

    def to_items(self) -> list[tuple[str, str]]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            out.append((f.name, ", ".join(map(repr, v)) if isinstance(v, tuple) else str(v)))
        return out

    def null_model(self) -> "PortfolioConfig":
        """Same portfolio shapes with every planted effect switched off."""
        return replace(self, effect_remaining=0.0, effect_log_sum_insured=0.0,
                       effect_collection=(0.0,) * N_COLLECTION,
                       effect_occupation=(0.0,) * len(OCCUPATIONS),
                       effect_rejected_dynamics=0.0, effect_age_u=0.0,
                       effect_interaction=0.0)


@dataclass
class GroundTruth:
    intercept: float
    coefficients: dict[str, float]
    target_fraction: float
    expected_fraction: float
    realized_fraction: float = field(default=float("nan"))

    def rows(self) -> list[tuple[str, float]]:
        return [("intercept", self.intercept), *self.coefficients.items()]


class CalibrationError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# date helpers

def add_months(d: dt.date, months: int) -> dt.date:
    """Calendar month arithmetic; the day is clamped to the month's end."""
    total = d.year * 12 + (d.month - 1) + months
    year, month = divmod(total, 12)
    month += 1
    if month == 12:
        last = 31
    else:
        last = (dt.date(year, month + 1, 1) - dt.timedelta(days=1)).day
    return dt.date(year, month, min(d.day, last))


def semi_annual_age(birth: dt.date, reference: dt.date) -> int:
    """Age in whole years under the semi-annual method.

    The exact age is rounded half-up: from six calendar months after a
    birthday on, the person counts as one year older.
    """
    if birth >= reference:
        raise ValueError(f"birth date {birth} not before reference {reference}")
    years = reference.year - birth.year
    if add_months(birth, 12 * years) > reference:
        years -= 1
    half = add_months(birth, 12 * years + 6)
    return years + (reference >= half)


def year_fraction(start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Actual/365.25 year fraction between datetime64[D] arrays."""
    days = (np.asarray(end, "datetime64[D]") - np.asarray(start, "datetime64[D]")).astype(np.int64)
    return days / 365.25


def _to_date(x: np.datetime64) -> dt.date:
    return x.astype("datetime64[D]").astype(dt.date)


def _ages(births: np.ndarray, reference: dt.date, mask: np.ndarray | None = None) -> np.ndarray:
    out = np.zeros(len(births))
    for i, b in enumerate(births):
        if mask is not None and mask[i]:
            continue
        out[i] = semi_annual_age(_to_date(b), reference)
    return out


def _first_of_month(years: np.ndarray, months: np.ndarray) -> np.ndarray:
    return (np.asarray(years - 1970) * 12 + (months - 1)).astype("datetime64[M]").astype("datetime64[D]")


def interest_rate_for(years: np.ndarray) -> np.ndarray:
    out = np.empty(len(years))
    for i, y in enumerate(years):
        out[i] = next(r for start, r in _RATE_STEPS if y >= start)
    return out


def _sigmoid(x):
    return np.exp(-np.logaddexp(0.0, -x))


# --------------------------------------------------------------------------
# generation

RAW_SCHEMA = FeatureSchema((
    Column("contract_id", IDENTIFIER),
    Column("part_id", IDENTIFIER),
    Column("part_type", CATEGORICAL, PART_TYPES),
    Column("status", CATEGORICAL, STATUSES),
    Column("begin_date", DATE),
    Column("end_date", DATE),
    Column("death_date", DATE),
    Column("sum_insured", NUMERIC),
    Column("annual_premium", NUMERIC),
    Column("interest_rate", NUMERIC),
    Column("insured_birth", DATE),
    Column("insured_gender", CATEGORICAL, GENDERS),
    Column("holder_birth", DATE),
    Column("holder_gender", CATEGORICAL, GENDERS),
    Column("occupation", CATEGORICAL, OCCUPATIONS),
    Column("sales_region", CATEGORICAL, REGIONS),
    *(Column(f"incl_{s}", NUMERIC) for s in SUPPLEMENTS),
    Column("rejected_dynamics", NUMERIC),
    *(Column(c, NUMERIC) for c in COLLECTION),
    Column("lapsed", TARGET),
))


def _zip_counts(rng, n, zero_prob, mean):
    return np.where(rng.random(n) < zero_prob, 0, rng.poisson(mean, n)).astype(np.float64)


def _draw_contracts(rng, n, cfg: PortfolioConfig, kind: str):
    """Dates for ``n`` main contracts; ``kind`` is active, expired, dead or benefit."""
    ref = np.datetime64(cfg.reference_date, "D")
    begin = np.empty(n, "datetime64[D]")
    end = np.empty(n, "datetime64[D]")
    birth = np.empty(n, "datetime64[D]")
    todo = np.arange(n)
    for _ in range(1000):
        if not len(todo):
            break
        m = len(todo)
        by = rng.integers(1985, cfg.reference_date.year, m)
        bm = rng.integers(1, 13, m)
        b = _first_of_month(by, bm)
        if cfg.product == "pension":
            age0 = rng.integers(18, 51, m)
        else:
            age0 = rng.integers(18, 56, m)
        bd = b - np.round((age0 + rng.random(m)) * 365.25).astype("timedelta64[D]")
        if cfg.product == "pension" or kind == "benefit":
            yy = bd.astype("datetime64[Y]").astype(np.int64) + 1970 + 65
            mm = bd.astype("datetime64[M]").astype(np.int64) % 12 + 2
            yy = yy + (mm > 12)
            mm = np.where(mm > 12, 1, mm)
            e = _first_of_month(yy, mm)
        else:
            term = rng.integers(12, 36, m)
            e = _first_of_month(by + term, bm)
        if kind in ("active", "dead"):
            ok = (e > ref) & (b < ref) & (year_fraction(b, e) >= 5)
        else:
            ok = (e < ref) & (e > ref - np.timedelta64(5 * 365, "D"))
        begin[todo[ok]], end[todo[ok]], birth[todo[ok]] = b[ok], e[ok], bd[ok]
        todo = todo[~ok]
    if len(todo):
        raise CalibrationError(f"could not draw valid {kind} contract dates")
    return begin, end, birth


def generate(config: PortfolioConfig) -> tuple[DataTable, GroundTruth]:
    """Draw a raw portfolio (main and supplementary parts) plus its ground truth.

    ``config.n_contracts`` main contracts are active at the reference date and
    survive :func:`select_contracts`; an extra ``extra_fraction`` of expired,
    deceased or (pension) in-benefit contracts is mixed in to be filtered out.
    """
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    ref = cfg.reference_date
    n_act = cfg.n_contracts
    n_extra = int(round(cfg.extra_fraction * n_act))
    if cfg.product == "pension":
        kinds = ["benefit"] * (n_extra - n_extra // 3) + ["dead"] * (n_extra // 3)
    else:
        kinds = ["expired"] * (n_extra - n_extra // 2) + ["dead"] * (n_extra // 2)
    n = n_act + n_extra

    begin = np.empty(n, "datetime64[D]")
    end = np.empty(n, "datetime64[D]")
    birth = np.empty(n, "datetime64[D]")
    begin[:n_act], end[:n_act], birth[:n_act] = _draw_contracts(rng, n_act, cfg, "active")
    kinds_arr = np.array(["active"] * n_act + kinds)
    for kind in ("expired", "dead", "benefit"):
        idx = np.flatnonzero(kinds_arr == kind)
        if len(idx):
            begin[idx], end[idx], birth[idx] = _draw_contracts(rng, len(idx), cfg, kind)
    death = np.full(n, np.datetime64("NaT"), "datetime64[D]")
    dead = kinds_arr == "dead"
    death[dead] = _first_of_month(rng.integers(2010, ref.year, dead.sum()),
                                  rng.integers(1, 13, dead.sum())) + rng.integers(0, 28, dead.sum()).astype("timedelta64[D]")
    status = np.where(kinds_arr == "benefit", 1, 0)

    gender = rng.integers(0, 2, n)
    occupation = rng.choice(len(OCCUPATIONS), n, p=[0.2, 0.15, 0.15, 0.1, 0.1, 0.1, 0.1, 0.1])
    region = rng.integers(0, len(REGIONS), n)
    sum_insured = np.round(cfg.sum_insured_median * np.exp(cfg.sum_insured_sigma * rng.standard_normal(n)), -1)
    sum_insured = np.maximum(sum_insured, 500.0)
    total = year_fraction(begin, end)
    premium = np.round(sum_insured / total * rng.uniform(0.8, 1.2, n), 2)
    single = rng.random(n) < cfg.single_premium_rate
    begin_year = begin.astype("datetime64[Y]").astype(np.int64) + 1970
    rate = interest_rate_for(begin_year)
    window = 1.0 if cfg.product == "endowment" else 0.4
    coll = np.column_stack([_zip_counts(rng, n, 0.85, window * m)
                            for m in (1.5, 1.2, 1.0, 0.8, 0.8, 0.5, 0.5, 0.3)])
    rejected = _zip_counts(rng, n, 0.7, 1.5)
    supp = rng.random((n, len(SUPPLEMENTS))) < np.asarray(cfg.supplementary_rates)

    # policyholder: usually the insured person
    same = rng.random(n) < 0.85
    h_birth = np.where(same, birth, birth + rng.integers(-3650, 3650, n).astype("timedelta64[D]"))
    h_birth = np.minimum(h_birth, begin - np.timedelta64(18 * 365, "D"))
    h_gender = np.where(same, gender, rng.integers(0, 2, n))

    # planted lapse model on the active contracts
    act = slice(0, n_act)
    remaining = year_fraction(np.full(n_act, np.datetime64(ref, "D")), end[act])
    age = _ages(birth[act], ref)
    lsi = np.log(sum_insured[act] / cfg.sum_insured_median)
    age_u = ((age - 45.0) / 15.0) ** 2
    young_small = ((age < 35) & (sum_insured[act] < cfg.sum_insured_median)).astype(float)
    eta = (cfg.effect_remaining * remaining
           + cfg.effect_log_sum_insured * lsi
           + coll[act] @ np.asarray(cfg.effect_collection)
           + np.asarray(cfg.effect_occupation)[occupation[act]]
           + cfg.effect_rejected_dynamics * rejected[act]
           + cfg.effect_age_u * age_u
           + cfg.effect_interaction * young_small)
    target = 1.0 / (1.0 + cfg.imbalance_rate)
    intercept = calibrate_intercept(eta, target)
    p = _sigmoid(intercept + eta)
    lapsed = np.zeros(n, dtype=np.int64)
    lapsed[act] = rng.random(n_act) < p

    coefs = {"remaining_duration": cfg.effect_remaining,
             "log_sum_insured": cfg.effect_log_sum_insured}
    coefs.update({c: e for c, e in zip(COLLECTION, cfg.effect_collection)})
    coefs.update({f"occupation={lv}": e for lv, e in zip(OCCUPATIONS, cfg.effect_occupation)})
    coefs["rejected_dynamics"] = cfg.effect_rejected_dynamics
    coefs["age_u"] = cfg.effect_age_u
    coefs["young_small"] = cfg.effect_interaction
    truth = GroundTruth(intercept, coefs, target, float(p.mean()), float(lapsed[act].mean()))

    # missingness, applied after the truth is fixed
    ins_missing = rng.random(n) < cfg.insured_missing_rate
    h_missing = rng.random(n) < cfg.holder_missing_rate

    # supplementary parts become extra rows
    ids = rng.choice(np.arange(1_000_000, 9_999_999), n, replace=False)
    ids.sort()
    rows_main = np.arange(n)
    sup_rows, sup_types = np.nonzero(supp)
    src = np.concatenate([rows_main, sup_rows])
    part_type = np.concatenate([np.zeros(n, np.int64), sup_types + 1])
    part_rank = np.zeros(len(src), np.int64)
    order = np.lexsort((part_type, src))
    src, part_type = src[order], part_type[order]
    first = np.r_[True, src[1:] != src[:-1]]
    starts = np.maximum.accumulate(np.where(first, np.arange(len(src)), 0))
    part_rank = np.arange(len(src)) - starts + 1
    is_sup = part_type > 0
    si = sum_insured[src].copy()
    si[is_sup] = np.round(si[is_sup] * rng.uniform(0.1, 0.5, is_sup.sum()), -1)

    data = {
        "contract_id": np.array([str(i) for i in ids[src]], dtype=object),
        "part_id": np.array([str(r) for r in part_rank], dtype=object),
        "part_type": part_type,
        "status": status[src],
        "begin_date": begin[src],
        "end_date": end[src],
        "death_date": death[src],
        "sum_insured": si,
        "annual_premium": np.where(single[src], 0.0, premium[src]),
        "interest_rate": rate[src],
        "insured_birth": birth[src],
        "insured_gender": gender[src],
        "holder_birth": h_birth[src],
        "holder_gender": h_gender[src],
        "occupation": occupation[src],
        "sales_region": region[src],
        **{f"incl_{s}": np.zeros(len(src)) for s in SUPPLEMENTS},
        "rejected_dynamics": rejected[src],
        **{c: coll[src, k] for k, c in enumerate(COLLECTION)},
        "lapsed": np.where(is_sup, 0, lapsed[src]),
    }
    missing = {
        "death_date": np.isnat(death[src]),
        "annual_premium": single[src],
        "insured_birth": ins_missing[src],
        "insured_gender": ins_missing[src],
        "holder_birth": h_missing[src],
        "holder_gender": h_missing[src],
    }
    return DataTable(RAW_SCHEMA, data, missing), truth


def calibrate_intercept(eta: np.ndarray, target: float, max_iter: int = 200) -> float:
    """Bisection for ``b`` with ``mean(sigmoid(b + eta)) == target``."""
    lo, hi = -50.0, 50.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if _sigmoid(mid + eta).mean() < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    b = 0.5 * (lo + hi)
    got = _sigmoid(b + eta).mean()
    if abs(got - target) > 0.05 * target:
        raise CalibrationError(f"intercept calibration reached {got:.5g}, target {target:.5g}")
    return b


# --------------------------------------------------------------------------
# preparation steps

def impute(table: DataTable, *, report: bool = False):
    """Fill gaps the way the inventory cleaning does.

    Missing annual premium (single-premium contracts) becomes 0.  Missing
    insured gender / birth date are copied from the policyholder.  Rows where
    both are absent are dropped.  With ``report=True`` a ``(table, n_dropped)``
    pair is returned.
    """
    cols = []
    if "annual_premium" in table.schema:
        prem = np.where(table.is_missing("annual_premium"), 0.0, table["annual_premium"])
        cols.append((table.schema["annual_premium"], prem, None))
    still = np.zeros(table.n, dtype=bool)
    for ins, hold in (("insured_gender", "holder_gender"), ("insured_birth", "holder_birth")):
        if ins not in table.schema:
            continue
        miss = table.is_missing(ins)
        values = table[ins].copy()
        fill = miss & ~table.is_missing(hold)
        values[fill] = table[hold][fill]
        left = miss & ~fill
        still |= left
        cols.append((table.schema[ins], values, left))
    out = table.with_columns(cols)
    keep = np.flatnonzero(~still)
    dropped = table.n - len(keep)
    if dropped:
        log.info("imputation dropped %d rows without insured or holder data", dropped)
        out = out.take(keep)
    return (out, dropped) if report else out


def engineer_features(table: DataTable, reference: dt.date,
                      drop: tuple[str, ...] = ("elapsed_duration",)) -> DataTable:
    """Add duration and age features derived from the contract dates.

    Adds ``total_duration``, ``elapsed_duration``, ``remaining_duration``
    (years, actual/365.25) and ``insured_age`` (semi-annual method), then
    removes the columns listed in ``drop``; by default the elapsed duration,
    which is collinear with the other two durations.
    """
    ref = np.full(table.n, np.datetime64(reference, "D"))
    begin, end = table["begin_date"], table["end_date"]
    if table.has_missing(["begin_date", "end_date"]):
        raise ValueError("begin/end dates must be present")
    cols = [
        (Column("total_duration", NUMERIC), year_fraction(begin, end), None),
        (Column("elapsed_duration", NUMERIC), year_fraction(begin, ref), None),
        (Column("remaining_duration", NUMERIC), year_fraction(ref, end), None),
    ]
    if "insured_birth" in table.schema:
        miss = table.is_missing("insured_birth")
        cols.append((Column("insured_age", NUMERIC),
                     _ages(table["insured_birth"], reference, miss), miss))
    out = table.with_columns(cols)
    return out.drop([d for d in drop if d in out.schema])


def select_contracts(table: DataTable, product: str, reference: dt.date) -> DataTable:
    """Keep main-insurance rows of contracts active at ``reference``.

    Supplementary parts first set the ``incl_<type>`` indicator on their main
    row, then are removed.  Contracts expired or with a death date before the
    reference are removed; pension contracts in benefit status as well.
    """
    if product not in PRODUCTS:
        raise ValueError(f"unknown product {product!r}")
    ids = table["contract_id"]
    part = table["part_id"]
    is_main = part == "1"
    cols = []
    if "part_type" in table.schema:
        ptype = table.level_names("part_type")
        for s in SUPPLEMENTS:
            name = f"incl_{s}"
            if name not in table.schema:
                continue
            carriers = set(ids[(~is_main) & (ptype == s)])
            has = np.fromiter((i in carriers for i in ids), dtype=bool, count=len(ids))
            cols.append((table.schema[name], np.maximum(table[name], has.astype(float)), None))
    out = table.with_columns(cols)
    ref = np.datetime64(reference, "D")
    keep = is_main & (out["end_date"] >= ref)
    if "death_date" in out.schema:
        keep &= out.is_missing("death_date") | (out["death_date"] >= ref)
    if product == "pension" and "status" in out.schema:
        keep &= out.level_names("status") != "benefit"
    return out.take(np.flatnonzero(keep))


HELPER_COLUMNS = ("part_type", "status", "begin_date", "end_date", "death_date",
                  "insured_birth", "holder_birth", "holder_gender")


def preprocess(raw: DataTable, product: str, reference: dt.date) -> DataTable:
    """Imputation, feature engineering and selection; returns a model-ready table."""
    t = impute(raw)
    t = engineer_features(t, reference)
    t = select_contracts(t, product, reference)
    return t.drop([c for c in HELPER_COLUMNS if c in t.schema])


def truth_features(table: DataTable, config: PortfolioConfig) -> DataTable:
    """Table holding exactly the planted model's terms (for recovery checks)."""
    age = table["insured_age"]
    si = table["sum_insured"]
    cols = [Column("remaining_duration", NUMERIC), Column("log_sum_insured", NUMERIC),
            *(Column(c, NUMERIC) for c in COLLECTION), Column("occupation", CATEGORICAL, OCCUPATIONS),
            Column("rejected_dynamics", NUMERIC), Column("age_u", NUMERIC),
            Column("young_small", NUMERIC), Column("lapsed", TARGET)]
    data = {
        "remaining_duration": table["remaining_duration"],
        "log_sum_insured": np.log(si / config.sum_insured_median),
        **{c: table[c] for c in COLLECTION},
        "occupation": table["occupation"],
        "rejected_dynamics": table["rejected_dynamics"],
        "age_u": ((age - 45.0) / 15.0) ** 2,
        "young_small": ((age < 35) & (si < config.sum_insured_median)).astype(float),
        "lapsed": table["lapsed"],
    }
    return DataTable(FeatureSchema(tuple(cols)), data)


def synthesize(config: PortfolioConfig) -> tuple[DataTable, GroundTruth]:
    """Generate and preprocess in one call."""
    raw, truth = generate(config)
    return preprocess(raw, config.product, config.reference_date), truth
