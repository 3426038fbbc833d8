"""Variable relevance: importances normalized to shares comparable across model families.

Each family first yields one preliminary, non-negative value per original
feature:

* forest: the feature's Gini importance;
* booster: the Gini importance of a numeric column, or the largest
  importance among the dummy columns of a categorical feature;
* elastic net: ``|b|`` for a numeric feature, ``sqrt(l) * ||b_1..b_l||_2``
  over the ``l`` dummy coefficients of a categorical feature.

Relevance is the preliminary value divided by the sum over all features.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import read_kv
from .dataset import NUMERIC_LEVEL
from .linear import LinearFit
from .trees import Booster, Forest, gini_importance

FAMILIES = ("rf", "xgb", "elanet")


class RelevanceError(ValueError):
    pass


@dataclass(frozen=True)
class RelevanceReport:
    family: str
    dataset: str
    relevance: dict[str, float]
    raw: dict[str, float] = field(default_factory=dict)
    degenerate: bool = False

    def ranking(self) -> list[str]:
        """Features by decreasing relevance (ties by name)."""
        return sorted(self.relevance, key=lambda f: (-self.relevance[f], f))

    def rank_of(self, feature: str) -> int:
        return self.ranking().index(feature) + 1


def normalize(raw: dict[str, float], family: str, dataset: str = "") -> RelevanceReport:
    """Divide by the total; an all-zero total gives a flagged report of zeros."""
    vals = np.array(list(raw.values()), dtype=np.float64)
    if (vals < 0).any() or not np.isfinite(vals).all():
        raise RelevanceError("preliminary relevance values must be finite and >= 0")
    total = float(vals.sum())
    if total <= 0:
        return RelevanceReport(family, dataset, {k: 0.0 for k in raw}, dict(raw), True)
    return RelevanceReport(family, dataset, {k: float(v) / total for k, v in raw.items()},
                           dict(raw), False)


def varrel_rf(forest: Forest, dataset: str = "") -> RelevanceReport:
    vi = gini_importance(forest)
    return normalize(dict(zip(forest.spec.names, vi.tolist())), "rf", dataset)


def _features_of(provenance) -> list[str]:
    return list(dict.fromkeys(f for f, _ in provenance))


def dummy_max(values, provenance) -> dict[str, float]:
    """Per original feature: its own value (numeric) or the max over its dummies."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) != len(provenance):
        raise RelevanceError(f"{len(values)} importances for {len(provenance)} design columns")
    out = {f: 0.0 for f in _features_of(provenance)}
    for v, (f, _) in zip(values, provenance):
        out[f] = max(out[f], float(v))
    return out


def varrel_xgb(model: Booster, provenance=None, dataset: str = "") -> RelevanceReport:
    prov = model.provenance if provenance is None else tuple(provenance)
    return normalize(dummy_max(gini_importance(model), prov), "xgb", dataset)


def group_norm(coef, provenance) -> dict[str, float]:
    """|b| for numeric features, sqrt(l) * L2 norm of the l dummy coefficients otherwise."""
    coef = np.asarray(coef, dtype=np.float64)
    if len(coef) != len(provenance):
        raise RelevanceError(f"{len(coef)} coefficients for {len(provenance)} design columns")
    blocks: dict[str, list[float]] = {f: [] for f in _features_of(provenance)}
    numeric = set()
    for b, (f, level) in zip(coef, provenance):
        blocks[f].append(float(b))
        if level == NUMERIC_LEVEL:
            numeric.add(f)
    out = {}
    for f, bs in blocks.items():
        if f in numeric:
            out[f] = abs(bs[0])
        else:
            out[f] = math.sqrt(len(bs)) * math.sqrt(sum(b * b for b in bs))
    return out


def varrel_elanet(fit: LinearFit, provenance=None, dataset: str = "") -> RelevanceReport:
    if not fit.standardized:
        raise RelevanceError("elastic-net relevance needs a fit on standardized covariates")
    prov = fit.provenance if provenance is None else tuple(provenance)
    return normalize(group_norm(fit.coef, prov), "elanet", dataset)


def read_groups(path) -> dict[str, str]:
    """Grouping file with ``feature = group`` lines."""
    return read_kv(path)


def relevance_table(reports: list[RelevanceReport], groups: dict[str, str] | None = None):
    """Long-format rows ``(dataset, family, feature, group, relevance)``.

    Features absent from a report get relevance 0; ungrouped features get
    the group ``other``.
    """
    groups = groups or {}
    universe = list(dict.fromkeys(f for r in reports for f in r.relevance))
    rows = []
    for r in reports:
        for f in universe:
            rows.append((r.dataset, r.family, f, groups.get(f, "other"), r.relevance.get(f, 0.0)))
    return rows
