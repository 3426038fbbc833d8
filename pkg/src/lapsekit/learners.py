"""Uniform fit / predict interface over the model families.

A hyperparameter assignment is a flat ``{name: value}`` mapping as written in
run config files.  Besides the family's own keys every assignment may carry
the resampling keys ``osw.rate``, ``resample`` and ``smote.k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .config import ConfigError, parse_scalar
from .dataset import DataTable, FeatureSchema, encode_design
from .linear import LinearFit, fit_elastic_net, fit_logit, predict_proba as linear_proba
from .resample import METHODS, ResamplePlan
from .trees import (BoostParams, CartParams, ForestParams, feature_matrix, fit_boost_design,
                    fit_cart, fit_forest)

RESAMPLE_KEYS = {"osw.rate": 1.0, "resample": "random_oversample", "smote.k": 5}

FAMILY_KEYS: dict[str, dict[str, Any]] = {
    "logit": {},
    "elanet": {"lambda": 0.01, "alpha": 0.5},
    "cart": {"max_depth": None, "nodesize": 1, "min_decrease": 0.0, "ccp_alpha": 0.0},
    "rf": {"ntree": 500, "ntry": None, "nodesize": 1, "max_depth": None},
    "xgb": {"rounds": 100, "eta": 0.3, "max_depth": 6, "reg_leafcount": 0.0, "reg_l2": 1.0,
            "reg_l1": 0.0, "min_child_hessian": 1.0, "colsample": 1.0},
}
FAMILIES = tuple(FAMILY_KEYS)

_INT_KEYS = {"max_depth", "nodesize", "ntree", "ntry", "rounds", "smote.k"}


def check_family(family: str) -> None:
    if family not in FAMILY_KEYS:
        raise ConfigError(f"unknown model family {family!r}; choose from {', '.join(FAMILIES)}")


def _coerce(key: str, value):
    if isinstance(value, str):
        if value.lower() == "none":
            return None
        value = parse_scalar(value)
    if key in _INT_KEYS and value is not None:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
    elif key == "resample":
        if value not in METHODS:
            raise ConfigError(f"resample must be one of {METHODS}, got {value!r}")
    elif value is not None and not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be numeric, got {value!r}")
    return value


def resolve_params(family: str, params: dict) -> dict:
    """Family defaults overlaid with ``params``; unknown keys are rejected."""
    check_family(family)
    allowed = {**RESAMPLE_KEYS, **FAMILY_KEYS[family]}
    out = dict(allowed)
    for k, v in params.items():
        if k not in allowed:
            raise ConfigError(f"unknown hyperparameter {k!r} for family {family}")
        out[k] = _coerce(k, v)
    return out


def resample_plan(params: dict, seed: int) -> ResamplePlan:
    return ResamplePlan(params["resample"], float(params["osw.rate"]), int(params["smote.k"]), seed)


@dataclass
class FittedModel:
    family: str
    params: dict
    schema: FeatureSchema
    model: Any

    def predict_proba(self, table: DataTable) -> np.ndarray:
        if table.schema.digest() != self.schema.digest():
            raise ValueError("table schema differs from the schema the model was trained on")
        if self.family in ("logit", "elanet"):
            fit: LinearFit = self.model
            stats = (fit.center, fit.scale) if fit.standardized else None
            return linear_proba(fit, encode_design(table, stats=stats))
        if self.family == "xgb":
            return self.model.predict_proba(encode_design(table).values)
        X, _ = feature_matrix(table, self.model.spec)
        return self.model.predict_proba(X)


def fit_family(family: str, table: DataTable, params: dict | None = None, seed: int = 0,
               threads: int = 1) -> FittedModel:
    """Fit one family on an (already resampled) training table."""
    p = resolve_params(family, params or {})
    y = table.labels
    if family == "logit":
        model = fit_logit(encode_design(table), y)
    elif family == "elanet":
        model = fit_elastic_net(encode_design(table, standardize=True), y,
                                float(p["lambda"]), float(p["alpha"]))
    elif family == "cart":
        model = fit_cart(table, CartParams(p["max_depth"], p["nodesize"],
                                           float(p["min_decrease"]), float(p["ccp_alpha"])))
    elif family == "rf":
        model = fit_forest(table, ForestParams(p["ntree"], p["ntry"], p["nodesize"],
                                               p["max_depth"], seed=seed), threads=threads)
    else:
        if p["max_depth"] is None:
            raise ConfigError("xgb needs a finite max_depth")
        bp = BoostParams(rounds=p["rounds"], learning_rate=float(p["eta"]),
                         max_depth=p["max_depth"], reg_leafcount=float(p["reg_leafcount"]),
                         reg_l2=float(p["reg_l2"]), reg_l1=float(p["reg_l1"]),
                         min_child_hessian=float(p["min_child_hessian"]),
                         colsample=float(p["colsample"]), seed=seed)
        model = fit_boost_design(encode_design(table), y, bp)
    return FittedModel(family, p, table.schema, model)
