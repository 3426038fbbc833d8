"""Versioned, tab-separated text format for fitted models.

::

    lapsekit-model 1
    family    rf
    schema_hash    <16 hex digits>
    schema    <column line>            (one per schema column)
    params    <json>
    meta    <json>
    tree    <index>    <node count>    <n_root>
    node    id parent depth split left right value n impurity decrease grad hess
    intercept    <value>
    coef    feature    level    value    center    scale

``split`` is ``leaf``, ``num:<feature>:<threshold>`` or
``cat:<feature>:<code>|<code>...``.  Floats are written with ``repr`` so a
load reproduces predictions bit for bit.
"""
from __future__ import annotations

import json

import numpy as np

from .dataset import Column, FeatureSchema, design_layout
from .learners import FittedModel
from .linear import LinearFit
from .trees import (BoostParams, Booster, CartModel, CartParams, FeatureSpec, Forest,
                    ForestParams, Tree, TreeNode)

MAGIC = "lapsekit-model"
VERSION = 1


class ModelFileError(ValueError):
    pass


def _split_spec(nd: TreeNode) -> str:
    if nd.is_leaf:
        return "leaf"
    if nd.left_levels is not None:
        return f"cat:{nd.feature}:" + "|".join(str(c) for c in sorted(nd.left_levels))
    return f"num:{nd.feature}:{nd.threshold!r}"


def _node_line(nd: TreeNode) -> str:
    fields = [nd.id, nd.parent, nd.depth, _split_spec(nd), nd.left, nd.right,
              repr(float(nd.value)), nd.n, repr(float(nd.impurity)),
              repr(float(nd.decrease)), repr(float(nd.grad)), repr(float(nd.hess))]
    return "node\t" + "\t".join(str(f) for f in fields)


def _parse_node(parts: list[str]) -> TreeNode:
    if len(parts) != 12:
        raise ModelFileError(f"node record needs 12 fields, got {len(parts)}")
    nid, parent, depth, split, left, right, value, n, imp, dec, g, h = parts
    nd = TreeNode(int(nid), int(parent), int(depth), int(n), float(imp), float(value),
                  left=int(left), right=int(right), decrease=float(dec), grad=float(g), hess=float(h))
    if split != "leaf":
        kind, f, rest = split.split(":", 2)
        nd.feature = int(f)
        if kind == "num":
            nd.threshold = float(rest)
        elif kind == "cat":
            nd.left_levels = frozenset(int(c) for c in rest.split("|"))
        else:
            raise ModelFileError(f"unknown split kind {kind!r}")
    return nd


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=str)


def _trees_of(fitted: FittedModel) -> list[Tree]:
    return list(getattr(fitted.model, "trees", []))


def dumps(fitted: FittedModel) -> str:
    lines = [f"{MAGIC} {VERSION}", f"family\t{fitted.family}",
             f"schema_hash\t{fitted.schema.digest()}"]
    lines += [f"schema\t{c.to_line()}" for c in fitted.schema.columns]
    lines.append(f"params\t{_json(fitted.params)}")
    m = fitted.model
    if isinstance(m, LinearFit):
        meta = {"lam": m.lam, "alpha": m.alpha, "coding": m.coding, "iterations": m.iterations,
                "objective": repr(m.objective), "converged": m.converged,
                "separated": m.separated, "standardized": m.standardized}
    elif isinstance(m, Booster):
        meta = {"base_score": repr(m.base_score), "notes": m.notes}
    else:
        meta = {}
    lines.append(f"meta\t{_json(meta)}")
    for i, t in enumerate(_trees_of(fitted)):
        lines.append(f"tree\t{i}\t{len(t.nodes)}\t{t.n_root}")
        lines += [_node_line(nd) for nd in t.nodes]
    if isinstance(m, LinearFit):
        lines.append(f"intercept\t{m.intercept!r}")
        for j, (feat, level) in enumerate(m.provenance):
            c = repr(float(m.center[j])) if m.standardized else "nan"
            s = repr(float(m.scale[j])) if m.standardized else "nan"
            lines.append(f"coef\t{feat}\t{level}\t{float(m.coef[j])!r}\t{c}\t{s}")
    return "\n".join(lines) + "\n"


def save_model(fitted: FittedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(fitted))


def loads(text: str) -> FittedModel:
    lines = text.splitlines()
    if not lines or lines[0].split() != [MAGIC, str(VERSION)]:
        raise ModelFileError(f"not a {MAGIC} version {VERSION} file")
    family = digest = params = meta = None
    cols: list[Column] = []
    trees: list[Tree] = []
    pending: list[TreeNode] = []
    n_root = 0
    intercept = None
    coefs = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        tag, *parts = line.split("\t")
        try:
            if tag == "family":
                family = parts[0]
            elif tag == "schema_hash":
                digest = parts[0]
            elif tag == "schema":
                name, role, *lv = parts[0].split(":", 2)
                cols.append(Column(name, role, tuple(lv[0].split("|")) if lv else ()))
            elif tag == "params":
                params = json.loads(parts[0])
            elif tag == "meta":
                meta = json.loads(parts[0])
            elif tag == "tree":
                if pending:
                    trees.append(Tree(pending, n_root))
                pending, n_root = [], int(parts[2])
            elif tag == "node":
                pending.append(_parse_node(parts))
            elif tag == "intercept":
                intercept = float(parts[0])
            elif tag == "coef":
                coefs.append(parts)
            else:
                raise ModelFileError(f"unknown record {tag!r}")
        except (IndexError, ValueError) as exc:
            raise ModelFileError(f"line {lineno}: {exc}") from exc
    if pending:
        trees.append(Tree(pending, n_root))
    if family is None or params is None or meta is None or not cols:
        raise ModelFileError("incomplete model header")
    schema = FeatureSchema(tuple(cols))
    if schema.digest() != digest:
        raise ModelFileError("schema hash does not match the embedded schema")
    model = _rebuild(family, params, meta, schema, trees, intercept, coefs)
    return FittedModel(family, params, schema, model)


def _rebuild(family, params, meta, schema, trees, intercept, coefs):
    spec = FeatureSpec(tuple(c.name for c in schema.features),
                       tuple(c.role == "categorical" for c in schema.features),
                       tuple(c.levels for c in schema.features))
    if family in ("logit", "elanet"):
        prov = tuple((f, lv) for f, lv, *_ in coefs)
        if prov != design_layout(schema):
            raise ModelFileError("coefficient layout does not match the schema")
        coef = np.array([float(c[2]) for c in coefs])
        center = scale = None
        if meta["standardized"]:
            center = np.array([float(c[3]) for c in coefs])
            scale = np.array([float(c[4]) for c in coefs])
        return LinearFit(intercept, coef, prov, lam=meta["lam"], alpha=meta["alpha"],
                         coding=meta["coding"], center=center, scale=scale,
                         iterations=meta["iterations"], objective=float(meta["objective"]),
                         converged=meta["converged"], separated=meta["separated"])
    if family == "cart":
        return CartModel(trees[0], spec, CartParams(params["max_depth"], params["nodesize"],
                                                    params["min_decrease"], params["ccp_alpha"]))
    if family == "rf":
        fp = ForestParams(params["ntree"], params["ntry"], params["nodesize"], params["max_depth"])
        return Forest(trees, spec, fp)
    if family == "xgb":
        bp = BoostParams(rounds=params["rounds"], learning_rate=params["eta"],
                         max_depth=params["max_depth"], reg_leafcount=params["reg_leafcount"],
                         reg_l2=params["reg_l2"], reg_l1=params["reg_l1"],
                         min_child_hessian=params["min_child_hessian"],
                         colsample=params["colsample"])
        return Booster(trees, float(meta["base_score"]), design_layout(schema), bp,
                       list(meta.get("notes", [])))
    raise ModelFileError(f"unknown family {family!r}")


def load_model(path) -> FittedModel:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
