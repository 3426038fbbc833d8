"""Command-line interface.

Every command writes its outputs plus ``manifest.json`` (command line,
config echo, seed, SHA-256 digests of inputs and outputs, version, wall
time) into ``--out``.  Exit status: 0 success, 1 runtime failure, 2 usage
or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, format_kv, read_kv
from .dataset import CATEGORICAL, DataError, load_table, make_folds, write_schema, write_table
from .evaluation import aggregate_curves, curve_rows, pr_curve, roc_curve
from .learners import fit_family, resample_plan, resolve_params
from .modelfile import ModelFileError, load_model, save_model
from .synthgen import DEFAULT_GROUPS, PortfolioConfig, generate, preprocess
from .tuning import (Protocol, grid_search, parse_grid, results_csv,
                     score_metrics, select_best)
from .varrel import (RelevanceError, read_groups, relevance_table, varrel_elanet, varrel_rf,
                     varrel_xgb)

log = logging.getLogger("lapsekit")

USAGE_ERRORS = (ConfigError, DataError, ModelFileError, RelevanceError)


class UsageError(Exception):
    pass


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Collects the manifest of one command invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.t0 = time.perf_counter()
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.config: dict = {}
        self.extra: dict = {}

    def input(self, path) -> Path:
        p = Path(path)
        self.inputs.append(p)
        return p

    def output(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(p)
        return p

    def write_manifest(self) -> None:
        manifest = {
            "command": self.args.command,
            "argv": self.argv,
            "config": self.config,
            "seed": getattr(self.args, "seed", None),
            "inputs": {str(p): sha256(p) for p in self.inputs},
            "outputs": {p.name: sha256(p) for p in self.outputs},
            "version": __version__,
            "wall_seconds": round(time.perf_counter() - self.t0, 3),
            **self.extra,
        }
        with open(self.out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return "NA" if math.isnan(v) else repr(float(v))
    return str(v)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _load_data(run: Run):
    a = run.args
    return load_table(run.input(a.data), run.input(a.schema))


# ---------------------------------------------------------------------------
# commands

def cmd_synth(run: Run) -> None:
    a = run.args
    items = read_kv(run.input(a.config)) if a.config else {}
    if a.seed is not None:
        items["seed"] = str(a.seed)
    cfg = PortfolioConfig.from_mapping(items)
    run.config = dict(cfg.to_items())
    raw, truth = generate(cfg)
    if a.raw:
        write_table(raw, run.output("raw.csv"))
        write_schema(raw.schema, run.output("raw_schema.txt"))
    table = preprocess(raw, cfg.product, cfg.reference_date)
    write_table(table, run.output("dataset.csv"))
    write_schema(table.schema, run.output("schema.txt"))
    _write_csv(run.output("ground_truth.csv"), ["term", "coefficient"], truth.rows())
    run.extra["rows"] = table.n
    run.extra["positive_fraction"] = float(table.labels.mean())


def cmd_prepare(run: Run) -> None:
    a = run.args
    raw = _load_data(run)
    ref = dt.date.fromisoformat(a.reference)
    table = preprocess(raw, a.product, ref)
    run.config = {"product": a.product, "reference": a.reference}
    write_table(table, run.output("dataset.csv"))
    write_schema(table.schema, run.output("schema.txt"))


def _protocol(run: Run, reserved: dict, default: str = "holdout:0.25") -> Protocol:
    text = run.args.protocol or reserved.get("protocol") or default
    return Protocol.parse(text)


def cmd_tune(run: Run) -> None:
    a = run.args
    items = read_kv(run.input(a.config))
    family, grid, reserved = parse_grid(items)
    data = _load_data(run)
    protocol = _protocol(run, reserved)
    run.config = {**items, "protocol": str(protocol), "threshold": a.threshold}
    results = grid_search(family, grid, data, protocol, a.seed, a.threads, a.threshold)
    path = run.output("results.csv")
    path.write_text(results_csv(results, list(grid)), encoding="utf-8")
    failed = [{"cell": r.index, "params": r.params, "error": r.error}
              for r in results if r.error]
    run.extra["failed_cells"] = failed
    run.extra["fit_seconds"] = [round(r.fit_seconds, 3) for r in results]
    try:
        best = select_best(results)
    except ValueError as exc:
        raise RuntimeError(str(exc)) from None
    run.extra["best"] = {"cell": best.index, "params": best.params, "auc.te": best.get("auc.te")}
    best_items = [("family", family), *((k, _fmt(v)) for k, v in best.params.items())]
    run.output("best.txt").write_text(format_kv(best_items), encoding="utf-8")


def _single_assignment(items: dict) -> tuple[str, dict]:
    family, grid, _ = parse_grid(items)
    multi = [k for k, v in grid.items() if len(v) != 1]
    if multi:
        raise ConfigError(f"train needs one value per hyperparameter; lists given for {multi}")
    return family, {k: v[0] for k, v in grid.items()}


def cmd_train(run: Run) -> None:
    a = run.args
    items = read_kv(run.input(a.config))
    family, params = _single_assignment(items)
    p = resolve_params(family, params)
    run.config = {**items, "resolved": p}
    data = _load_data(run)
    train = resample_plan(p, a.seed).apply(data)
    model = fit_family(family, train, p, seed=a.seed, threads=a.threads)
    save_model(model, run.output("model.txt"))
    m = score_metrics(model.predict_proba(data), data.labels, a.threshold)
    _write_csv(run.output("train_metrics.csv"), list(m), [list(m.values())])
    notes = getattr(model.model, "notes", None)
    if notes:
        run.extra["notes"] = notes


def _check_schema(model, data) -> None:
    if model.schema.digest() != data.schema.digest():
        raise UsageError(f"schema hash mismatch: model {model.schema.digest()}, "
                         f"data {data.schema.digest()}; refusing to score")


def cmd_eval(run: Run) -> None:
    a = run.args
    model = load_model(run.input(a.model))
    data = _load_data(run)
    _check_schema(model, data)
    run.config = {"family": model.family, "params": model.params, "threshold": a.threshold}
    scores = model.predict_proba(data)
    m = score_metrics(scores, data.labels, a.threshold)
    _write_csv(run.output("metrics.csv"), list(m), [list(m.values())])
    rows = curve_rows(roc_curve(scores, data.labels), "all")
    rows += curve_rows(pr_curve(scores, data.labels), "all")
    _write_csv(run.output("curves.csv"), ["kind", "fold", "threshold", "x", "y"], rows)


def cmd_curves(run: Run) -> None:
    """Out-of-fold ROC / PR curves of one assignment, per fold and aggregated."""
    a = run.args
    items = read_kv(run.input(a.config))
    family, params = _single_assignment(items)
    p = resolve_params(family, params)
    data = _load_data(run)
    protocol = _protocol(run, items, default="cv:10")
    if protocol.kind != "cv":
        raise ConfigError("curves needs a cv:K protocol")
    run.config = {**items, "resolved": p, "protocol": str(protocol)}
    rows, rocs, prs = [], [], []
    for k, (tr, te) in enumerate(make_folds(data, int(protocol.value), seed=a.seed)):
        train = resample_plan(p, a.seed + k).apply(data.take(tr))
        model = fit_family(family, train, p, seed=a.seed + k)
        test = data.take(te)
        s = model.predict_proba(test)
        rocs.append(roc_curve(s, test.labels))
        prs.append(pr_curve(s, test.labels))
        rows += curve_rows(rocs[-1], k) + curve_rows(prs[-1], k)
    for curves in (rocs, prs):
        agg = aggregate_curves(curves)
        for tag, ys in (("mean", agg.y), ("min", agg.band[0]), ("max", agg.band[1])):
            rows += [(agg.kind, tag, math.nan, float(x), float(y)) for x, y in zip(agg.x, ys)]
    _write_csv(run.output("curves.csv"), ["kind", "fold", "threshold", "x", "y"], rows)


def cmd_varrel(run: Run) -> None:
    a = run.args
    groups = read_groups(run.input(a.groups)) if a.groups else DEFAULT_GROUPS
    reports = []
    for path in a.model:
        m = load_model(run.input(path))
        if m.family == "rf":
            reports.append(varrel_rf(m.model, a.dataset))
        elif m.family == "xgb":
            reports.append(varrel_xgb(m.model, dataset=a.dataset))
        elif m.family == "elanet":
            reports.append(varrel_elanet(m.model, dataset=a.dataset))
        else:
            raise RelevanceError(f"no relevance measure defined for family {m.family!r} ({path})")
    run.config = {"dataset": a.dataset, "groups": a.groups or "default"}
    run.extra["degenerate"] = [r.family for r in reports if r.degenerate]
    _write_csv(run.output("relevance.csv"), ["dataset", "family", "feature", "group", "relevance"],
               relevance_table(reports, groups))


def cmd_explore(run: Run) -> None:
    a = run.args
    data = _load_data(run)
    if a.feature not in data.schema:
        raise ConfigError(f"unknown feature {a.feature!r}")
    col = data.schema[a.feature]
    y = data.labels
    keep = ~data.is_missing(a.feature)
    x, y = data[a.feature][keep], y[keep]
    overall = float(y.mean())
    run.config = {"feature": a.feature, "bins": a.bins, "log": a.log}
    rows = []
    if col.role == CATEGORICAL:
        for code, level in enumerate(col.levels):
            sel = x == code
            cnt, lap = int(sel.sum()), int(y[sel].sum())
            rows.append((level, level, cnt, lap, lap / cnt if cnt else math.nan, overall))
    else:
        x = x.astype(np.float64)
        if a.bins < 1:
            raise ConfigError("bins must be >= 1")
        if a.log:
            if (x <= 0).any():
                raise ConfigError("log binning needs strictly positive values")
            edges = np.geomspace(x.min(), x.max(), a.bins + 1)
        else:
            edges = np.linspace(x.min(), x.max(), a.bins + 1)
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, a.bins - 1)
        cnt = np.bincount(idx, minlength=a.bins)
        lap = np.bincount(idx, weights=y.astype(np.float64), minlength=a.bins)
        for b in range(a.bins):
            rate = lap[b] / cnt[b] if cnt[b] else math.nan
            rows.append((float(edges[b]), float(edges[b + 1]), int(cnt[b]), int(lap[b]), rate, overall))
    _write_csv(run.output(f"explore_{a.feature}.csv"),
               ["bin_lo", "bin_hi", "count", "lapsed", "rate", "overall_rate"], rows)


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lapsekit", description="Lapse prediction toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, data=True, seed=True):
        p.add_argument("--out", required=True, help="output directory")
        if data:
            p.add_argument("--data", required=True, help="CSV data file")
            p.add_argument("--schema", required=True, help="schema file")
        if seed:
            p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("synth", help="generate a synthetic portfolio")
    common(p, data=False, seed=False)
    p.add_argument("--config", help="portfolio config (key = value)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--raw", action="store_true", help="also write the raw contract table")

    p = sub.add_parser("prepare", help="impute, engineer features and select contracts")
    common(p, seed=False)
    p.add_argument("--product", default="pension")
    p.add_argument("--reference", default="2018-01-01", help="reference date (ISO)")

    for name, hlp in (("tune", "grid search"), ("train", "fit one model"),
                      ("curves", "cross-validated ROC / PR curves")):
        p = sub.add_parser(name, help=hlp)
        common(p)
        p.add_argument("--config", required=True, help="run config (family + hyperparameters)")
        p.add_argument("--threshold", type=float, default=0.5)
        if name != "train":
            p.add_argument("--protocol", help="holdout:F or cv:K")
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("eval", help="score a saved model")
    common(p, seed=False)
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=0.5)

    p = sub.add_parser("varrel", help="variable relevance of saved models")
    common(p, data=False, seed=False)
    p.add_argument("--model", nargs="+", required=True)
    p.add_argument("--groups", help="feature grouping file (feature = group)")
    p.add_argument("--dataset", default="data", help="dataset tag written to the CSV")

    p = sub.add_parser("explore", help="binned lapse rates of one feature")
    common(p, seed=False)
    p.add_argument("--feature", required=True)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--log", action="store_true", help="logarithmic bin edges")
    return ap


COMMANDS = {"synth": cmd_synth, "prepare": cmd_prepare, "tune": cmd_tune, "train": cmd_train,
            "eval": cmd_eval, "curves": cmd_curves, "varrel": cmd_varrel, "explore": cmd_explore}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                         format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        run = Run(args, argv)
        COMMANDS[args.command](run)
        run.write_manifest()
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
