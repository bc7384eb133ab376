"""Config-driven experiment runner.

Usage::

    conformal-ts split --config cfg.json --out runs/split --seed 3
    conformal-ts validate --config cfg.json

Each run writes ``intervals.{csv,json}``, ``metrics.json``,
``plotdata.csv`` and ``manifest.json`` to the output directory. Exit
codes: 0 ok, 2 config error, 3 data error, 4 numeric failure; failures
print a JSON object ``{"error": ..., "code": ..., "message": ...}`` on
stderr. The log level is read from ``CONFORMAL_TS_LOG_LEVEL``.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import os
import platform
import sys
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .core import (
    AbsoluteResidual,
    CqrScore,
    Dataset,
    NormalizedResidual,
    calibrate,
    predict_interval,
    scores_of,
    split,
)
from .io import (
    DataError,
    atomic_write,
    dumps,
    read_multiseries_csv,
    read_safety_csv,
    read_series_csv,
    to_csv,
)
from .lab import (
    GeneratorSpec,
    KnnResidualScale,
    coverage,
    generate,
    joint_coverage,
    lag_embed,
    make_forecaster,
    mean_width,
    rolling_coverage,
)
from .lab.generators import GENERATOR_DEFAULTS_VERSION
from .multihorizon import (
    MultiSeries,
    bonferroni_level,
    cfrnn_calibrate,
    collect_horizon_scores,
    copula_calibrate,
    predict_regions,
)
from .online import AciState, aci_bound_check, aci_run, enbpi_fit, enbpi_run
from .safety import calibrate_warning, evaluate_warning, records_from_arrays

logger = logging.getLogger("conformal_ts")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

METHODS = ("split", "enbpi", "aci", "cfrnn", "copulacpts", "warning")
MULTI_HORIZON = ("cfrnn", "copulacpts")

TOP_LEVEL_KEYS = {"method", "alpha", "epsilon", "seed", "seeds", "data", "model", "params", "output"}

# allowed parameters and their defaults per method
METHOD_PARAMS: Dict[str, Dict[str, Any]] = {
    "split": {"train_fraction": 0.5, "test_fraction": 0.25, "score": "absolute", "knn_k": 20},
    "enbpi": {"n_train": 500, "B": 20, "aggregation": "mean", "h": 10, "order": 1},
    "aci": {"n_train": 500, "gamma": 0.005, "window": 100, "order": 1, "rolling_window": 200},
    "cfrnn": {"k": 5, "train_fraction": 0.3, "cal_fraction": 0.3},
    "copulacpts": {"k": 5, "train_fraction": 0.3, "cal_fraction": 0.3, "refine": False},
    "warning": {"phi_0": 0.0, "cal_fraction": 0.5},
}

DEFAULT_MODELS = {
    "split": {"kind": "linear_ar"},
    "enbpi": {"kind": "linear_ar"},
    "aci": {"kind": "linear_ar"},
    "cfrnn": {"kind": "linear_ar"},
    "copulacpts": {"kind": "linear_ar"},
}

COMPATIBLE_GENERATORS = {
    "split": {"iid_regression", "heteroscedastic"},
    "enbpi": {"ar1", "shift_series"},
    "aci": {"ar1", "shift_series"},
    "cfrnn": {"multi_horizon"},
    "copulacpts": {"multi_horizon"},
    "warning": {"safety"},
}


class ConfigError(ValueError):
    pass


class NumericError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    """Validated run description; see ``validate`` for the rules."""

    method: str
    level: float
    seeds: List[int]
    data: Dict[str, Any]
    model: Dict[str, Any]
    params: Dict[str, Any]
    output: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ExperimentConfig":
        problems = validate(raw)
        if problems:
            raise ConfigError("; ".join(problems))
        method = raw["method"]
        level = raw["alpha"] if "alpha" in raw else raw["epsilon"]
        if "seeds" in raw:
            seeds = [int(s) for s in raw["seeds"]]
        else:
            seeds = [int(raw.get("seed", 0))]
        params = {**METHOD_PARAMS[method], **raw.get("params", {})}
        gen = raw["data"].get("generator")
        if method in MULTI_HORIZON and gen is not None and "k" not in raw.get("params", {}):
            params["k"] = GeneratorSpec.from_dict(gen).resolved()["k"]
        model = dict(raw.get("model", DEFAULT_MODELS.get(method, {})))
        return cls(method, float(level), seeds, dict(raw["data"]), model, params,
                   dict(raw.get("output", {})))

    def resolved(self, seed: int) -> Dict[str, Any]:
        """Everything needed to reproduce one trial."""
        data = copy.deepcopy(self.data)
        if "generator" in data:
            g = data["generator"]
            spec = GeneratorSpec(g["kind"], dict(g.get("params", {})), int(g.get("seed", seed)))
            data["generator"] = {"kind": spec.kind, "params": spec.resolved(), "seed": spec.seed}
        else:
            data["sha256"] = _file_digest(data["path"])
        return {
            "method": self.method,
            "level": self.level,
            "seed": seed,
            "data": data,
            "model": self.model,
            "params": self.params,
        }


def _file_digest(path: str) -> str:
    try:
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    except FileNotFoundError:
        raise DataError(f"{path}: no such file")


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate(config: Dict[str, Any]) -> List[str]:
    """Diagnostics for a raw config dict; an empty list means valid."""
    out: List[str] = []
    if not isinstance(config, dict):
        return ["config must be a JSON object"]
    unknown = set(config) - TOP_LEVEL_KEYS
    if unknown:
        out.append(f"unknown keys: {sorted(unknown)}")
    method = config.get("method")
    if method not in METHODS:
        out.append(f"method must be one of {list(METHODS)}, got {method!r}")
        return out

    has_a, has_e = "alpha" in config, "epsilon" in config
    if has_a and has_e:
        out.append("give either alpha or epsilon, not both")
    elif not (has_a or has_e):
        out.append("missing alpha (or epsilon)")
    else:
        level = config["alpha"] if has_a else config["epsilon"]
        if not _is_number(level) or not 0 < level < 1:
            out.append(f"{'alpha' if has_a else 'epsilon'} must lie in (0, 1), got {level!r}")

    if "seed" in config and "seeds" in config:
        out.append("give either seed or seeds, not both")
    if "seed" in config and not isinstance(config["seed"], int):
        out.append("seed must be an integer")
    if "seeds" in config and (
        not isinstance(config["seeds"], list)
        or not config["seeds"]
        or not all(isinstance(s, int) for s in config["seeds"])
    ):
        out.append("seeds must be a non-empty list of integers")

    data = config.get("data")
    if not isinstance(data, dict):
        out.append("missing data section")
    else:
        extra = set(data) - {"path", "generator"}
        if extra:
            out.append(f"unknown data keys: {sorted(extra)}")
        if ("path" in data) == ("generator" in data):
            out.append("data needs exactly one of path or generator")
        if "generator" in data:
            g = data["generator"]
            try:
                spec = GeneratorSpec.from_dict(g)
            except (ValueError, KeyError, TypeError) as exc:
                out.append(f"bad generator spec: {exc}")
            else:
                if spec.kind not in COMPATIBLE_GENERATORS[method]:
                    out.append(f"generator {spec.kind!r} does not fit method {method!r}")
                elif method in MULTI_HORIZON:
                    gk = spec.resolved()["k"]
                    pk = config.get("params", {}).get("k", gk) if isinstance(config.get("params"), dict) else gk
                    if pk != gk:
                        out.append(f"params k={pk!r} differs from generator k={gk}")

    params = config.get("params", {})
    if not isinstance(params, dict):
        out.append("params must be an object")
        params = {}
    extra = set(params) - set(METHOD_PARAMS[method])
    if extra:
        out.append(f"unknown params for {method}: {sorted(extra)}")
    p = {**METHOD_PARAMS[method], **params}

    def positive_int(name):
        if name in p and (not isinstance(p[name], int) or isinstance(p[name], bool) or p[name] < 1):
            out.append(f"{name} must be an integer >= 1, got {p[name]!r}")

    for name in ("k", "B", "h", "window", "order", "n_train", "rolling_window", "knn_k"):
        positive_int(name)
    if "gamma" in p and (not _is_number(p["gamma"]) or p["gamma"] < 0):
        out.append(f"gamma must be >= 0, got {p['gamma']!r}")
    for name in ("train_fraction", "cal_fraction", "test_fraction"):
        if name in p and (not _is_number(p[name]) or not 0 < p[name] < 1):
            out.append(f"{name} must lie in (0, 1), got {p[name]!r}")
    if method in MULTI_HORIZON and _is_number(p.get("train_fraction")) and _is_number(p.get("cal_fraction")):
        if p["train_fraction"] + p["cal_fraction"] >= 1:
            out.append("train_fraction + cal_fraction must leave test series")
    if "aggregation" in p and p["aggregation"] not in ("mean", "median"):
        out.append("aggregation must be 'mean' or 'median'")
    if "score" in p and p["score"] not in ("absolute", "normalized", "cqr"):
        out.append("score must be 'absolute', 'normalized' or 'cqr'")
    if "phi_0" in p and not _is_number(p["phi_0"]):
        out.append("phi_0 must be a number")
    if "refine" in p and not isinstance(p["refine"], bool):
        out.append("refine must be a boolean")

    model = config.get("model")
    if model is not None:
        if method == "warning":
            out.append("method 'warning' takes no model")
        elif not isinstance(model, dict) or "kind" not in model:
            out.append("model needs a kind")
        else:
            try:
                make_forecaster(model["kind"], **{k: v for k, v in model.items() if k != "kind"})
            except (ValueError, TypeError) as exc:
                out.append(f"bad model: {exc}")

    output = config.get("output", {})
    if not isinstance(output, dict) or set(output) - {"dir", "format"}:
        out.append("output accepts only dir and format")
    elif output.get("format", "csv") not in ("csv", "json"):
        out.append("output format must be csv or json")
    return out


# ---------------------------------------------------------------------------
# Trial execution
# ---------------------------------------------------------------------------


def _model(spec: Dict[str, Any]):
    return make_forecaster(spec["kind"], **{k: v for k, v in spec.items() if k != "kind"})


def _load(resolved: Dict[str, Any], method: str, params: Dict[str, Any]):
    data = resolved["data"]
    if "generator" in data:
        g = data["generator"]
        return generate(GeneratorSpec(g["kind"], g["params"], g["seed"]))
    path = data["path"]
    if method in MULTI_HORIZON:
        return read_multiseries_csv(path, params["k"])
    if method == "warning":
        return read_safety_csv(path)
    t, X, Y = read_series_csv(path)
    if method == "split":
        if X is None:
            raise DataError(f"{path}: split needs x_* columns")
        return Dataset(X, Y)
    if X is None:
        return Y[:, 0]
    return Dataset(X, Y)


def _series_dataset(obj, order: int) -> Dataset:
    if isinstance(obj, Dataset):
        return obj
    return lag_embed(obj, order)


def _run_split(level, seed, params, model_spec, data):
    if not isinstance(data, Dataset):
        raise DataError("split needs a regression dataset")
    holdout = split(data, 1.0 - params["test_fraction"], seed)
    parts = split(holdout.train, params["train_fraction"], seed + 1)
    test = holdout.cal
    score_kind = params["score"]
    if score_kind == "cqr":
        model = make_forecaster("linear_quantile", gamma_lo=level / 2, gamma_hi=1 - level / 2)
        sf = CqrScore()
    else:
        model = _model(model_spec)
    model.fit(parts.train.X, parts.train.Y)
    if score_kind == "absolute":
        sf = AbsoluteResidual()
    elif score_kind == "normalized":
        resid = np.abs(parts.train.Y - model.predict(parts.train.X))
        sf = NormalizedResidual(KnnResidualScale(params["knn_k"]).fit(parts.train.X, resid))
    q = calibrate(parts.cal, model, sf, level)
    iv = predict_interval(test.X, model, sf, q)
    covered = iv.contains(test.Y)
    cols = ["index"] + _dim_cols("lo", iv.lo) + _dim_cols("hi", iv.hi) + _dim_cols("y", test.Y) + ["covered"]
    rows = [
        [int(i)] + list(iv.lo[j]) + list(iv.hi[j]) + list(test.Y[j]) + [int(covered[j])]
        for j, i in enumerate(holdout.cal_index)
    ]
    metrics = {
        "coverage": coverage(iv, test.Y),
        "mean_width": mean_width(iv),
        "threshold": q,
        "n_train": len(parts.train),
        "n_cal": len(parts.cal),
        "n_test": len(test),
    }
    plot = {"kind": "interval", "t": holdout.cal_index, "lo": iv.lo[:, 0], "hi": iv.hi[:, 0],
            "y": test.Y[:, 0]}
    return cols, rows, metrics, plot


def _dim_cols(prefix, arr):
    m = np.asarray(arr).shape[1]
    return [prefix] if m == 1 else [f"{prefix}_{j + 1}" for j in range(m)]


def _stream_output(rec):
    cols = ["t", "lo", "hi", "y", "err", "alpha_t"]
    return cols, [list(r) for r in rec.rows()]


def _run_enbpi(level, seed, params, model_spec, data):
    ds = _series_dataset(data, params["order"])
    n_train = params["n_train"]
    if len(ds) <= n_train:
        raise DataError(f"series has {len(ds)} supervised rows, need more than n_train={n_train}")
    train, test = ds.subset(range(n_train)), ds.subset(range(n_train, len(ds)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        state = enbpi_fit(train, lambda: _model(model_spec), params["B"], params["aggregation"],
                          seed, params["h"])
    for w in caught:
        logger.warning(str(w.message))
    rec, _ = enbpi_run(state, test, level)
    cols, rows = _stream_output(rec)
    metrics = {
        "coverage": float(1 - rec.err.mean()),
        "mean_width": float(np.mean(rec.hi - rec.lo)),
        "miscoverage": float(rec.err.mean()),
        "n_fallback": state.n_fallback,
        "n_train": n_train,
        "n_test": len(test),
    }
    plot = {"kind": "interval", "t": rec.t, "lo": rec.lo, "hi": rec.hi, "y": rec.y}
    return cols, rows, metrics, plot


def _run_aci(level, seed, params, model_spec, data):
    ds = _series_dataset(data, params["order"])
    n_train = params["n_train"]
    if len(ds) <= n_train:
        raise DataError(f"series has {len(ds)} supervised rows, need more than n_train={n_train}")
    train, test = ds.subset(range(n_train)), ds.subset(range(n_train, len(ds)))
    model = _model(model_spec).fit(train.X, train.Y)
    sf = AbsoluteResidual()
    state = AciState.start(level, scores_of(train, model, sf), gamma=params["gamma"],
                           window_size=params["window"])
    rec = aci_run(state, test, model, sf, t0=n_train + 1)
    lhs, rhs = aci_bound_check(state)
    w = min(params["rolling_window"], len(rec))
    rc = rolling_coverage(rec.err, w)
    cols, rows = _stream_output(rec)
    finite = np.isfinite(rec.hi - rec.lo)
    metrics = {
        "coverage": float(1 - rec.err.mean()),
        "miscoverage": float(rec.err.mean()),
        "mean_width": float(np.mean((rec.hi - rec.lo)[finite])) if finite.any() else float("inf"),
        "bound_lhs": lhs,
        "bound_rhs": rhs,
        "final_alpha_t": state.alpha_t,
        "n_test": len(test),
    }
    rolled = np.full(len(rec), np.nan)
    rolled[w - 1:] = rc
    plot = {"kind": "aci", "t": rec.t, "rolling_cov": rolled, "alpha_t": rec.alpha_t,
            "target": 1.0 - level}
    return cols, rows, metrics, plot


def _run_multihorizon(method, level, seed, params, model_spec, data):
    if not isinstance(data, MultiSeries):
        raise DataError("multi-horizon methods need multi-series data")
    k = params["k"]
    if data.horizon != k:
        raise DataError(f"data horizon {data.horizon} differs from k={k}")
    n = len(data)
    perm = np.random.default_rng(seed).permutation(n)
    n_tr = int(n * params["train_fraction"])
    n_cal = int(n * params["cal_fraction"])
    if n_tr < 1 or n_cal < 1 or n - n_tr - n_cal < 1:
        raise DataError(f"{n} series too few for the requested train/cal/test split")
    tr, cal, te = (data.subset(perm[:n_tr]), data.subset(perm[n_tr:n_tr + n_cal]),
                   data.subset(perm[n_tr + n_cal:]))
    model = _model(model_spec)
    model.fit(tr.inputs.reshape(len(tr), -1), tr.targets.reshape(len(tr), -1))
    hs = collect_horizon_scores(cal, model)
    if method == "cfrnn":
        thr = cfrnn_calibrate(hs, level)
    else:
        thr = copula_calibrate(hs, level, refine=params["refine"])
    regions = predict_regions(te.inputs, model, thr, level)
    recs = regions.records(te.ids)
    cols = ["series_id", "h", "lo", "hi", "threshold", "epsilon"]
    rows = [[r[c] for c in cols] for r in recs]
    widths = np.stack([iv.width for iv in regions.intervals], axis=1)
    metrics = {
        "joint_coverage": joint_coverage(regions, te.targets),
        "mean_total_width": float(np.mean(regions.total_width())),
        "thresholds": thr,
        "n_cal": len(cal),
        "n_test": len(te),
    }
    if method == "cfrnn":
        metrics["per_step_level"] = bonferroni_level(level, k)
    plot = {"kind": "fan", "h": np.arange(1, k + 1), "mean_width": widths.mean(axis=0),
            "min_width": widths.min(axis=0), "max_width": widths.max(axis=0)}
    return cols, rows, metrics, plot, recs


def _run_warning(level, seed, params, data):
    phi, phi_hat = data
    recs = records_from_arrays(phi, phi_hat, params["phi_0"])
    n = len(recs)
    perm = np.random.default_rng(seed).permutation(n)
    n_cal = int(n * params["cal_fraction"])
    if n_cal < 1 or n_cal >= n:
        raise DataError(f"{n} records too few for cal_fraction={params['cal_fraction']}")
    cal = [recs[i] for i in perm[:n_cal]]
    test = [recs[i] for i in perm[n_cal:]]
    ws = calibrate_warning(cal, level, params["phi_0"])
    det, fa = evaluate_warning(ws, test)
    cols = ["index", "phi", "phi_hat", "unsafe", "alert"]
    rows = [[int(i), r.phi, r.phi_hat, int(r.unsafe), int(ws(r.phi_hat))]
            for i, r in zip(perm[n_cal:], test)]
    metrics = {
        "detection_rate": det,
        "false_alert_rate": fa,
        "alert_threshold": ws.alert_threshold,
        "n_cal_unsafe": sum(r.unsafe for r in cal),
        "n_test": len(test),
    }
    plot = {"kind": "warning", "phi": [r.phi for r in test], "phi_hat": [r.phi_hat for r in test],
            "alert": [int(ws(r.phi_hat)) for r in test]}
    return cols, rows, metrics, plot


def emit_plotdata(results: Optional[Dict[str, Any]]) -> str:
    """Plot-ready CSV text for a run's results.

    ``aci`` runs give ``t, rolling_cov, alpha_t, target``; multi-horizon
    runs give the per-step width fan ``h, mean_width, min_width,
    max_width``. Empty results produce only the header.
    """
    layouts = {
        "aci": ["t", "rolling_cov", "alpha_t", "target"],
        "fan": ["h", "mean_width", "min_width", "max_width"],
        "interval": ["t", "lo", "hi", "y"],
        "warning": ["phi", "phi_hat", "alert"],
    }
    if not results:
        return to_csv(layouts["interval"], [])
    cols = layouts[results["kind"]]
    n = len(results[cols[0]])
    columns = []
    for c in cols:
        v = results.get(c, [])
        columns.append(np.broadcast_to(np.asarray(v, dtype=float), (n,)) if np.ndim(v) == 0
                       else np.asarray(v, dtype=float))
    rows = []
    for j in range(n):
        row = []
        for c, arr in zip(cols, columns):
            x = float(arr[j])
            row.append(int(x) if c in ("t", "h", "alert") and x.is_integer() else x)
        rows.append(row)
    return to_csv(cols, rows)


def _versions() -> Dict[str, str]:
    return {
        "conformal_ts": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "generator_defaults": str(GENERATOR_DEFAULTS_VERSION),
    }


def run_trial(cfg: ExperimentConfig, seed: int, out_dir: str, fmt: str) -> Dict[str, Any]:
    resolved = cfg.resolved(seed)
    data = _load(resolved, cfg.method, cfg.params)
    p, level = cfg.params, cfg.level
    extra_json = None
    try:
        with np.errstate(all="raise"):
            if cfg.method == "split":
                cols, rows, metrics, plot = _run_split(level, seed, p, cfg.model, data)
            elif cfg.method == "enbpi":
                cols, rows, metrics, plot = _run_enbpi(level, seed, p, cfg.model, data)
            elif cfg.method == "aci":
                cols, rows, metrics, plot = _run_aci(level, seed, p, cfg.model, data)
            elif cfg.method in MULTI_HORIZON:
                cols, rows, metrics, plot, extra_json = _run_multihorizon(
                    cfg.method, level, seed, p, cfg.model, data)
            else:
                cols, rows, metrics, plot = _run_warning(level, seed, p, data)
    except FloatingPointError as exc:
        raise NumericError(str(exc))
    except np.linalg.LinAlgError as exc:
        raise NumericError(str(exc))

    if fmt == "json":
        payload = extra_json if extra_json is not None else [dict(zip(cols, r)) for r in rows]
        atomic_write(os.path.join(out_dir, "intervals.json"), dumps(payload))
    else:
        atomic_write(os.path.join(out_dir, "intervals.csv"), to_csv(cols, rows))
    metrics = {"method": cfg.method, "level": level, "seed": seed, **metrics}
    atomic_write(os.path.join(out_dir, "metrics.json"), dumps(metrics))
    atomic_write(os.path.join(out_dir, "plotdata.csv"), emit_plotdata(plot))
    manifest = {"config": resolved, "format": fmt, "versions": _versions()}
    atomic_write(os.path.join(out_dir, "manifest.json"), dumps(manifest))
    return metrics


def run(config: Dict[str, Any], out_dir: Optional[str] = None, seed: Optional[int] = None,
        fmt: Optional[str] = None) -> int:
    """Execute a config; returns the process exit code."""
    try:
        cfg = ExperimentConfig.from_dict(config)
        if seed is not None:
            cfg.seeds = [seed]
        out_dir = out_dir or cfg.output.get("dir")
        if not out_dir:
            raise ConfigError("no output directory (use --out or output.dir)")
        fmt = fmt or cfg.output.get("format", "csv")
        multi = len(cfg.seeds) > 1
        for s in cfg.seeds:
            run_trial(cfg, s, os.path.join(out_dir, f"seed_{s}") if multi else out_dir, fmt)
        return EXIT_OK
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config_error", str(exc))
    except DataError as exc:
        return _fail(EXIT_DATA, "data_error", str(exc))
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, "numeric_failure", str(exc))
    except ValueError as exc:
        return _fail(EXIT_DATA, "data_error", str(exc))


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "code": code, "message": message}) + "\n")
    return code


def _read_config(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conformal-ts", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in METHODS:
        p = sub.add_parser(name, help=f"run the {name} method")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed(s)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default=None, help="intervals file format")
    v = sub.add_parser("validate", help="check a config and list problems")
    v.add_argument("--config", required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("CONFORMAL_TS_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = _read_config(args.config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config_error", str(exc))
    if args.command == "validate":
        problems = validate(config)
        sys.stdout.write(json.dumps({"valid": not problems, "diagnostics": problems}) + "\n")
        return EXIT_OK if not problems else EXIT_CONFIG
    if isinstance(config, dict):
        config.setdefault("method", args.command)
        if config["method"] != args.command:
            return _fail(EXIT_CONFIG, "config_error",
                         f"config method {config['method']!r} differs from subcommand {args.command!r}")
    return run(config, args.out, args.seed, args.format)


if __name__ == "__main__":
    sys.exit(main())
