"""Command line interface.

Three subcommands:

run    backtest one method over a CSV dataset or a synthetic series and
       write results.json plus an intervals.csv into --out
synth  generate the synthetic benchmark series (CSV) and a sidecar JSON
       with the generator state and exact reference intervals
eval   recompute metrics from an intervals.csv, optionally against a
       sidecar, and print them as JSON

Exit codes: 0 on success, 2 for invalid configuration or flags, 1 for
runtime failures. Every run-affecting option can also be given in a flat
``key = value`` config file; explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from time import perf_counter

import numpy as np

from .data import SyntheticConfig, gen_synthetic, load_csv, save_wide_csv, split_train_test
from .errors import ConfigError, ConformalTSError, ParseError
from .framing import PredictionInterval, TimeSeries
from .metrics import EvalReport, aggregate_star, evaluate
from .pipelines import FeedbackStream, run_aenbmimocqr, run_enbcqr, run_enbpi, run_mimocqr
from .quantile_net import TrainConfig
from .seeding import derive_seed

SCHEMA_VERSION = 1
METHODS = ("aenbmimocqr", "mimocqr", "enbpi", "enbcqr")


@dataclass
class ExperimentConfig:
    """Fully resolved settings for one backtest run."""

    method: str = "aenbmimocqr"
    alpha: float = 0.1
    n_lags: int = 40
    horizon: int = 30
    n_models: int = 10
    window_size: int = 100
    n_test: int = 390
    epochs: int = 1000
    hidden: tuple[int, ...] = (64, 64)
    learning_rate: float = 1e-3
    cal_fraction: float = 0.5
    seed: int = 0
    workers: int = 1
    data: str | None = None
    layout: str = "wide"
    synthetic: bool = False
    length: int = 1041

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0, 1)")
        if self.n_lags < 1:
            raise ConfigError("p must be >= 1")
        if self.horizon < 1:
            raise ConfigError("H must be >= 1")
        if self.n_models < 2:
            raise ConfigError("B must be >= 2")
        if self.window_size < 1:
            raise ConfigError("T must be >= 1")
        if self.n_test < self.horizon or self.n_test % self.horizon != 0:
            raise ConfigError("n-test must be a positive multiple of H")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not self.hidden or any(w < 1 for w in self.hidden):
            raise ConfigError("hidden must be positive widths like 64,64")
        if self.learning_rate <= 0:
            raise ConfigError("lr must be positive")
        if not 0.0 < self.cal_fraction <= 1.0:
            raise ConfigError("cal-fraction must be in (0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.synthetic == (self.data is not None):
            raise ConfigError("give exactly one data source: --data PATH or --synthetic")
        if self.synthetic and self.length <= 40:
            raise ConfigError("length must exceed the 40-step warmup")

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "p": self.n_lags,
            "H": self.horizon,
            "B": self.n_models,
            "T": self.window_size,
            "n_test": self.n_test,
            "epochs": self.epochs,
            "hidden": list(self.hidden),
            "lr": self.learning_rate,
            "cal_fraction": self.cal_fraction,
            "seed": self.seed,
            "workers": self.workers,
            "data": self.data,
            "layout": self.layout,
            "synthetic": self.synthetic,
            "length": self.length,
        }


def _to_int(key):
    def conv(text: str) -> int:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got {text!r}") from None
    return conv


def _to_float(key):
    def conv(text: str) -> float:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key} expects a number, got {text!r}") from None
    return conv


def _to_bool(key):
    def conv(text: str) -> bool:
        low = text.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key} expects true/false, got {text!r}")
    return conv


def _to_hidden(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in str(text).split(",") if part.strip() != "")
    except ValueError:
        raise ConfigError(f"hidden expects comma-separated widths, got {text!r}") from None


# config-file key -> (ExperimentConfig attribute, converter from string)
_RUN_KEYS = {
    "method": ("method", str),
    "alpha": ("alpha", _to_float("alpha")),
    "p": ("n_lags", _to_int("p")),
    "H": ("horizon", _to_int("H")),
    "B": ("n_models", _to_int("B")),
    "T": ("window_size", _to_int("T")),
    "n-test": ("n_test", _to_int("n-test")),
    "epochs": ("epochs", _to_int("epochs")),
    "hidden": ("hidden", _to_hidden),
    "lr": ("learning_rate", _to_float("lr")),
    "cal-fraction": ("cal_fraction", _to_float("cal-fraction")),
    "seed": ("seed", _to_int("seed")),
    "workers": ("workers", _to_int("workers")),
    "data": ("data", str),
    "layout": ("layout", str),
    "synthetic": ("synthetic", _to_bool("synthetic")),
    "length": ("length", _to_int("length")),
}


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and # comments are ignored."""
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"config line {lineno} is not key = value: {line.strip()!r}")
        key, _, raw = text.partition("=")
        key = key.strip()
        raw = raw.strip().strip('"').strip("'")
        if key not in _RUN_KEYS and key != "out":
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
        values[key] = raw
    return values


def _resolve_run_config(args) -> tuple[ExperimentConfig, str]:
    file_values = parse_config_file(args.config) if args.config else {}
    cfg = ExperimentConfig()
    for key, (attr, conv) in _RUN_KEYS.items():
        if key in file_values:
            setattr(cfg, attr, conv(file_values[key]))
    flag_values = {
        "method": args.method,
        "alpha": args.alpha,
        "p": args.p,
        "H": args.H,
        "B": args.B,
        "T": args.T,
        "n-test": args.n_test,
        "epochs": args.epochs,
        "hidden": args.hidden,
        "lr": args.lr,
        "cal-fraction": args.cal_fraction,
        "seed": args.seed,
        "workers": args.workers,
        "data": args.data,
        "layout": args.layout,
        "synthetic": args.synthetic,
        "length": args.length,
    }
    for key, value in flag_values.items():
        if value is None:
            continue
        attr, conv = _RUN_KEYS[key]
        setattr(cfg, attr, conv(value) if isinstance(value, str) else value)
    out = args.out if args.out is not None else file_values.get("out")
    if not out:
        raise ConfigError("an output directory is required (--out)")
    cfg.validate()
    return cfg, out


def _series_job(payload: dict) -> dict:
    """Backtest one series; runs in a worker process for multi-series data."""
    cfg: ExperimentConfig = payload["cfg"]
    series = TimeSeries(payload["values"], id=payload["id"])
    train_ts, test_ts = split_train_test(series, cfg.n_test)
    stream = FeedbackStream(test_ts)
    run_seed = derive_seed(cfg.seed, series.id)
    tc = TrainConfig(
        epochs=cfg.epochs,
        learning_rate=cfg.learning_rate,
        seed=run_seed,
        hidden=cfg.hidden,
    )
    common = dict(n_lags=cfg.n_lags, horizon=cfg.horizon, alpha=cfg.alpha,
                  seed=run_seed, config=tc)
    if cfg.method == "aenbmimocqr":
        result = run_aenbmimocqr(
            train_ts, stream, n_models=cfg.n_models, window_size=cfg.window_size, **common
        )
    elif cfg.method == "mimocqr":
        result = run_mimocqr(train_ts, stream, cal_fraction=cfg.cal_fraction, **common)
    elif cfg.method == "enbpi":
        result = run_enbpi(train_ts, stream, n_models=cfg.n_models, **common)
    else:
        result = run_enbcqr(train_ts, stream, n_models=cfg.n_models, **common)

    intervals = result.intervals_flat()
    y = result.realized_flat()
    horizons = result.horizons_flat()
    origins = result.origins_flat()
    reference = None
    oracle = payload.get("oracle")
    if oracle is not None:
        lower, upper = oracle
        positions = origins + horizons - 2  # 0-based index of each forecast step
        if not np.any(np.isnan(lower[positions])):
            reference = [
                PredictionInterval(float(lower[pos]), float(upper[pos]))
                for pos in positions
            ]
    report = evaluate(intervals, y, horizons, reference)
    rows = [
        (series.id, int(o), int(h), iv.lower, iv.upper, float(v), int(iv.covers(float(v))))
        for o, h, iv, v in zip(origins, horizons, intervals, y)
    ]
    return {
        "id": series.id,
        "report": report,
        "rows": rows,
        "alpha_traces": None if result.alpha_traces is None else result.alpha_traces.tolist(),
        "skipped_oob_rows": result.skipped_oob_rows,
        "n_blocks": result.n_blocks,
    }


def _report_dict(report: EvalReport, extra: dict) -> dict:
    body = {
        "picp": report.picp,
        "pinaw": report.pinaw,
        "miou": report.miou,
        "picp_per_horizon": report.picp_per_horizon,
        "pinaw_per_horizon": report.pinaw_per_horizon,
        "miou_per_horizon": report.miou_per_horizon,
    }
    body.update(extra)
    return body


def cmd_run(cfg: ExperimentConfig, out_dir) -> dict:
    """Run the configured backtest and write results.json + intervals.csv."""
    started = datetime.now(timezone.utc).isoformat()
    t0 = perf_counter()
    if cfg.synthetic:
        series_obj, oracle = gen_synthetic(SyntheticConfig(seed=cfg.seed, length=cfg.length))
        jobs = [{
            "cfg": cfg, "values": series_obj.values, "id": series_obj.id,
            "oracle": (oracle.lower, oracle.upper),
        }]
    else:
        series_list = load_csv(cfg.data, cfg.layout)
        jobs = [{"cfg": cfg, "values": s.values, "id": s.id, "oracle": None}
                for s in series_list]

    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_series_job, jobs))
    else:
        outcomes = [_series_job(job) for job in jobs]

    per_series = {}
    traces = {}
    reports = []
    all_rows = []
    for outcome in outcomes:
        sid = outcome["id"]
        report = outcome["report"]
        reports.append(report)
        per_series[sid] = _report_dict(report, {
            "skipped_oob_rows": outcome["skipped_oob_rows"],
            "n_blocks": outcome["n_blocks"],
            "n_test": cfg.n_test,
        })
        traces[sid] = outcome["alpha_traces"]
        all_rows.extend(outcome["rows"])
    picp_star, pinaw_star, miou_star = aggregate_star(reports)

    results = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_json_dict(),
        "per_series": per_series,
        "aggregates": {
            "picp_star": picp_star,
            "pinaw_star": pinaw_star,
            "miou_star": miou_star,
        },
        "traces": traces,
        "timestamp": {
            "run_at": started,
            "wall_time_sec": perf_counter() - t0,
        },
    }
    os.makedirs(out_dir, exist_ok=True)
    results_path = os.path.join(out_dir, "results.json")
    with open(results_path, "w", encoding="utf-8") as fh:
        json.dump(results, fh, indent=2, sort_keys=True)
        fh.write("\n")
    intervals_path = os.path.join(out_dir, "intervals.csv")
    with open(intervals_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "origin", "h", "lower", "upper", "y", "covered"])
        for sid, origin, h, lower, upper, y, covered in all_rows:
            writer.writerow([sid, origin, h, repr(float(lower)), repr(float(upper)),
                             repr(float(y)), covered])
    return results


def _json_array(values: np.ndarray) -> list:
    return [None if (isinstance(v, float) and math.isnan(v)) else v
            for v in (float(x) for x in values)]


def cmd_synth(seed: int, out_path, length: int = 1041, alpha: float = 0.1) -> dict:
    """Generate the benchmark series; write a wide CSV and a sidecar JSON."""
    try:
        config = SyntheticConfig(seed=seed, length=length, oracle_alpha=alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    series, oracle = gen_synthetic(config)
    save_wide_csv([series], out_path)
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "id": series.id,
        "seed": seed,
        "length": length,
        "warmup": config.warmup,
        "alpha": alpha,
        "noise_scale": config.noise_scale,
        "mu": _json_array(oracle.mu),
        "sigma": _json_array(oracle.sigma),
        "lower": _json_array(oracle.lower),
        "upper": _json_array(oracle.upper),
    }
    sidecar_path = sidecar_path_for(out_path)
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar


def sidecar_path_for(csv_path) -> str:
    text = str(csv_path)
    if text.endswith(".csv"):
        return text[:-4] + ".oracle.json"
    return text + ".oracle.json"


def _read_intervals_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ParseError(f"{path} has no interval rows")
    header = [c.strip().lower() for c in rows[0]]
    required = ["origin", "h", "lower", "upper", "y"]
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(f"intervals file lacks columns: {', '.join(missing)}")
    idx = {name: header.index(name) for name in required}
    sid_col = header.index("series") if "series" in header else None
    grouped: dict[str, dict[str, list]] = {}
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", row=r)
        sid = row[sid_col].strip() if sid_col is not None else "series"
        entry = grouped.setdefault(sid, {"origin": [], "h": [], "lower": [], "upper": [], "y": []})
        try:
            entry["origin"].append(int(row[idx["origin"]]))
            entry["h"].append(int(row[idx["h"]]))
            for name in ("lower", "upper", "y"):
                entry[name].append(float(row[idx[name]]))
        except ValueError:
            raise ParseError("cannot parse interval row", row=r) from None
    return grouped


def cmd_eval(intervals_path, oracle_path=None, out_path=None) -> dict:
    """Recompute metrics from an intervals file (plus optional sidecar)."""
    grouped = _read_intervals_csv(intervals_path)
    oracle = None
    if oracle_path is not None:
        with open(oracle_path, "r", encoding="utf-8") as fh:
            oracle = json.load(fh)
    per_series = {}
    reports = []
    for sid, cols in grouped.items():
        intervals = [PredictionInterval(lo, up) for lo, up in zip(cols["lower"], cols["upper"])]
        reference = None
        if oracle is not None and (oracle.get("id") == sid or len(grouped) == 1):
            lower, upper = oracle["lower"], oracle["upper"]
            reference = [
                PredictionInterval(float(lower[o + h - 2]), float(upper[o + h - 2]))
                for o, h in zip(cols["origin"], cols["h"])
            ]
        report = evaluate(intervals, np.asarray(cols["y"]), np.asarray(cols["h"]), reference)
        reports.append(report)
        per_series[sid] = _report_dict(report, {})
    picp_star, pinaw_star, miou_star = aggregate_star(reports)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "per_series": per_series,
        "aggregates": {
            "picp_star": picp_star,
            "pinaw_star": pinaw_star,
            "miou_star": miou_star,
        },
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return payload


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conformalts",
        description="Adaptive conformal prediction intervals for multi-step forecasting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="backtest a method and write results")
    run.add_argument("--config", help="flat key = value config file")
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--data", help="CSV dataset path")
    run.add_argument("--layout", choices=("wide", "long"))
    run.add_argument("--synthetic", action="store_const", const=True, default=None,
                     help="use the built-in synthetic benchmark series")
    run.add_argument("--alpha", type=float)
    run.add_argument("--p", type=int, help="lag window length")
    run.add_argument("--H", type=int, help="forecast horizon")
    run.add_argument("--B", type=int, help="bootstrap ensemble size")
    run.add_argument("--T", type=int, help="score window capacity")
    run.add_argument("--n-test", dest="n_test", type=int)
    run.add_argument("--epochs", type=int)
    run.add_argument("--hidden", help="hidden widths, e.g. 64,64")
    run.add_argument("--lr", type=float)
    run.add_argument("--cal-fraction", dest="cal_fraction", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--length", type=int, help="synthetic series length")
    run.add_argument("--out", help="output directory")

    synth = sub.add_parser("synth", help="generate the synthetic benchmark")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--out", required=True, help="CSV path to write")
    synth.add_argument("--length", type=int, default=1041)
    synth.add_argument("--alpha", type=float, default=0.1)

    ev = sub.add_parser("eval", help="recompute metrics from an intervals file")
    ev.add_argument("--intervals", required=True)
    ev.add_argument("--oracle", help="sidecar JSON with reference intervals")
    ev.add_argument("--out", help="write the report here instead of stdout")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg, out_dir = _resolve_run_config(args)
            cmd_run(cfg, out_dir)
        elif args.command == "synth":
            cmd_synth(args.seed, args.out, length=args.length, alpha=args.alpha)
        else:
            cmd_eval(args.intervals, args.oracle, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConformalTSError, OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
