"""Command-line front end: run a named experiment from a JSON config.

    mmlab run config.json [--seed S] [--out PREFIX] [--workers W]
    mmlab run - < config.json
    mmlab fixtures
    mmlab sample --space sphere --n 3 --count 100 --seed 1 --out dump.csv

Each run writes ``<out>.csv`` and ``<out>.manifest.json``. Exit status is 0
on success, 1 for an invalid config and 2 when an estimator fails.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic_bounds import get_curve
from .concentration_lab import (
    WAIST_MIN_SAMPLES,
    estimate_isoperimetric_sphere,
    estimate_profile,
    estimate_waist,
    verify_chain,
)
from .curvature_pinching import (
    FIELD_GENERATORS,
    classification_verdict,
    covering_characteristic,
    dimension_bound_from_tail,
    dimension_bound_N1,
    euler_characteristic,
    make_field,
    pointwise_pinched,
)
from .fixtures import FUNCTIONS, default_curve, list_fixtures, make_function, make_space
from .homogeneous_spaces import SeededSampler
from .io import write_csv, write_json, write_sample_dump
from .metric_core import FiniteMetricSpace, gh_distance_small


EXPERIMENTS = ("profile", "waist", "chain", "bounds", "gh", "pinch", "n1", "euler")
MONTE_CARLO = ("profile", "waist", "chain")
WORKERS_ENV = "MMLAB_WORKERS"

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class ConfigError(ValueError):
    pass


def _grid(grid) -> np.ndarray:
    if isinstance(grid, list):
        grid = {"values": grid}
    if not isinstance(grid, dict):
        raise ConfigError("epsGrid: expected an object {min, max, count, spacing} or a list of values")
    if "values" in grid:
        e = np.asarray(grid["values"], dtype=float)
    else:
        try:
            lo, hi, count = float(grid["min"]), float(grid["max"]), int(grid["count"])
        except KeyError as exc:
            raise ConfigError(f"epsGrid: missing field {exc.args[0]!r}") from None
        spacing = grid.get("spacing", "linear")
        if count < 1:
            raise ConfigError("epsGrid.count: must be >= 1")
        if spacing == "linear":
            e = np.linspace(lo, hi, count)
        elif spacing == "log":
            if lo <= 0:
                raise ConfigError("epsGrid.min: must be > 0 for log spacing")
            e = np.geomspace(lo, hi, count)
        else:
            raise ConfigError(f"epsGrid.spacing: expected 'linear' or 'log', got {spacing!r}")
    if e.size == 0 or (e <= 0).any():
        raise ConfigError("epsGrid: values must be positive")
    if (np.diff(e) <= 0).any():
        raise ConfigError("epsGrid: values must be strictly increasing")
    return e


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    out: str = "report"
    N: int | None = None
    space: dict | None = None
    function: str | None = None
    epsilons: np.ndarray | None = None
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config: top level must be a JSON object")
        exp = doc.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment: expected one of {list(EXPERIMENTS)}, got {exp!r}")
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
            raise ConfigError(f"seed: expected a non-negative 64-bit integer, got {seed!r}")
        out = doc.get("out", exp)
        if not isinstance(out, str) or not out:
            raise ConfigError("out: expected a non-empty path prefix")
        cfg = cls(exp, seed, out, raw=dict(doc))
        if exp in MONTE_CARLO:
            n = doc.get("N")
            if not isinstance(n, int) or isinstance(n, bool) or n < 100:
                raise ConfigError(f"N: Monte Carlo experiments need an integer N >= 100, got {n!r}")
            if exp != "profile" and n < WAIST_MIN_SAMPLES:
                raise ConfigError(f"N: the {exp} experiment estimates a waist and needs N >= {WAIST_MIN_SAMPLES}, got {n}")
            cfg.N = n
            if not isinstance(doc.get("space"), dict):
                raise ConfigError("space: expected an object such as {\"kind\": \"sphere\", \"n\": 10}")
            try:
                space = make_space(doc["space"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"space: {exc}") from None
            cfg.space = doc["space"]
            fn = doc.get("function")
            if fn not in FUNCTIONS:
                raise ConfigError(f"function: expected one of {sorted(FUNCTIONS)}, got {fn!r}")
            try:
                make_function(fn, space)
            except ValueError as exc:
                raise ConfigError(f"function: {exc}") from None
            cfg.function = fn
            if exp == "chain" and space.kind != "sphere":
                raise ConfigError("space.kind: the chain experiment needs a sphere (analytic isoperimetry)")
        if exp in MONTE_CARLO or exp == "bounds":
            if "epsGrid" not in doc:
                raise ConfigError("epsGrid: required for this experiment")
            cfg.epsilons = _grid(doc["epsGrid"])
        if exp == "bounds":
            if not isinstance(doc.get("curve"), str):
                raise ConfigError("curve: expected a curve name")
            try:
                get_curve(doc["curve"], **doc.get("params", {}))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"curve: {exc}") from None
        if exp == "gh":
            for key in ("X", "Y"):
                if key not in doc:
                    raise ConfigError(f"{key}: required metric space document")
                try:
                    _load_metric(doc[key])
                except (ValueError, TypeError, KeyError, OSError) as exc:
                    raise ConfigError(f"{key}: {exc}") from None
        if exp == "pinch":
            fld = doc.get("field")
            if not isinstance(fld, dict) or fld.get("generator") not in FIELD_GENERATORS:
                raise ConfigError(f"field.generator: expected one of {sorted(FIELD_GENERATORS)}")
            for key in ("n", "count"):
                if not isinstance(fld.get(key), int) or fld[key] < 2:
                    raise ConfigError(f"field.{key}: expected an integer >= 2")
            delta = doc.get("delta", 0.25)
            if not isinstance(delta, (int, float)) or not 0 < delta <= 1:
                raise ConfigError("delta: expected a number in (0, 1]")
        if exp == "n1":
            ds = doc.get("d")
            ds = ds if isinstance(ds, list) else [ds]
            if not ds or not all(isinstance(d, (int, float)) and not isinstance(d, bool) and d > 0 for d in ds):
                raise ConfigError("d: expected a positive number or a list of them")
        if exp == "euler":
            if doc.get("kind") not in ("sphere", "complexProjective", "quaternionicProjective"):
                raise ConfigError("kind: expected sphere, complexProjective or quaternionicProjective")
            ns = doc.get("n")
            ns = ns if isinstance(ns, list) else [ns]
            if not ns or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in ns):
                raise ConfigError("n: expected an integer >= 1 or a list of them")
            deg = doc.get("degree", 1)
            if not isinstance(deg, int) or deg < 1:
                raise ConfigError("degree: expected an integer >= 1")
        return cfg


def _load_metric(doc) -> FiniteMetricSpace:
    if isinstance(doc, str):
        doc = json.loads(Path(doc).read_text())
    return FiniteMetricSpace.from_json(doc)


# ---------------------------------------------------------------------------
# experiment runners: each returns (header, rows, results-for-manifest)


def _profile(cfg, sampler):
    space = make_space(cfg.space)
    f = make_function(cfg.function, space)
    prof = estimate_profile(f, space, sampler, cfg.epsilons, cfg.N)
    curve = default_curve(space)
    bound = curve.table(prof.epsilons) if curve is not None else np.full(prof.epsilons.shape, np.nan)
    rows = zip(prof.epsilons, prof.tail_fractions, prof.stderr, bound)
    results = {"median": prof.median, "curve": curve.name if curve else None}
    return ["epsilon", "value", "stderr", "bound"], rows, results


def _waist(cfg, sampler):
    space = make_space(cfg.space)
    f = make_function(cfg.function, space)
    w = estimate_waist(
        f, space, sampler, cfg.epsilons, cfg.N,
        delta=cfg.raw.get("delta"), band_distance=cfg.raw.get("bandDistance", "auto"),
    )
    results = {"median": w.median, "delta": w.level_band_delta, "band_size": w.band_size, "strategy": w.strategy}
    return ["epsilon", "value", "stderr"], zip(w.epsilons, w.tube_measures, w.stderr), results


def _chain(cfg, sampler):
    space = make_space(cfg.space)
    f = make_function(cfg.function, space)
    prof = estimate_profile(f, space, sampler.spawn(0), cfg.epsilons, cfg.N)
    w = estimate_waist(f, space, sampler.spawn(1), cfg.epsilons, cfg.N, delta=cfg.raw.get("delta"))
    alpha = estimate_isoperimetric_sphere(space.n, cfg.epsilons)
    rep = verify_chain(prof, w, alpha, n_se=float(cfg.raw.get("nStdErr", 3.0)))
    header = ["epsilon", "tail", "tail_stderr", "waist", "waist_stderr", "alpha",
              "slack", "concentration_ok", "lower_ok", "upper_ok"]
    rows = [
        [e, prof.tail_fractions[i], prof.stderr[i], w.tube_measures[i], w.stderr[i], alpha[i],
         rep.slack[i], rep.concentration_ok[i], rep.lower_ok[i], rep.upper_ok[i]]
        for i, e in enumerate(cfg.epsilons)
    ]
    results = {"passed": rep.passed, "median": prof.median, "delta": w.level_band_delta, "violations": rep.violations()}
    return header, rows, results


def _bounds(cfg, sampler):
    curve = get_curve(cfg.raw["curve"], **cfg.raw.get("params", {}))
    return ["epsilon", "value"], zip(cfg.epsilons, curve.table(cfg.epsilons)), {"curve": curve.name, "doc": curve.doc}


def _gh(cfg, sampler):
    x, y = _load_metric(cfg.raw["X"]), _load_metric(cfg.raw["Y"])
    d = gh_distance_small(x, y)
    return ["size_x", "size_y", "gh_distance"], [[len(x), len(y), d]], {"gh_distance": d}


def _pinch(cfg, sampler):
    fld = cfg.raw["field"]
    delta = float(cfg.raw.get("delta", 0.25))
    dims = cfg.raw.get("dims", [fld["n"]])
    rows, verdicts = [], []
    for i, n in enumerate(dims):
        field_ = make_field(fld["generator"], int(n), int(fld["count"]), SeededSampler(sampler.seed, i), **fld.get("params", {}))
        weak = pointwise_pinched(field_, delta)
        strict = pointwise_pinched(field_, delta, strict=True)
        verdict = classification_verdict(int(n), weak)
        verdicts.append(verdict)
        s = field_.stats
        rows.append([n, len(field_), s["min"], s["max"], s["median"], s["lipschitz"], delta, weak, strict, verdict["verdict"]])
    header = ["n", "count", "min", "max", "median", "lipschitz", "delta", "weak", "strict", "verdict"]
    write_json(Path(cfg.out + ".verdict.json"), verdicts)
    return header, rows, {"verdicts": verdicts}


def _n1(cfg, sampler):
    ds = cfg.raw["d"] if isinstance(cfg.raw["d"], list) else [cfg.raw["d"]]
    rows = [[float(d), dimension_bound_N1(d), dimension_bound_from_tail(d / 2.0)] for d in ds]
    return ["d", "n1", "n_tail_at_half_d"], rows, {}


def _euler(cfg, sampler):
    ns = cfg.raw["n"] if isinstance(cfg.raw["n"], list) else [cfg.raw["n"]]
    deg = int(cfg.raw.get("degree", 1))
    kind = cfg.raw["kind"]
    rows = []
    for n in ns:
        chi = euler_characteristic(kind, n)
        rows.append([kind, n, chi, deg, covering_characteristic(chi, deg)])
    return ["kind", "n", "chi", "degree", "cover_chi"], rows, {}


RUNNERS = {
    "profile": _profile,
    "waist": _waist,
    "chain": _chain,
    "bounds": _bounds,
    "gh": _gh,
    "pinch": _pinch,
    "n1": _n1,
    "euler": _euler,
}


def run(config: ExperimentConfig, workers: int = 1) -> tuple:
    """Run one experiment; returns ``(csv_path, manifest_path)``."""
    t0 = time.perf_counter()
    sampler = SeededSampler(config.seed, 0, workers=max(1, int(workers)))
    header, rows, results = RUNNERS[config.experiment](config, sampler)
    csv_path = write_csv(config.out + ".csv", header, list(rows))
    manifest = {
        "config": config.raw,
        "library": "mmlab",
        "version": __version__,
        "wall_time_s": time.perf_counter() - t0,
        "workers": workers,
        "csv": csv_path.name,
        "results": results,
        "resampled": sampler.resampled,
    }
    man_path = write_json(config.out + ".manifest.json", manifest)
    return csv_path, man_path


def _read_config(source: str) -> dict:
    text = sys.stdin.read() if source == "-" else Path(source).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _cmd_run(args) -> int:
    try:
        doc = _read_config(args.config)
        if args.seed is not None:
            doc["seed"] = args.seed
        if args.out is not None:
            doc["out"] = args.out
        cfg = ExperimentConfig.from_dict(doc)
    except (ConfigError, OSError) as exc:
        print(f"mmlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    workers = args.workers or int(os.environ.get(WORKERS_ENV, "1") or 1)
    try:
        csv_path, man_path = run(cfg, workers)
    except Exception as exc:  # estimator failures surface with context
        print(f"mmlab: {cfg.experiment} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(csv_path)
    print(man_path)
    return EXIT_OK


def _cmd_fixtures(args) -> int:
    cat = list_fixtures()
    if args.json:
        print(json.dumps(cat, indent=2))
    else:
        width = max(len(c["name"]) for c in cat)
        for c in cat:
            print(f"{c['category']:<9} {c['name']:<{width}}  {c['description']}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    desc = {"kind": args.space, "n": args.n}
    if args.k is not None:
        desc["k"] = args.k
    try:
        space = make_space(desc)
    except (KeyError, ValueError) as exc:
        print(f"mmlab: config error: space: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sampler = SeededSampler(args.seed, args.stream)
    pts = space.sample(sampler, args.count)
    path, mpath = write_sample_dump(args.out, pts, space, sampler)
    print(path)
    print(mpath)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mmlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config ('-' reads stdin)")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--workers", type=int, help=f"worker threads (default ${WORKERS_ENV} or 1); never changes results")
    r.set_defaults(func=_cmd_run)

    fx = sub.add_parser("fixtures", help="list named spaces, functions, curves and fields")
    fx.add_argument("--json", action="store_true")
    fx.set_defaults(func=_cmd_fixtures)

    s = sub.add_parser("sample", help="dump Haar samples to CSV with a seed manifest")
    s.add_argument("--space", required=True, choices=["sphere", "rotation", "grassmannian"])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_sample)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
