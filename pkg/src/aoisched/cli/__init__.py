"""
Command-line front end.

    aoisched analyze   --rho 1 --r 1 --omega 1 --mu 1 --p1 0.5
    aoisched optimize  --rho 10 --omega 4 --mu 4 --metric paoi
    aoisched simulate  --config run.yaml --policy h2-a --seed 7
    aoisched sweep     --config sweep.yaml --out sweep.csv
    aoisched reproduce fig6 --out results/

Results are CSV with the columns of :data:`rows.FIELDS`. Without ``--out``
rows go to stdout, unless ``AOISCHED_OUTPUT_DIR`` is set, in which case they
are written to ``$AOISCHED_OUTPUT_DIR/<mode>.csv``.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from ..sbpsq import SystemParams, weighted_metrics, SchedProb, clamp_p1
from ..schedopt import ops_optimize
from ..simkit import ConfigError
from .config import ExperimentConfig, POLICIES, build_config, load_file
from .pipeline import evaluate, evaluate_many, fixed_p1_row
from .reproduce import FIGURES, ReproduceSettings, UnknownFigure, run_reproduce
from .rows import FIELDS, ResultRow, read_rows, rows_to_csv, write_rows

OUTPUT_ENV = "AOISCHED_OUTPUT_DIR"

__all__ = ["main", "run_mode", "run_reproduce", "ResultRow", "FIELDS", "read_rows", "write_rows", "ConfigError"]


def _sweep_points(cfg: ExperimentConfig):
    sw = cfg.sweep
    for value in sw.values():
        if sw.variable == "p1":
            yield value, cfg.params
        else:
            short = dict(cfg.shorthand, **{sw.variable: value})
            yield value, SystemParams.from_shorthand(**short)


def run_mode(cfg: ExperimentConfig) -> list[ResultRow]:
    """Run an analyze/optimize/simulate/sweep experiment and return its rows."""
    params = cfg.params
    if cfg.mode == "analyze":
        if cfg.p1 is not None:
            return [fixed_p1_row(params, cfg.p1, "H1")]
        return evaluate_many([(params, name, cfg.sim, cfg.bucket_limit) for name in cfg.policies])
    if cfg.mode == "optimize":
        pol = ops_optimize(params, cfg.metric)
        report = weighted_metrics(params, SchedProb(clamp_p1(pol.p1)))
        rho, r, omega, mu = params.shorthand()
        return [ResultRow.from_means(pol.name, rho, r, omega, mu, pol.p1, report.paoi_mean, report.aoi_mean)]
    if cfg.mode == "simulate":
        return [
            evaluate(params, name, cfg.sim, cfg.bucket_limit, cfg.p1, True)
            for name in cfg.policies
        ]
    if cfg.mode == "sweep":
        jobs = []
        fixed = []
        for value, p in _sweep_points(cfg):
            if cfg.sweep.variable == "p1":
                fixed.append(fixed_p1_row(p, value, "H1"))
            else:
                jobs.extend((p, name, replace(cfg.sim, workers=1), cfg.bucket_limit, cfg.p1) for name in cfg.policies)
        return fixed or evaluate_many(jobs, cfg.sim.workers)
    raise ConfigError(f"mode: {cfg.mode!r} is not a row-producing mode")


def _write_density(cfg: ExperimentConfig, path: Path):
    p1 = cfg.p1 if cfg.p1 is not None else ops_optimize(cfg.params, cfg.metric).p1
    report = weighted_metrics(cfg.params, SchedProb(clamp_p1(p1)), densities=True)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("source", "metric", "x", "pdf", "cdf"))
        for key in sorted(report.densities):
            table = report.densities[key]
            metric, source = key[:-1], key[-1]
            for x, f, F in zip(table["x"], table["pdf"], table["cdf"]):
                w.writerow((source, metric, repr(float(x)), repr(float(f)), repr(float(F))))


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment file")
    common.add_argument("--out", type=Path, help="output CSV file (directory for reproduce)")
    common.add_argument("--seed", type=int)
    common.add_argument("--metric", choices=("paoi", "aoi"))
    common.add_argument("--policy", help=f"comma-separated list from {{{','.join(POLICIES)}}}")
    for name in ("rho", "r", "omega", "mu", "p1"):
        common.add_argument(f"--{name}", type=float)
    common.add_argument("--bucket-limit", type=float, dest="bucket_limit")
    for name in ("lambda1", "lambda2", "nu1", "nu2", "s1", "s2", "w1", "w2"):
        common.add_argument(f"--{name}", type=float)
    common.add_argument("--horizon", type=int, help="events per replication")
    common.add_argument("--replications", type=int)
    common.add_argument("--warmup-fraction", type=float, dest="warmup_fraction")
    common.add_argument("--workers", type=int)

    parser = argparse.ArgumentParser(prog="aoisched", description="AoI/PAoI analysis of two-source scheduling.")
    sub = parser.add_subparsers(dest="mode", required=True)
    sub.add_parser("analyze", parents=[common], help="exact per-source moments").add_argument(
        "--density", type=Path, help="also write pdf/cdf tables to this CSV")
    sub.add_parser("optimize", parents=[common], help="optimal probabilistic scheduler")
    sub.add_parser("simulate", parents=[common], help="discrete-event simulation")
    sw = sub.add_parser("sweep", parents=[common], help="parameter sweep")
    sw.add_argument("--variable", dest="sweep_variable", choices=("rho", "r", "omega", "p1"))
    sw.add_argument("--range", dest="sweep_range", nargs=2, type=float, metavar=("LO", "HI"))
    sw.add_argument("--points", dest="sweep_points", type=int)
    sw.add_argument("--linear", dest="sweep_linear", action="store_true", help="linear instead of log spacing")
    rp = sub.add_parser("reproduce", parents=[common], help="regenerate the numerical study as CSV")
    rp.add_argument("figure", help="|".join(FIGURES))
    rp.add_argument("--points", type=int, default=21, help="grid points per curve (<= 50)")
    return parser


def _overrides(ns: argparse.Namespace) -> dict:
    keys = ("seed", "metric", "policy", "rho", "r", "omega", "mu", "p1", "bucket_limit",
            "lambda1", "lambda2", "nu1", "nu2", "s1", "s2", "w1", "w2",
            "horizon", "replications", "warmup_fraction", "workers")
    ov = {k: getattr(ns, k) for k in keys}
    ov["density"] = getattr(ns, "density", None)
    if getattr(ns, "sweep_variable", None):
        ov["sweep_variable"] = ns.sweep_variable
    if getattr(ns, "sweep_range", None):
        ov["sweep_lo"], ov["sweep_hi"] = ns.sweep_range
    if getattr(ns, "sweep_points", None):
        ov["sweep_points"] = ns.sweep_points
    if getattr(ns, "sweep_linear", False):
        ov["sweep_log"] = False
    return ov


def _emit(rows: list[ResultRow], mode: str, out: Optional[Path]):
    if out is None and os.environ.get(OUTPUT_ENV):
        out = Path(os.environ[OUTPUT_ENV]) / f"{mode}.csv"
    if out is None:
        sys.stdout.write(rows_to_csv(rows))
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        write_rows(rows, fh)


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = _parser().parse_args(argv)
    try:
        data = load_file(ns.config) if ns.config else {}
        if ns.mode == "reproduce":
            if ns.figure not in FIGURES:
                raise UnknownFigure(f"unknown figure {ns.figure!r}; choose from {', '.join(FIGURES)}")
            cfg = build_config("reproduce", {k: v for k, v in data.items() if k in ("sim", "mode")}, _overrides(ns))
            outdir = ns.out or Path(os.environ.get(OUTPUT_ENV, "results"))
            try:
                settings = ReproduceSettings(points=ns.points, sim=cfg.sim)
            except ValueError as exc:
                raise ConfigError(f"points: {exc}") from None
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                paths = run_reproduce(ns.figure, outdir, settings)
            for p in paths:
                print(p)
            return 0
        cfg = build_config(ns.mode, data, {**_overrides(ns), "output": ns.out})
        rows = run_mode(cfg)
        if cfg.density is not None:
            _write_density(cfg, cfg.density)
        _emit(rows, cfg.mode, cfg.output)
    except (ConfigError, UnknownFigure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
