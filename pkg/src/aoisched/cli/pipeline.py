"""Evaluate policies at operating points and turn the results into rows."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .. import limits
from ..ctmc import SingularSystem
from ..sbpsq import SchedProb, SystemParams, clamp_p1, weighted_metrics
from ..schedopt import DEFAULT_BUCKET_LIMIT, PolicySpec, heuristic_policy, npb_policy, ops_optimize
from ..simkit import SimConfig, replicate
from .config import SimSettings
from .rows import ResultRow


def policy_metric(name: str) -> str:
    return "AoI" if name.lower().endswith("-a") else "PAoI"


def resolve_policy(name: str, params: SystemParams, bucket_limit: float = DEFAULT_BUCKET_LIMIT,
                   p1: Optional[float] = None) -> PolicySpec:
    """
    Turn a CLI policy name into a :class:`PolicySpec`.

    An explicit ``p1`` overrides the probability of H1/H2 policies (OPS
    policies are always optimized).
    """
    key = name.lower()
    metric = policy_metric(key)
    if key == "npb":
        return npb_policy(metric)
    if key.startswith("ops"):
        return ops_optimize(params, metric)
    pol = heuristic_policy(params, metric, key[:2].upper(), bucket_limit)
    if p1 is not None:
        pol = PolicySpec(kind=pol.kind, metric=pol.metric, p1=p1, bucket_limit=bucket_limit)
    return pol


def _label(name: str) -> str:
    return name.upper()


def analytic_row(params: SystemParams, policy: PolicySpec, label: str) -> ResultRow:
    rho, r, omega, mu = params.shorthand()
    if policy.kind == "NPB":
        np_ = limits.NpbParams(params.lambda1, params.lambda2, params.mu1, params.mu2)
        paoi = (limits.npb_mean_paoi(np_, 1), limits.npb_mean_paoi(np_, 2))
        aoi = (limits.npb_mean_aoi(np_, 1), limits.npb_mean_aoi(np_, 2))
        return ResultRow.from_means(label, rho, r, omega, mu, None, paoi, aoi)
    report = weighted_metrics(params, SchedProb(clamp_p1(policy.p1)))
    return ResultRow.from_means(label, rho, r, omega, mu, policy.p1, report.paoi_mean, report.aoi_mean)


def simulated_row(params: SystemParams, policy: PolicySpec, label: str, sim: SimSettings) -> ResultRow:
    rho, r, omega, mu = params.shorthand()
    cfg = SimConfig(
        params=params,
        policy=policy,
        horizon=sim.horizon,
        warmup_fraction=sim.warmup_fraction,
        replications=sim.replications,
        seed=sim.seed,
    )
    st = replicate(cfg, workers=sim.workers)
    ci = st.ci["w_aoi" if policy.metric == "AoI" else "w_paoi"]
    ci = tuple(None if math.isnan(v) else v for v in ci)
    return ResultRow.from_means(label, rho, r, omega, mu, policy.p1, st.paoi_mean, st.aoi_mean, "simulated", ci)


def evaluate(params: SystemParams, name: str, sim: SimSettings, bucket_limit: float = DEFAULT_BUCKET_LIMIT,
             p1: Optional[float] = None, force_simulation: bool = False) -> ResultRow:
    """
    Evaluate one named policy at ``params``.

    H2 policies have no analytic model and are always simulated. Numeric
    failures become an error row instead of an exception.
    """
    label = _label(name)
    try:
        policy = resolve_policy(name, params, bucket_limit, p1)
        if force_simulation or policy.kind == "H2":
            return simulated_row(params, policy, label, sim)
        return analytic_row(params, policy, label)
    except (SingularSystem, np.linalg.LinAlgError, ValueError, FloatingPointError, ZeroDivisionError) as exc:
        rho, r, omega, mu = params.shorthand()
        return ResultRow.error(label, rho, r, omega, mu, p1, type(exc).__name__)


def _evaluate_job(job):
    return evaluate(*job)


def evaluate_many(jobs: Sequence[tuple], workers: int = 1) -> list[ResultRow]:
    """``evaluate(*job)`` for every job, in input order."""
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate_job, jobs))
    return [_evaluate_job(j) for j in jobs]


def fixed_p1_row(params: SystemParams, p1: float, label: str = "P1") -> ResultRow:
    return analytic_row(params, PolicySpec(kind="H1", p1=p1), label)
