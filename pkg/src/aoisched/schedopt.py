"""
Scheduler policies.

OPS-P / OPS-A pick ``p1`` by minimizing the exact weighted PAoI / AoI.
The H1 (probabilistic) and H2 (bucket) heuristics use the heavy-traffic
optimal ratio, which depends on the weights and service rates only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import limits
from .sbpsq import SchedProb, SystemParams, weighted_metrics
from .search import grid_then_golden

KINDS = ("OPS-P", "OPS-A", "H1", "H2", "NPB")
METRICS = ("PAoI", "AoI")
SEARCH_LO = 1e-4
SEARCH_HI = 1.0 - 1e-4
GRID_STEP = 0.01
P1_XTOL = 1e-5
DEFAULT_BUCKET_LIMIT = 50.0


def normalize_metric(metric: str) -> str:
    m = metric.strip().lower()
    if m == "paoi":
        return "PAoI"
    if m == "aoi":
        return "AoI"
    raise ValueError(f"unknown metric {metric!r}; expected 'paoi' or 'aoi'")


@dataclass(frozen=True)
class PolicySpec:
    """
    A scheduling policy.

    ``p1`` is the probability (H1, OPS) or target share (H2) of source 1 when
    both queues are occupied; it is unused for NPB. ``objective`` is the
    value of the optimized weighted metric for OPS policies.
    """

    kind: str
    metric: str = "PAoI"
    p1: Optional[float] = None
    bucket_limit: float = DEFAULT_BUCKET_LIMIT
    objective: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.kind != "NPB":
            if self.p1 is None or not 0 < self.p1 < 1:
                raise ValueError(f"{self.kind} needs p1 strictly inside (0, 1)")
        if not 0 < self.bucket_limit < float("inf"):
            raise ValueError("bucket_limit must be finite and positive")

    @property
    def name(self) -> str:
        """Display name, e.g. ``"H2-A"`` or ``"OPS-P"``."""
        if self.kind in ("H1", "H2"):
            return f"{self.kind}-{self.metric[0]}"
        return self.kind

    @property
    def sched_prob(self) -> SchedProb:
        return SchedProb(self.p1)


def ops_optimize(params: SystemParams, metric: str = "PAoI") -> PolicySpec:
    """Optimal probabilistic scheduler for ``params`` under the exact model."""
    metric = normalize_metric(metric)

    def objective(p1: float) -> float:
        report = weighted_metrics(params, SchedProb(p1))
        return report.w_paoi if metric == "PAoI" else report.w_aoi

    best = grid_then_golden(objective, SEARCH_LO, SEARCH_HI, GRID_STEP, P1_XTOL)
    return PolicySpec(kind=f"OPS-{metric[0]}", metric=metric, p1=best.x, objective=best.fun)


def heuristic_ratio(omega: float, mu1: float, mu2: float, metric: str) -> float:
    if normalize_metric(metric) == "PAoI":
        return limits.ht_opt_ratio_paoi(omega, mu1 / mu2)
    return limits.ht_opt_ratio_aoi(omega, mu1, mu2)


def heuristic_policy(
    params: SystemParams | tuple[float, float, float],
    metric: str = "PAoI",
    kind: str = "H1",
    bucket_limit: float = DEFAULT_BUCKET_LIMIT,
) -> PolicySpec:
    """
    H1/H2 policy from the heavy-traffic optimal ratio.

    ``params`` is either a :class:`SystemParams` or an ``(omega, mu1, mu2)``
    tuple; arrival rates never enter.
    """
    if kind not in ("H1", "H2"):
        raise ValueError(f"heuristic kind must be H1 or H2, got {kind!r}")
    metric = normalize_metric(metric)
    if isinstance(params, SystemParams):
        omega, mu1, mu2 = params.omega, params.mu1, params.mu2
    else:
        omega, mu1, mu2 = params
    p = heuristic_ratio(omega, mu1, mu2, metric)
    return PolicySpec(kind=kind, metric=metric, p1=p / (1 + p), bucket_limit=bucket_limit)


def npb_policy(metric: str = "PAoI") -> PolicySpec:
    return PolicySpec(kind="NPB", metric=normalize_metric(metric))


def parse_policy(name: str, params: SystemParams, bucket_limit: float = DEFAULT_BUCKET_LIMIT) -> PolicySpec:
    """Resolve a CLI-style name (``ops-p``, ``h2-a``, ``npb``, ...) against ``params``."""
    key = name.strip().lower()
    if key == "npb":
        return npb_policy()
    head, _, tail = key.partition("-")
    metric = {"p": "PAoI", "a": "AoI"}.get(tail)
    if metric is None:
        raise ValueError(f"unknown policy {name!r}")
    if head == "ops":
        return ops_optimize(params, metric)
    if head in ("h1", "h2"):
        return heuristic_policy(params, metric, head.upper(), bucket_limit)
    raise ValueError(f"unknown policy {name!r}")
