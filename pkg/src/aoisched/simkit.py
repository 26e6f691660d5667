"""
Discrete-event simulation of the two-source status update system.

The server keeps one waiting slot per source (a new packet replaces the
waiting one of the same source) and is work-conserving. When both slots are
occupied at a service completion the next packet is chosen by

* ``H1`` / ``OPS-*``: a biased coin with ``P(source 1) = p1``;
* ``H2``: the source with the larger bucket, buckets being updated on every
  transmission so that the long-run share of source 1 is ``p1``;

and ``NPB`` has no waiting room at all. Service includes retransmissions and
is exponential with rate ``mu_i = nu_i * s_i``.

Each source's age process is kept as a list of cycles ``(psi, L)``: the age
resets to the system time ``psi`` of a received packet and then grows with
unit slope for ``L`` time units, until the next reception with peak
``psi + L``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np
from scipy import stats

from .sbpsq import SystemParams
from .schedopt import PolicySpec

MODE_COIN, MODE_BUCKET, MODE_BUFFERLESS = 0, 1, 2
PURPOSES = ("arrivals-1", "arrivals-2", "services", "scheduler-coins")
MIN_RECEPTIONS = 10_000

# counter slots filled by the kernel
(C_ARR1, C_ARR2, C_REC1, C_REC2, C_DISC1, C_DISC2, C_CYC1, C_CYC2, C_ORDER,
 C_EVENTS, C_WORK_VIOL, C_BUCKET_VIOL, C_INSYS1, C_INSYS2, C_OVERFLOW) = range(15)
N_COUNTERS = 15


class ConfigError(ValueError):
    """Invalid simulation or experiment configuration."""


def aoi_accumulate(last_reset_age, interval):
    """Area under the age curve over ``interval`` starting from ``last_reset_age``."""
    return last_reset_age * interval + 0.5 * interval * interval


@dataclass(frozen=True)
class SimConfig:
    """
    One simulation experiment.

    ``horizon`` bounds the number of events (arrivals plus service
    completions) per replication; ``horizon_time`` optionally stops a
    replication earlier in simulated time. The first ``warmup_fraction`` of
    the horizon (of ``horizon_time`` when given) is discarded.
    """

    params: SystemParams
    policy: PolicySpec
    horizon: int = 1_000_000
    horizon_time: Optional[float] = None
    warmup_fraction: float = 0.2
    replications: int = 1
    seed: int = 0
    keep_order: bool = False

    def __post_init__(self):
        if not isinstance(self.horizon, (int, np.integer)) or self.horizon < 10:
            raise ConfigError(f"horizon must be an integer event count >= 10, got {self.horizon!r}")
        if self.horizon_time is not None and not self.horizon_time > 0:
            raise ConfigError(f"horizon_time must be positive, got {self.horizon_time!r}")
        if not 0 <= self.warmup_fraction < 0.5:
            raise ConfigError(f"warmup_fraction must lie in [0, 0.5), got {self.warmup_fraction!r}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def bucket_limit(self) -> float:
        return self.policy.bucket_limit


@numba.njit(cache=True)
def _simulate_kernel(lam1, lam2, mu1, mu2, mode, p1, blimit, max_events, t_stop,
                     warm_events, warm_time, g_a1, g_a2, g_s, g_c,
                     psi1, len1, psi2, len2, order, order_choice, counters, out):
    inf = np.inf
    p2 = 1.0 - p1
    t = 0.0
    na1 = g_a1.exponential(1.0 / lam1) if lam1 > 0 else inf
    na2 = g_a2.exponential(1.0 / lam2) if lam2 > 0 else inf
    dep = inf
    serving = 0          # 0 idle, else source index
    serving_gen = 0.0
    q1 = False
    q2 = False
    q1_gen = 0.0
    q2_gen = 0.0
    b1 = 0.0
    b2 = 0.0
    # per-source age bookkeeping: last reception time, age right after it
    last1 = -1.0
    last2 = -1.0
    reset1 = 0.0
    reset2 = 0.0
    open1 = False        # a cycle started while measuring
    open2 = False
    measuring = False
    measure_start = -1.0
    ev = 0
    while ev < max_events:
        if serving == 0 and (q1 or q2):
            counters[C_WORK_VIOL] += 1
        if abs(b1 + b2) > 1e-9:
            counters[C_BUCKET_VIOL] += 1
        # arrivals before completions on ties, source 1 first
        if na1 <= na2 and na1 <= dep:
            kind = 1
            t_next = na1
        elif na2 <= dep:
            kind = 2
            t_next = na2
        else:
            kind = 3
            t_next = dep
        if t_next > t_stop:
            break
        t = t_next
        ev += 1
        counters[C_EVENTS] += 1
        if not measuring and ev > warm_events and t >= warm_time:
            measuring = True
            measure_start = t
        start_src = 0
        choice = False
        if kind == 1 or kind == 2:
            if kind == 1:
                counters[C_ARR1] += 1
                na1 = t + g_a1.exponential(1.0 / lam1)
            else:
                counters[C_ARR2] += 1
                na2 = t + g_a2.exponential(1.0 / lam2)
            if serving == 0:
                start_src = kind
                serving_gen = t
            elif mode == MODE_BUFFERLESS:
                counters[C_DISC1 + kind - 1] += 1
            elif kind == 1:
                if q1:
                    counters[C_DISC1] += 1
                q1 = True
                q1_gen = t
            else:
                if q2:
                    counters[C_DISC2] += 1
                q2 = True
                q2_gen = t
        else:
            src = serving
            if src == 1:
                counters[C_REC1] += 1
                if last1 >= 0.0 and open1:
                    k = counters[C_CYC1]
                    if k < psi1.shape[0]:
                        psi1[k] = reset1
                        len1[k] = t - last1
                        counters[C_CYC1] = k + 1
                    else:
                        counters[C_OVERFLOW] += 1
                last1 = t
                reset1 = t - serving_gen
                open1 = measuring
            else:
                counters[C_REC2] += 1
                if last2 >= 0.0 and open2:
                    k = counters[C_CYC2]
                    if k < psi2.shape[0]:
                        psi2[k] = reset2
                        len2[k] = t - last2
                        counters[C_CYC2] = k + 1
                    else:
                        counters[C_OVERFLOW] += 1
                last2 = t
                reset2 = t - serving_gen
                open2 = measuring
            serving = 0
            dep = inf
            if q1 and q2:
                choice = True
                if mode == MODE_BUCKET:
                    if b1 > b2:
                        start_src = 1
                    elif b2 > b1:
                        start_src = 2
                    else:
                        start_src = 1 if p1 >= p2 else 2
                else:
                    start_src = 1 if g_c.random() < p1 else 2
            elif q1:
                start_src = 1
            elif q2:
                start_src = 2
            if start_src == 1:
                q1 = False
                serving_gen = q1_gen
            elif start_src == 2:
                q2 = False
                serving_gen = q2_gen
        if start_src != 0:
            serving = start_src
            if start_src == 1:
                dep = t + g_s.standard_exponential() / mu1
                b1 -= p2
                b2 += p2
            else:
                dep = t + g_s.standard_exponential() / mu2
                b2 -= p1
                b1 += p1
            # symmetric clamp keeps b1 + b2 = 0
            if b1 > blimit:
                b1 = blimit
            elif b1 < -blimit:
                b1 = -blimit
            b2 = -b1
            if measuring:
                k = counters[C_ORDER]
                if k < order.shape[0]:
                    order[k] = start_src
                    order_choice[k] = choice
                counters[C_ORDER] = k + 1
    counters[C_INSYS1] = int(q1) + int(serving == 1)
    counters[C_INSYS2] = int(q2) + int(serving == 2)
    out[0] = t
    out[1] = measure_start
    out[2] = b1


@dataclass
class SourceTrace:
    """Recorded age cycles of one source after warmup."""

    psi: np.ndarray
    length: np.ndarray

    @property
    def peaks(self) -> np.ndarray:
        return self.psi + self.length

    @property
    def n_cycles(self) -> int:
        return int(self.psi.size)

    @property
    def mean_aoi(self) -> float:
        total = self.length.sum()
        return float(aoi_accumulate(self.psi, self.length).sum() / total) if total > 0 else math.nan

    @property
    def mean_paoi(self) -> float:
        return float(self.peaks.mean()) if self.psi.size else math.nan

    def aoi_cdf(self, x) -> np.ndarray:
        """Time-average empirical CDF of the age, evaluated exactly at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        total = self.length.sum()
        lo = np.sort(self.psi)
        hi = np.sort(self.peaks)
        c_lo = np.concatenate(([0.0], np.cumsum(lo)))
        c_hi = np.concatenate(([0.0], np.cumsum(hi)))
        n_lo = np.searchsorted(lo, x, side="right")
        n_hi = np.searchsorted(hi, x, side="right")
        # sum_j clip(x - psi_j, 0, L_j) = sum_{psi<x}(x - psi) - sum_{peak<x}(x - peak)
        mass = (x * n_lo - c_lo[n_lo]) - (x * n_hi - c_hi[n_hi])
        return mass / total

    def aoi_histogram(self, edges) -> np.ndarray:
        """Time-average density of the age on the bins given by ``edges``."""
        edges = np.asarray(edges, dtype=float)
        return np.diff(self.aoi_cdf(edges)) / np.diff(edges)

    def paoi_histogram(self, edges) -> np.ndarray:
        counts, _ = np.histogram(self.peaks, bins=edges)
        return counts / (self.psi.size * np.diff(edges))


@dataclass
class RunResult:
    """One replication."""

    traces: tuple[SourceTrace, SourceTrace]
    arrivals: tuple[int, int]
    receptions: tuple[int, int]
    discards: tuple[int, int]
    in_system: tuple[int, int]
    events: int
    end_time: float
    measure_start: float
    n_transmissions: int
    order: Optional[np.ndarray] = None
    order_choice: Optional[np.ndarray] = None
    work_violations: int = 0
    bucket_violations: int = 0

    @property
    def aoi_mean(self) -> tuple[float, float]:
        return self.traces[0].mean_aoi, self.traces[1].mean_aoi

    @property
    def paoi_mean(self) -> tuple[float, float]:
        return self.traces[0].mean_paoi, self.traces[1].mean_paoi

    def source1_share(self) -> float:
        """Fraction of post-warmup transmissions given to source 1."""
        if self.order is None or self.order.size == 0:
            return math.nan
        return float(np.mean(self.order == 1))


@dataclass
class SimStats:
    """
    Estimates pooled over replications.

    ``ci`` maps ``"aoi1"``, ``"aoi2"``, ``"paoi1"``, ``"paoi2"``, ``"w_aoi"``
    and ``"w_paoi"`` to ``(low, high)`` 95% t-intervals across replications
    (NaN with a single replication).
    """

    omega: tuple[float, float]
    runs: list[RunResult] = field(repr=False)
    estimates: dict
    ci: dict

    @property
    def aoi_mean(self) -> tuple[float, float]:
        return self.estimates["aoi1"], self.estimates["aoi2"]

    @property
    def paoi_mean(self) -> tuple[float, float]:
        return self.estimates["paoi1"], self.estimates["paoi2"]

    @property
    def w_aoi(self) -> float:
        return self.estimates["w_aoi"]

    @property
    def w_paoi(self) -> float:
        return self.estimates["w_paoi"]

    @property
    def replications(self) -> int:
        return len(self.runs)

    def receptions(self) -> tuple[int, int]:
        return tuple(sum(r.receptions[i] for r in self.runs) for i in range(2))

    def discards(self) -> tuple[int, int]:
        return tuple(sum(r.discards[i] for r in self.runs) for i in range(2))

    def pooled_trace(self, source: int) -> SourceTrace:
        i = source - 1
        return SourceTrace(
            np.concatenate([r.traces[i].psi for r in self.runs]),
            np.concatenate([r.traces[i].length for r in self.runs]),
        )


def _mode(policy: PolicySpec) -> int:
    if policy.kind == "NPB":
        return MODE_BUFFERLESS
    if policy.kind == "H2":
        return MODE_BUCKET
    return MODE_COIN


def replication_streams(seed: int, replication: int) -> list[np.random.Generator]:
    """Independent generators for each purpose of one replication."""
    root = np.random.SeedSequence(int(seed), spawn_key=(int(replication),))
    return [np.random.Generator(np.random.PCG64(s)) for s in root.spawn(len(PURPOSES))]


def _trace_capacity(params: SystemParams, n: int) -> int:
    """Buffer size for per-source cycle records over ``n`` events."""
    # each event is a service completion with probability at most q
    top = max(params.mu1, params.mu2)
    q = top / (params.lambda1 + params.lambda2 + top)
    guess = int(1.1 * n * q + 10.0 * math.sqrt(n * q) + 1000)
    return min(n // 2 + 2, guess)


def run_replication(cfg: SimConfig, replication: int = 0) -> RunResult:
    """Run one replication of ``cfg`` with its own random streams."""
    params, policy = cfg.params, cfg.policy
    n = int(cfg.horizon)
    t_stop = math.inf if cfg.horizon_time is None else float(cfg.horizon_time)
    # warmup is measured in the unit that bounds the run
    if cfg.horizon_time is None:
        warm_events, warm_time = int(cfg.warmup_fraction * n), 0.0
    else:
        warm_events, warm_time = 0, cfg.warmup_fraction * cfg.horizon_time
    p1 = policy.p1 if policy.p1 is not None else 0.5
    full = n // 2 + 2
    cap = _trace_capacity(params, n)
    while True:
        psi1, len1, psi2, len2 = (np.empty(cap) for _ in range(4))
        order_cap = cap if cfg.keep_order else 0
        order = np.zeros(order_cap, dtype=np.int8)
        order_choice = np.zeros(order_cap, dtype=np.bool_)
        counters = np.zeros(N_COUNTERS, dtype=np.int64)
        out = np.zeros(3)
        g_a1, g_a2, g_s, g_c = replication_streams(cfg.seed, replication)
        _simulate_kernel(
            float(params.lambda1), float(params.lambda2), float(params.mu1), float(params.mu2),
            _mode(policy), float(p1), float(policy.bucket_limit), n, t_stop,
            warm_events, warm_time, g_a1, g_a2, g_s, g_c,
            psi1, len1, psi2, len2, order, order_choice, counters, out,
        )
        overflow = counters[C_OVERFLOW] > 0 or (cfg.keep_order and counters[C_ORDER] > order_cap)
        if not overflow or cap >= full:
            break
        # the size guess was too small: rerun on the same streams with full buffers
        cap = full
    c = counters
    n_order = int(c[C_ORDER])
    result = RunResult(
        traces=(
            SourceTrace(psi1[: c[C_CYC1]].copy(), len1[: c[C_CYC1]].copy()),
            SourceTrace(psi2[: c[C_CYC2]].copy(), len2[: c[C_CYC2]].copy()),
        ),
        arrivals=(int(c[C_ARR1]), int(c[C_ARR2])),
        receptions=(int(c[C_REC1]), int(c[C_REC2])),
        discards=(int(c[C_DISC1]), int(c[C_DISC2])),
        in_system=(int(c[C_INSYS1]), int(c[C_INSYS2])),
        events=int(c[C_EVENTS]),
        end_time=float(out[0]),
        measure_start=float(out[1]),
        n_transmissions=n_order,
        order=order[: min(n_order, order_cap)] if cfg.keep_order else None,
        order_choice=order_choice[: min(n_order, order_cap)] if cfg.keep_order else None,
        work_violations=int(c[C_WORK_VIOL]),
        bucket_violations=int(c[C_BUCKET_VIOL]),
    )
    if result.work_violations or result.bucket_violations:
        raise AssertionError(
            f"simulation invariant broken: {result.work_violations} idle-with-work events, "
            f"{result.bucket_violations} bucket-sum violations"
        )
    return result


def _t_interval(values: np.ndarray, level: float = 0.95) -> tuple[float, float]:
    n = values.size
    if n < 2:
        return math.nan, math.nan
    half = stats.t.ppf(0.5 + level / 2, n - 1) * values.std(ddof=1) / math.sqrt(n)
    m = values.mean()
    return float(m - half), float(m + half)


def summarize(runs: list[RunResult], omega: tuple[float, float]) -> SimStats:
    """Pure reducer from replications to pooled estimates and CIs."""
    per_run = {
        "aoi1": np.array([r.aoi_mean[0] for r in runs]),
        "aoi2": np.array([r.aoi_mean[1] for r in runs]),
        "paoi1": np.array([r.paoi_mean[0] for r in runs]),
        "paoi2": np.array([r.paoi_mean[1] for r in runs]),
    }
    w1, w2 = omega
    # a source with no recorded cycles only matters if it carries weight
    def _weighted(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        x = np.where(w1 > 0, w1 * a, 0.0)
        y = np.where(w2 > 0, w2 * b, 0.0)
        return x + y

    per_run["w_aoi"] = _weighted(per_run["aoi1"], per_run["aoi2"])
    per_run["w_paoi"] = _weighted(per_run["paoi1"], per_run["paoi2"])
    estimates = {k: float(v.mean()) for k, v in per_run.items()}
    ci = {k: _t_interval(v) for k, v in per_run.items()}
    return SimStats(omega=omega, runs=runs, estimates=estimates, ci=ci)


def _check_receptions(runs: list[RunResult], params: SystemParams):
    for i, lam in enumerate((params.lambda1, params.lambda2)):
        if lam <= 0:
            continue
        low = min(r.traces[i].n_cycles for r in runs)
        if low < MIN_RECEPTIONS:
            warnings.warn(
                f"source {i + 1}: only {low} receptions after warmup in some replication "
                f"(fewer than {MIN_RECEPTIONS}); estimates may be noisy",
                RuntimeWarning,
                stacklevel=3,
            )


def _run_indexed(args):
    cfg, index = args
    return run_replication(cfg, index)


def simulate(cfg: SimConfig) -> SimStats:
    """Single replication (index 0) of ``cfg``."""
    runs = [run_replication(cfg, 0)]
    _check_receptions(runs, cfg.params)
    return summarize(runs, (cfg.params.omega1, cfg.params.omega2))


def replicate(cfg: SimConfig, workers: Optional[int] = None) -> SimStats:
    """
    ``cfg.replications`` independent replications with 95% CIs.

    With ``workers > 1`` replications run in a process pool; results are
    merged in replication order, so the output does not depend on it.
    """
    jobs = [(cfg, k) for k in range(cfg.replications)]
    if workers and workers > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_indexed, jobs))
    else:
        runs = [_run_indexed(j) for j in jobs]
    _check_receptions(runs, cfg.params)
    return summarize(runs, (cfg.params.omega1, cfg.params.omega2))
