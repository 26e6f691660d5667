"""
Exact AoI/PAoI analysis of the two-source single-buffer per-source queue.

Source 1 is analysed with a 9-state occupancy chain (what a new arrival
sees) and a 14-state absorbing chain that follows a tagged source-1 packet
until the next successful reception. Source 2 is handled by relabeling.

State numbers in comments are 1-based to line up with the usual tables:

occupancy chain   1 I/E/E  2 B1/E/E  3 B1/F/E  4 B1/E/F  5 B1/F/F
                  6 B2/E/E 7 B2/F/E  8 B2/E/F  9 B2/F/F
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .ctmc import (
    DENSITY_TOL,
    AbsorbingChain,
    Generator,
    exp_action,
    resolvent_moment,
    stationary,
)

P1_MIN = 1e-6
P1_MAX = 1.0 - 1e-6
RESIDUAL_TOL = 1e-8


class InconsistentInput(ValueError):
    """The occupancy vector handed to :func:`build_absorbing` is not stationary."""


@dataclass(frozen=True)
class SystemParams:
    """
    Traffic, service and weighting parameters of the two sources.

    Per-transmission service is exponential with rate ``nu_i``; packets are
    retransmitted until they get through with probability ``s_i`` each time,
    so the effective service rate is ``mu_i = nu_i * s_i``.
    """

    lambda1: float
    lambda2: float
    nu1: float = 1.0
    nu2: float = 1.0
    s1: float = 1.0
    s2: float = 1.0
    omega1: float = 0.5
    omega2: float = 0.5

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite non-negative rate, got {v!r}")
        if self.lambda1 + self.lambda2 <= 0:
            raise ValueError("at least one source must have a positive arrival rate")
        for name in ("nu1", "nu2"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite positive rate, got {v!r}")
        for name in ("s1", "s2"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v!r}")
        if self.omega1 < 0 or self.omega2 < 0 or abs(self.omega1 + self.omega2 - 1) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")

    @classmethod
    def from_shorthand(cls, rho: float, r: float, omega: float, mu: float, mu2: float = 1.0):
        """
        Build from load ``rho``, traffic mix ratio ``r = r1/r2``, weight ratio
        ``omega = w1/w2`` and service rate ratio ``mu = mu1/mu2``.
        """
        if min(rho, r, omega, mu, mu2) <= 0:
            raise ValueError("rho, r, omega, mu and mu2 must be positive")
        r1, r2 = r / (1 + r), 1 / (1 + r)
        mu1 = mu * mu2
        w1 = omega / (1 + omega)
        return cls(
            lambda1=rho * r1 * mu1,
            lambda2=rho * r2 * mu2,
            nu1=mu1,
            nu2=mu2,
            omega1=w1,
            omega2=1 - w1,
        )

    @property
    def mu1(self) -> float:
        return self.nu1 * self.s1

    @property
    def mu2(self) -> float:
        return self.nu2 * self.s2

    @property
    def rho1(self) -> float:
        return self.lambda1 / self.mu1

    @property
    def rho2(self) -> float:
        return self.lambda2 / self.mu2

    @property
    def rho(self) -> float:
        return self.rho1 + self.rho2

    @property
    def r1(self) -> float:
        return self.rho1 / self.rho

    @property
    def r2(self) -> float:
        return self.rho2 / self.rho

    @property
    def r(self) -> float:
        return self.rho1 / self.rho2 if self.rho2 > 0 else math.inf

    @property
    def omega(self) -> float:
        return self.omega1 / self.omega2 if self.omega2 > 0 else math.inf

    @property
    def mu(self) -> float:
        return self.mu1 / self.mu2

    def shorthand(self) -> tuple[float, float, float, float]:
        """Return ``(rho, r, omega, mu)``."""
        return self.rho, self.r, self.omega, self.mu


@dataclass(frozen=True)
class SchedProb:
    """
    Probability ``p1`` of serving source 1 when both queues hold a packet.

    ``p2`` defaults to ``1 - p1``; it is stored so that exchanging the
    sources twice gives back exactly the same object.
    """

    p1: float
    p2: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.p1 < 1:
            raise ValueError(f"p1 must lie strictly inside (0, 1), got {self.p1!r}")
        if self.p2 is None:
            object.__setattr__(self, "p2", 1.0 - self.p1)
        elif abs(self.p1 + self.p2 - 1.0) > 1e-15:
            raise ValueError("p1 + p2 must equal 1")

    @classmethod
    def from_ratio(cls, p: float) -> "SchedProb":
        return cls(p / (1 + p))

    @property
    def ratio(self) -> float:
        return self.p1 / self.p2


def clamp_p1(p1: float) -> float:
    return min(max(p1, P1_MIN), P1_MAX)


def swap_sources(params: SystemParams, sp: SchedProb) -> tuple[SystemParams, SchedProb]:
    """Exchange the roles of the two sources (an involution)."""
    swapped = SystemParams(
        lambda1=params.lambda2,
        lambda2=params.lambda1,
        nu1=params.nu2,
        nu2=params.nu1,
        s1=params.s2,
        s2=params.s1,
        omega1=params.omega2,
        omega2=params.omega1,
    )
    return swapped, SchedProb(sp.p2, sp.p1)


def build_foreground(params: SystemParams, sp: SchedProb) -> Generator:
    """The 9-state occupancy chain."""
    l1, l2 = params.lambda1, params.lambda2
    m1, m2 = params.mu1, params.mu2
    p1, p2 = sp.p1, sp.p2
    P0 = np.zeros((9, 9))
    P0[0, 1], P0[0, 5] = l1, l2
    # rows 2-3 follow the state labels: B1/E/E -> B1/F/E on a source-1
    # arrival, B1/F/E -> B1/F/F on a source-2 arrival
    P0[1, 0], P0[1, 2], P0[1, 3] = m1, l1, l2
    P0[2, 1], P0[2, 4] = m1, l2
    P0[3, 4], P0[3, 5] = l1, m1
    P0[4, 3], P0[4, 6] = m1 * p1, m1 * p2
    P0[5, 0], P0[5, 6], P0[5, 7] = m2, l1, l2
    P0[6, 1], P0[6, 8] = m2, l2
    P0[7, 5], P0[7, 8] = m2, l1
    P0[8, 3], P0[8, 6] = m2 * p1, m2 * p2
    return Generator.from_offdiag(P0)


def build_absorbing(params: SystemParams, sp: SchedProb, pi) -> AbsorbingChain:
    """
    The 14-state absorbing chain of a tagged source-1 packet.

    Exit vector ``u`` leads to "replaced before service" and ``s`` to the
    reception of the next successful source-1 packet. ``h`` marks the states
    after the tagged packet has been received.
    """
    pi = np.asarray(pi, dtype=float)
    fg = build_foreground(params, sp).rates
    scale = max(1.0, float(np.abs(fg).max()))
    if pi.shape != (9,) or abs(pi.sum() - 1) > RESIDUAL_TOL or np.abs(pi @ fg).max() > RESIDUAL_TOL * scale:
        raise InconsistentInput("pi is not the stationary vector of the occupancy chain")

    l1, l2 = params.lambda1, params.lambda2
    m1, m2 = params.mu1, params.mu2
    p1, p2 = sp.p1, sp.p2
    A0 = np.zeros((14, 14))
    # 1-based state k lives at index k - 1
    A0[0, 1], A0[0, 3], A0[0, 8] = l1, l2, m1
    A0[1, 4], A0[1, 9] = l2, m1
    A0[2, 0], A0[2, 5] = m1, l2
    A0[3, 4], A0[3, 10] = l1, m1
    A0[4, 9], A0[4, 11] = m1 * p1, m1 * p2
    A0[5, 3], A0[5, 6] = m1 * p1, m1 * p2
    A0[6, 0], A0[6, 7] = m2, l2
    A0[7, 3], A0[7, 6] = m2 * p1, m2 * p2
    A0[8, 9], A0[8, 10] = l1, l2
    A0[10, 8], A0[10, 11], A0[10, 12] = m2, l1, l2
    A0[11, 9], A0[11, 13] = m2, l2
    A0[12, 10], A0[12, 13] = m2, l1
    A0[13, 9], A0[13, 11] = m2 * p1, m2 * p2

    u = np.zeros(14)
    u[[2, 5, 6, 7]] = l1
    s = np.zeros(14)
    s[9] = m1
    h = np.zeros(14)
    h[8:] = 1.0

    alpha = np.zeros(14)
    alpha[0] = pi[0]
    alpha[2] = pi[1] + pi[2]
    alpha[5] = pi[3] + pi[4]
    alpha[6] = pi[5] + pi[6]
    alpha[7] = pi[7] + pi[8]
    alpha /= alpha.sum()
    return AbsorbingChain.from_offdiag(A0, absorb={"u": u, "s": s}, alpha=alpha, weights={"h": h})


@dataclass(frozen=True, eq=False)
class _SourceModel:
    chain: AbsorbingChain
    paoi_norm: float  # beta
    aoi_norm: float  # kappa

    def norm(self, kind: str) -> float:
        return self.paoi_norm if kind == "s" else self.aoi_norm


@lru_cache(maxsize=4096)
def _source_model(params: SystemParams, sp: SchedProb, source: int) -> _SourceModel:
    if source == 2:
        params, sp = swap_sources(params, sp)
    elif source != 1:
        raise ValueError(f"source must be 1 or 2, got {source!r}")
    pi = stationary(build_foreground(params, sp))
    chain = build_absorbing(params, sp, pi)
    beta = 1.0 / resolvent_moment(chain, chain.absorb["s"], 0)
    kappa = 1.0 / resolvent_moment(chain, chain.weights["h"], 0)
    return _SourceModel(chain, beta, kappa)


def source_chain(params: SystemParams, sp: SchedProb, source: int) -> AbsorbingChain:
    """The absorbing chain used for ``source`` (relabeled when ``source == 2``)."""
    return _source_model(params, sp, source).chain


def _pdf(kind, params, sp, source, x, tol):
    model = _source_model(params, sp, source)
    chain = model.chain
    return model.norm(kind) * exp_action(chain, chain.vector(kind), x, tol)


def _cdf(kind, params, sp, source, x, tol):
    model = _source_model(params, sp, source)
    chain = model.chain
    tail = exp_action(chain, chain.solve(chain.vector(kind)), x, tol)
    out = np.clip(1.0 - model.norm(kind) * tail, 0.0, 1.0)
    return out if np.ndim(x) else float(out)


def _moment(kind, params, sp, source, k):
    if k < 1:
        raise ValueError("k must be at least 1")
    model = _source_model(params, sp, source)
    chain = model.chain
    return math.factorial(k) * model.norm(kind) * resolvent_moment(chain, chain.vector(kind), k)


def paoi_pdf(params: SystemParams, sp: SchedProb, source: int, x, tol: float = DENSITY_TOL):
    """Density of the peak age of ``source`` at ``x`` (scalar or array)."""
    return _pdf("s", params, sp, source, x, tol)


def aoi_pdf(params: SystemParams, sp: SchedProb, source: int, x, tol: float = DENSITY_TOL):
    """Density of the stationary age of ``source`` at ``x`` (scalar or array)."""
    return _pdf("h", params, sp, source, x, tol)


def paoi_cdf(params: SystemParams, sp: SchedProb, source: int, x, tol: float = DENSITY_TOL):
    return _cdf("s", params, sp, source, x, tol)


def aoi_cdf(params: SystemParams, sp: SchedProb, source: int, x, tol: float = DENSITY_TOL):
    return _cdf("h", params, sp, source, x, tol)


def paoi_moment(params: SystemParams, sp: SchedProb, source: int, k: int = 1) -> float:
    """``E[Phi^k]`` for the peak age of ``source``."""
    return _moment("s", params, sp, source, k)


def aoi_moment(params: SystemParams, sp: SchedProb, source: int, k: int = 1) -> float:
    """``E[Delta^k]`` for the age of ``source``."""
    return _moment("h", params, sp, source, k)


def density_grid(mean: float, points: int = 400) -> np.ndarray:
    """Log-spaced grid over ``[1e-3 * mean, 20 * mean]``."""
    return np.geomspace(1e-3 * mean, 20.0 * mean, points)


@dataclass
class MetricReport:
    """Per-source AoI/PAoI moments and their weighted averages."""

    omega: tuple[float, float]
    paoi_mean: tuple[float, float]
    aoi_mean: tuple[float, float]
    paoi_m2: tuple[float, float]
    aoi_m2: tuple[float, float]
    densities: Optional[dict] = field(default=None, repr=False)

    @property
    def w_paoi(self) -> float:
        return self.omega[0] * self.paoi_mean[0] + self.omega[1] * self.paoi_mean[1]

    @property
    def w_aoi(self) -> float:
        return self.omega[0] * self.aoi_mean[0] + self.omega[1] * self.aoi_mean[1]

    @property
    def paoi_var(self) -> tuple[float, float]:
        return tuple(m2 - m * m for m, m2 in zip(self.paoi_mean, self.paoi_m2))

    @property
    def aoi_var(self) -> tuple[float, float]:
        return tuple(m2 - m * m for m, m2 in zip(self.aoi_mean, self.aoi_m2))


def weighted_metrics(params: SystemParams, sp: SchedProb, densities: bool = False, points: int = 400) -> MetricReport:
    """
    Means, second moments and the weighted averages ``W_PAoI`` and ``W_AoI``.

    With ``densities=True`` the report also carries pdf/cdf samples for both
    sources on :func:`density_grid` grids keyed ``"paoi1"``, ``"aoi2"``, ...
    """
    paoi = tuple(paoi_moment(params, sp, i, 1) for i in (1, 2))
    aoi = tuple(aoi_moment(params, sp, i, 1) for i in (1, 2))
    report = MetricReport(
        omega=(params.omega1, params.omega2),
        paoi_mean=paoi,
        aoi_mean=aoi,
        paoi_m2=tuple(paoi_moment(params, sp, i, 2) for i in (1, 2)),
        aoi_m2=tuple(aoi_moment(params, sp, i, 2) for i in (1, 2)),
    )
    if densities:
        tables = {}
        for i in (1, 2):
            for name, mean, pdf, cdf in (
                ("paoi", paoi[i - 1], paoi_pdf, paoi_cdf),
                ("aoi", aoi[i - 1], aoi_pdf, aoi_cdf),
            ):
                x = density_grid(mean, points)
                tables[f"{name}{i}"] = {"x": x, "pdf": pdf(params, sp, i, x), "cdf": cdf(params, sp, i, x)}
        report.densities = tables
    return report


def at_p1(params: SystemParams, p1: float) -> MetricReport:
    """Shortcut for :func:`weighted_metrics` with a clamped ``p1``."""
    return weighted_metrics(params, SchedProb(clamp_p1(p1)))


__all__ = [
    "InconsistentInput",
    "SystemParams",
    "SchedProb",
    "MetricReport",
    "build_foreground",
    "build_absorbing",
    "source_chain",
    "swap_sources",
    "paoi_pdf",
    "aoi_pdf",
    "paoi_cdf",
    "aoi_cdf",
    "paoi_moment",
    "aoi_moment",
    "weighted_metrics",
    "density_grid",
    "clamp_p1",
    "at_p1",
]
