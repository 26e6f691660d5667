"""
Closed-form models: the heavy-traffic limit of the two-source queue, and
the non-preemptive bufferless (NPB) server used as a benchmark.

Both come with small absorbing chains so the closed forms can be checked
against the generic moment machinery in :mod:`aoisched.ctmc`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ctmc import AbsorbingChain
from .search import grid_then_golden

RATIO_GRID_STEP = 1e-3
RATIO_XTOL = 1e-8


def weight_split(omega: float) -> tuple[float, float]:
    """Normalized weights ``(w1, w2)`` from the ratio ``omega = w1/w2``."""
    if math.isinf(omega):
        return 1.0, 0.0
    w1 = omega / (1.0 + omega)
    return w1, 1.0 - w1


@dataclass(frozen=True)
class HeavyTrafficParams:
    mu1: float
    mu2: float
    p1: float

    def __post_init__(self):
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ValueError("service rates must be positive")
        if not 0 < self.p1 < 1:
            raise ValueError("p1 must lie strictly inside (0, 1)")

    @property
    def p2(self) -> float:
        return 1.0 - self.p1

    @property
    def p(self) -> float:
        return self.p1 / self.p2

    @property
    def mu(self) -> float:
        return self.mu1 / self.mu2

    def swapped(self) -> "HeavyTrafficParams":
        return HeavyTrafficParams(self.mu2, self.mu1, self.p2)


@dataclass(frozen=True)
class NpbParams:
    lambda1: float
    lambda2: float
    mu1: float
    mu2: float

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.mu1, self.mu2) <= 0:
            raise ValueError("all NPB rates must be positive")

    @classmethod
    def from_load(cls, rho: float, r1: float, mu1: float, mu2: float = 1.0) -> "NpbParams":
        return cls(rho * r1 * mu1, rho * (1 - r1) * mu2, mu1, mu2)

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
    def r(self) -> float:
        return self.rho1 / self.rho2

    @property
    def lam(self) -> float:
        return self.lambda1 / self.lambda2

    def swapped(self) -> "NpbParams":
        return NpbParams(self.lambda2, self.lambda1, self.mu2, self.mu1)


def _check_source(source: int):
    if source not in (1, 2):
        raise ValueError(f"source must be 1 or 2, got {source!r}")


# -- heavy traffic -----------------------------------------------------------

def ht_chain(htp: HeavyTrafficParams) -> AbsorbingChain:
    """
    Three transient states: tagged packet in service, a source-2 packet in
    service, the next source-1 packet in service.
    """
    m1, m2, p1, p2 = htp.mu1, htp.mu2, htp.p1, htp.p2
    A = np.array([
        [-m1, m1 * p2, m1 * p1],
        [0.0, -m2 * p1, m2 * p1],
        [0.0, 0.0, -m1],
    ])
    return AbsorbingChain(
        A=A,
        absorb={"s": np.array([0.0, 0.0, m1])},
        alpha=np.array([1.0, 0.0, 0.0]),
        weights={"h": np.array([0.0, 1.0, 1.0])},
    )


def ht_mean_paoi(htp: HeavyTrafficParams, source: int = 1) -> float:
    _check_source(source)
    if source == 2:
        htp = htp.swapped()
    return 2.0 / htp.mu1 + htp.p2 / (htp.mu2 * htp.p1)


def ht_mean_aoi(htp: HeavyTrafficParams, source: int = 1) -> float:
    _check_source(source)
    if source == 2:
        htp = htp.swapped()
    m1, m2, p1, p2 = htp.mu1, htp.mu2, htp.p1, htp.p2
    return 1.0 / m1 + (m2 * p1 + m1) / (m1 * m2 * p1) - 1.0 / (m2 * p1 + m1 * p2)


def ht_weighted_paoi(omega: float, mu1: float, mu2: float, p1: float) -> float:
    w1, w2 = weight_split(omega)
    htp = HeavyTrafficParams(mu1, mu2, p1)
    return w1 * ht_mean_paoi(htp, 1) + w2 * ht_mean_paoi(htp, 2)


def ht_weighted_aoi(omega: float, mu1: float, mu2: float, p1: float) -> float:
    w1, w2 = weight_split(omega)
    htp = HeavyTrafficParams(mu1, mu2, p1)
    return w1 * ht_mean_aoi(htp, 1) + w2 * ht_mean_aoi(htp, 2)


def ht_opt_ratio_paoi(omega: float, mu: float) -> float:
    """Probability ratio ``p1/p2`` minimizing the heavy-traffic weighted PAoI."""
    if omega <= 0 or mu <= 0:
        raise ValueError("omega and mu must be positive")
    return math.sqrt(omega * mu)


def ht_opt_ratio_aoi(omega: float, mu1: float, mu2: float = 1.0) -> float:
    """
    Probability ratio minimizing the heavy-traffic weighted AoI.

    The first-order condition is a quartic in ``p``; it is solved numerically
    by a grid scan over ``p1`` followed by golden-section refinement.
    """
    if omega <= 0 or mu1 <= 0 or mu2 <= 0:
        raise ValueError("omega and service rates must be positive")
    best = grid_then_golden(
        lambda p1: ht_weighted_aoi(omega, mu1, mu2, p1),
        RATIO_GRID_STEP,
        1 - RATIO_GRID_STEP,
        RATIO_GRID_STEP,
        RATIO_XTOL,
    )
    return best.x / (1 - best.x)


# -- non-preemptive bufferless ------------------------------------------------

def npb_chain(np_: NpbParams) -> AbsorbingChain:
    """
    Four transient states: tagged packet in service, idle server, a source-2
    packet in service, the next source-1 packet in service.
    """
    l1, l2, m1, m2 = np_.lambda1, np_.lambda2, np_.mu1, np_.mu2
    A = np.array([
        [-m1, m1, 0.0, 0.0],
        [0.0, -(l1 + l2), l2, l1],
        [0.0, m2, -m2, 0.0],
        [0.0, 0.0, 0.0, -m1],
    ])
    return AbsorbingChain(
        A=A,
        absorb={"s": np.array([0.0, 0.0, 0.0, m1])},
        alpha=np.array([1.0, 0.0, 0.0, 0.0]),
        weights={"h": np.array([0.0, 1.0, 1.0, 1.0])},
    )


def npb_mean_paoi(np_: NpbParams, source: int = 1) -> float:
    _check_source(source)
    if source == 2:
        np_ = np_.swapped()
    return 1.0 / np_.mu1 + (1.0 + np_.rho) / np_.lambda1


def npb_mean_aoi(np_: NpbParams, source: int = 1) -> float:
    _check_source(source)
    if source == 2:
        np_ = np_.swapped()
    m1, m2, l2 = np_.mu1, np_.mu2, np_.lambda2
    rho1, rho2 = np_.rho1, np_.rho2
    return (m2 + m2 / rho1 + l2 / rho1 + (m2 * rho1 + m1 * rho2) / (1.0 + np_.rho)) / (m1 * m2)


def npb_weighted_paoi(rho: float, r1: float, omega: float, mu1: float, mu2: float = 1.0) -> float:
    w1, w2 = weight_split(omega)
    p = NpbParams.from_load(rho, r1, mu1, mu2)
    return w1 * npb_mean_paoi(p, 1) + w2 * npb_mean_paoi(p, 2)


def npb_weighted_aoi(rho: float, r1: float, omega: float, mu1: float, mu2: float = 1.0) -> float:
    w1, w2 = weight_split(omega)
    p = NpbParams.from_load(rho, r1, mu1, mu2)
    return w1 * npb_mean_aoi(p, 1) + w2 * npb_mean_aoi(p, 2)


def npb_opt_mix_paoi(omega: float, mu: float) -> float:
    """Traffic mix ratio ``r = r1/r2`` minimizing the NPB weighted PAoI (any load)."""
    if omega <= 0 or mu <= 0:
        raise ValueError("omega and mu must be positive")
    return math.sqrt(omega / mu)


def npb_opt_arrival_ratio_paoi(omega: float, mu: float) -> float:
    """Arrival rate ratio ``lambda1/lambda2`` minimizing the NPB weighted PAoI."""
    if omega <= 0 or mu <= 0:
        raise ValueError("omega and mu must be positive")
    return math.sqrt(omega * mu)


def npb_opt_mix_aoi(rho: float, omega: float, mu1: float, mu2: float = 1.0) -> float:
    """Traffic mix ratio minimizing the NPB weighted AoI at load ``rho``."""
    if min(rho, omega, mu1, mu2) <= 0:
        raise ValueError("rho, omega and service rates must be positive")
    best = grid_then_golden(
        lambda r1: npb_weighted_aoi(rho, r1, omega, mu1, mu2),
        RATIO_GRID_STEP,
        1 - RATIO_GRID_STEP,
        RATIO_GRID_STEP,
        RATIO_XTOL,
    )
    return best.x / (1 - best.x)
