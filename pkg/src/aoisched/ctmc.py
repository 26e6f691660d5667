"""
Finite-state continuous-time Markov chain utilities.

Stationary vectors of irreducible generators, and transient/moment
functionals of absorbing chains (phase-type style objects ``alpha``, ``A``
plus named exit and weight vectors).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy import linalg, stats

LINALG_TOL = 1e-10
DENSITY_TOL = 1e-8
STRUCTURE_TOL = 1e-12


class SingularSystem(np.linalg.LinAlgError):
    """Raised when a linear system built from a chain has no unique solution."""


def _as_matrix(rates) -> np.ndarray:
    a = np.array(rates, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Generator:
    """
    Generator of an irreducible CTMC.

    ``rates`` holds the full matrix: non-negative off-diagonal rates and the
    diagonal equal to minus the off-diagonal row sum.
    """

    rates: np.ndarray

    def __post_init__(self):
        q = _as_matrix(self.rates)
        off = q - np.diag(np.diag(q))
        if np.any(off < 0):
            raise ValueError("off-diagonal rates must be non-negative")
        scale = max(1.0, float(np.abs(q).max(initial=0.0)))
        if np.any(np.abs(q.sum(axis=1)) > STRUCTURE_TOL * scale):
            raise ValueError("generator rows must sum to zero")
        object.__setattr__(self, "rates", _frozen(q))

    @classmethod
    def from_offdiag(cls, rates) -> "Generator":
        """Build from an off-diagonal rate matrix; the diagonal is filled in."""
        q = _as_matrix(rates)
        np.fill_diagonal(q, 0.0)
        np.fill_diagonal(q, -q.sum(axis=1))
        return cls(q)

    @property
    def n(self) -> int:
        return self.rates.shape[0]


@dataclass(frozen=True, eq=False)
class AbsorbingChain:
    """
    Transient part of an absorbing CTMC.

    Attributes
    ----------
    A : ndarray
        ``m x m`` sub-generator over the transient states.
    absorb : mapping of str to ndarray
        Exit-rate vectors into the absorbing states (e.g. ``"u"``, ``"s"``).
    weights : mapping of str to ndarray
        Non-negative state indicators/rewards (e.g. ``"h"``). These do not
        take part in the generator closure.
    alpha : ndarray
        Initial distribution over the transient states.
    """

    A: np.ndarray
    absorb: Mapping[str, np.ndarray]
    alpha: np.ndarray
    weights: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        A = _as_matrix(self.A)
        m = A.shape[0]
        absorb = {k: _frozen(v) for k, v in self.absorb.items()}
        weights = {k: _frozen(v) for k, v in self.weights.items()}
        alpha = _frozen(self.alpha)
        for name, v in {**absorb, **weights}.items():
            if v.shape != (m,):
                raise ValueError(f"vector {name!r} has shape {v.shape}, expected ({m},)")
            if np.any(v < 0):
                raise ValueError(f"vector {name!r} has negative entries")
        if alpha.shape != (m,):
            raise ValueError(f"alpha has shape {alpha.shape}, expected ({m},)")
        if np.any(alpha < 0) or abs(alpha.sum() - 1.0) > 1e-9:
            raise ValueError("alpha must be a probability vector")
        off = A - np.diag(np.diag(A))
        if np.any(off < 0):
            raise ValueError("off-diagonal rates of A must be non-negative")
        closure = A.sum(axis=1) + sum(absorb.values(), np.zeros(m))
        scale = max(1.0, float(np.abs(A).max(initial=0.0)))
        if np.any(np.abs(closure) > STRUCTURE_TOL * scale):
            raise ValueError("A·1 + sum of absorption vectors must vanish")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "absorb", absorb)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def from_offdiag(cls, A0, absorb, alpha, weights=None) -> "AbsorbingChain":
        """Fill the diagonal of ``A0`` so that ``A·1 + sum(absorb) = 0``."""
        A = _as_matrix(A0)
        np.fill_diagonal(A, 0.0)
        exits = sum((np.asarray(v, dtype=float) for v in absorb.values()), np.zeros(A.shape[0]))
        np.fill_diagonal(A, -(A.sum(axis=1) + exits))
        return cls(A=A, absorb=absorb, alpha=alpha, weights=weights or {})

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def vector(self, name: str) -> np.ndarray:
        """Look up an absorption or weight vector by name."""
        if name in self.absorb:
            return self.absorb[name]
        return self.weights[name]

    def total_exit(self) -> np.ndarray:
        return sum(self.absorb.values(), np.zeros(self.m))

    def _lu(self):
        if getattr(self, "_lu_cache", None) is None:
            negA = -self.A
            cond = np.linalg.cond(negA)
            if not np.isfinite(cond) or cond > 1.0 / (LINALG_TOL * 1e-4):
                raise SingularSystem(f"sub-generator is singular (cond={cond:.3g})")
            object.__setattr__(self, "_lu_cache", linalg.lu_factor(negA))
        return self._lu_cache

    def solve(self, w) -> np.ndarray:
        """Return ``(-A)^{-1} w``."""
        return linalg.lu_solve(self._lu(), np.asarray(w, dtype=float))


def stationary(gen: Generator) -> np.ndarray:
    """
    Stationary distribution ``pi`` with ``pi P = 0`` and ``pi 1 = 1``.

    The last balance equation is replaced by the normalization row, and the
    resulting system is solved by LU with partial pivoting.
    """
    q = gen.rates
    n = gen.n
    m = q.T.copy()
    m[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularSystem(f"generator is reducible or degenerate (cond={cond:.3g})")
    pi = np.linalg.solve(m, rhs)
    scale = max(1.0, float(np.abs(q).max()))
    if np.any(pi <= 0) or np.abs(pi @ q).max() > LINALG_TOL * scale:
        raise SingularSystem("generator does not have a unique positive stationary vector")
    return pi


@lru_cache(maxsize=256)
def _poisson_weights(mean: float, tol: float) -> np.ndarray:
    # right truncation point K with P(N > K) < tol; poisson.isf returns NaN
    # for tiny tails, so scan the survival function instead
    k_max = 0
    if mean > 0:
        span = int(mean + 12.0 * np.sqrt(mean)) + 40
        while True:
            below = np.flatnonzero(stats.poisson.sf(np.arange(span + 1), mean) < tol)
            if below.size:
                k_max = int(below[0])
                break
            span *= 2
    w = stats.poisson.pmf(np.arange(k_max + 1), mean)
    w.setflags(write=False)
    return w


def _uniformized(A: np.ndarray):
    rate = float(np.max(-np.diag(A)))
    if rate <= 0:
        return 0.0, np.eye(A.shape[0])
    return rate, np.eye(A.shape[0]) + A / rate


def _step(y: np.ndarray, rate: float, P: np.ndarray, h: float, tol: float) -> np.ndarray:
    """``y e^{A h}`` for a row vector ``y`` by uniformization."""
    if h == 0.0 or rate == 0.0:
        return y.copy()
    weights = _poisson_weights(rate * h, tol)
    out = weights[0] * y
    term = y
    for w in weights[1:]:
        term = term @ P
        out = out + w * term
    return out


def transient_rows(chain: AbsorbingChain, times, tol: float = DENSITY_TOL) -> np.ndarray:
    """
    Rows ``alpha e^{A t}`` for every ``t`` in ``times``.

    Times are visited in sorted order and the row vector is propagated from
    one time point to the next, so a whole grid costs about as much as its
    largest point. The total truncation error is below ``tol``.
    """
    t = np.asarray(times, dtype=float)
    flat = np.atleast_1d(t).ravel()
    if np.any(flat < 0):
        raise ValueError("times must be non-negative")
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    order = np.argsort(flat, kind="stable")
    rate, P = _uniformized(chain.A)
    step_tol = tol / max(1, flat.size)
    out = np.empty((flat.size, chain.m))
    y = np.array(chain.alpha, dtype=float)
    now = 0.0
    for idx in order:
        target = flat[idx]
        y = _step(y, rate, P, target - now, step_tol)
        now = target
        out[idx] = y
    return out.reshape(t.shape + (chain.m,))


def exp_action(chain: AbsorbingChain, v, t, tol: float = DENSITY_TOL):
    """
    ``alpha e^{A t} v`` by uniformization.

    ``t`` may be a scalar or an array of times; the result has the same shape.
    """
    v = np.asarray(v, dtype=float)
    rows = transient_rows(chain, t, tol)
    out = rows @ v
    # P is non-negative so the series is too; clean up -0.0 and round-off
    out = np.maximum(out, 0.0)
    return float(out) if np.ndim(t) == 0 else out


def resolvent_moment(chain: AbsorbingChain, w, k: int) -> float:
    """
    ``alpha (-A)^{-k-1} w`` using ``k + 1`` solves against ``-A``.

    Multiply by ``k!`` to obtain ``int_0^inf x^k alpha e^{Ax} w dx``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    x = np.asarray(w, dtype=float)
    for _ in range(k + 1):
        x = chain.solve(x)
    return max(float(chain.alpha @ x), 0.0)


def survival(chain: AbsorbingChain, w, t, tol: float = DENSITY_TOL):
    """``alpha e^{A t} (-A)^{-1} w``, the tail integral of ``alpha e^{Ax} w``."""
    return exp_action(chain, chain.solve(w), t, tol)
