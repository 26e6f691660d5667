"""Bracketed scalar minimization: coarse grid scan, then golden-section."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize


@dataclass(frozen=True)
class ScalarMin:
    x: float
    fun: float
    refined: bool


def count_local_minima(values: np.ndarray) -> int:
    v = np.asarray(values)
    inner = (v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:])
    edges = int(v[0] < v[1]) + int(v[-1] < v[-2])
    return int(inner.sum()) + edges


def grid_then_golden(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    step: float,
    xtol: float = 1e-8,
) -> ScalarMin:
    """
    Minimize ``f`` on ``[lo, hi]``.

    ``f`` is scanned on a grid of spacing ``step``. If the scan shows a single
    local minimum, the bracket around the best grid point is refined by
    golden-section search; otherwise the grid argmin is returned as is.
    """
    n = max(3, int(round((hi - lo) / step)) + 1)
    grid = np.linspace(lo, hi, n)
    values = np.array([f(x) for x in grid])
    i = int(np.argmin(values))
    best = ScalarMin(float(grid[i]), float(values[i]), False)
    if count_local_minima(values) != 1:
        return best
    if 0 < i < n - 1:
        a, b, c = grid[i - 1], grid[i], grid[i + 1]
        if not (values[i] < values[i - 1] and values[i] < values[i + 1]):
            return best
        res = optimize.minimize_scalar(f, bracket=(a, b, c), method="golden", options={"xtol": xtol})
    else:
        a, c = (grid[0], grid[1]) if i == 0 else (grid[-2], grid[-1])
        res = optimize.minimize_scalar(f, bounds=(a, c), method="bounded", options={"xatol": xtol})
    x = float(np.clip(res.x, lo, hi))
    fx = float(f(x))
    if fx <= best.fun:
        return ScalarMin(x, fx, True)
    return best
