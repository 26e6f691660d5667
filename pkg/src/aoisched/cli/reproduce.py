"""
Desk-scale regeneration of the numerical study as CSV files.

fig3  heavy-traffic optimal ratios versus sqrt(omega) for mu in {1/4, 1, 4}
fig4  W_AoI(p*_PAoI) / W_AoI(p*_AoI) in heavy traffic, mu in {1/4, ..., 4}
fig5  symmetric network (omega = mu = 1), sweep over r at rho in {1, 10}
fig6  omega = mu = 4, sweep over rho at r in {1, 1/4}, PAoI policies
fig7  same as fig6 with AoI policies

Every curve goes to its own ResultRow CSV; fig3 and fig4 also write a
small summary table with the plotted quantity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .. import limits
from ..sbpsq import SystemParams
from .config import SimSettings
from .pipeline import evaluate_many
from .rows import ResultRow, write_rows

FIGURES = ("fig3", "fig4", "fig5", "fig6", "fig7")
MAX_POINTS = 50


class UnknownFigure(ValueError):
    pass


@dataclass(frozen=True)
class ReproduceSettings:
    points: int = 21
    sim: SimSettings = SimSettings()

    def __post_init__(self):
        if not 2 <= self.points <= MAX_POINTS:
            raise ValueError(f"points must lie in [2, {MAX_POINTS}]")


def _fmt_tag(value: float) -> str:
    return f"{value:g}"


def _write(path: Path, rows: list[ResultRow]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        write_rows(rows, fh)
    return path


def _write_table(path: Path, header: tuple[str, ...], records: list[tuple]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for rec in records:
            w.writerow([repr(float(v)) for v in rec])
    return path


def _ht_row(label: str, omega: float, mu: float, p: float) -> ResultRow:
    htp = limits.HeavyTrafficParams(mu, 1.0, p / (1 + p))
    paoi = (limits.ht_mean_paoi(htp, 1), limits.ht_mean_paoi(htp, 2))
    aoi = (limits.ht_mean_aoi(htp, 1), limits.ht_mean_aoi(htp, 2))
    return ResultRow.from_means(label, math.inf, None, omega, mu, htp.p1, paoi, aoi)


def omega_grid(points: int) -> np.ndarray:
    return np.geomspace(1 / 16, 16, points)


def fig3(outdir: Path, settings: ReproduceSettings) -> list[Path]:
    paths = []
    summary = []
    for mu in (0.25, 1.0, 4.0):
        rows_p, rows_a = [], []
        for omega in omega_grid(settings.points):
            pp = limits.ht_opt_ratio_paoi(omega, mu)
            pa = limits.ht_opt_ratio_aoi(omega, mu, 1.0)
            rows_p.append(_ht_row("H1-P", omega, mu, pp))
            rows_a.append(_ht_row("H1-A", omega, mu, pa))
            summary.append((mu, omega, math.sqrt(omega), pp, pa))
        paths.append(_write(outdir / f"fig3_mu={_fmt_tag(mu)}_p_paoi.csv", rows_p))
        paths.append(_write(outdir / f"fig3_mu={_fmt_tag(mu)}_p_aoi.csv", rows_a))
    paths.append(_write_table(outdir / "fig3_summary.csv", ("mu", "omega", "sqrt_omega", "p_star_paoi", "p_star_aoi"), summary))
    return paths


def fig4(outdir: Path, settings: ReproduceSettings) -> list[Path]:
    paths = []
    summary = []
    for mu in (0.25, 0.5, 1.0, 2.0, 4.0):
        rows_p, rows_a = [], []
        for omega in omega_grid(settings.points):
            rp = _ht_row("H1-P", omega, mu, limits.ht_opt_ratio_paoi(omega, mu))
            ra = _ht_row("H1-A", omega, mu, limits.ht_opt_ratio_aoi(omega, mu, 1.0))
            rows_p.append(rp)
            rows_a.append(ra)
            summary.append((mu, omega, rp.W_AoI / ra.W_AoI))
        paths.append(_write(outdir / f"fig4_mu={_fmt_tag(mu)}_p_paoi.csv", rows_p))
        paths.append(_write(outdir / f"fig4_mu={_fmt_tag(mu)}_p_aoi.csv", rows_a))
    paths.append(_write_table(outdir / "fig4_ratio.csv", ("mu", "omega", "ratio"), summary))
    return paths


def r_grid(points: int) -> np.ndarray:
    # odd point count keeps r = 1 on the grid
    n = points if points % 2 else points - 1
    return np.geomspace(0.1, 10.0, max(n, 3))


def rho_grid(points: int) -> np.ndarray:
    return np.geomspace(0.1, 1000.0, points)


def _curves(outdir: Path, prefix: str, policies, points_params, settings: ReproduceSettings) -> list[Path]:
    paths = []
    for name in policies:
        jobs = [(p, name, settings.sim) for p in points_params]
        rows = evaluate_many(jobs)
        paths.append(_write(outdir / f"{prefix}_{name.upper()}.csv", rows))
    return paths


def fig5(outdir: Path, settings: ReproduceSettings) -> list[Path]:
    paths = []
    for rho in (1.0, 10.0):
        pts = [SystemParams.from_shorthand(rho, r, 1.0, 1.0) for r in r_grid(settings.points)]
        # H1-P = H1-A and H2-P = H2-A when omega = mu = 1
        paths += _curves(outdir, f"fig5_rho={_fmt_tag(rho)}", ("ops-p", "ops-a", "npb", "h1-p", "h2-p"), pts, settings)
    return paths


def _asymmetric(fig: str, metric_suffix: str, outdir: Path, settings: ReproduceSettings) -> list[Path]:
    paths = []
    policies = (f"ops-{metric_suffix}", "npb", f"h1-{metric_suffix}", f"h2-{metric_suffix}")
    for r in (1.0, 0.25):
        pts = [SystemParams.from_shorthand(rho, r, 4.0, 4.0) for rho in rho_grid(settings.points)]
        paths += _curves(outdir, f"{fig}_r={_fmt_tag(r)}", policies, pts, settings)
    return paths


def fig6(outdir: Path, settings: ReproduceSettings) -> list[Path]:
    return _asymmetric("fig6", "p", outdir, settings)


def fig7(outdir: Path, settings: ReproduceSettings) -> list[Path]:
    return _asymmetric("fig7", "a", outdir, settings)


def run_reproduce(figure_id: str, output_dir, settings: Optional[ReproduceSettings] = None) -> list[Path]:
    """Write the CSV files for ``figure_id`` into ``output_dir`` and return their paths."""
    runners = {"fig3": fig3, "fig4": fig4, "fig5": fig5, "fig6": fig6, "fig7": fig7}
    if figure_id not in runners:
        raise UnknownFigure(f"unknown figure {figure_id!r}; choose from {', '.join(FIGURES)}")
    return runners[figure_id](Path(output_dir), settings or ReproduceSettings())


__all__ = ["FIGURES", "ReproduceSettings", "UnknownFigure", "run_reproduce"]
