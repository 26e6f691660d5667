"""CSV result rows shared by every CLI mode."""

from __future__ import annotations

import csv
import io
import math
import numbers
from dataclasses import astuple, dataclass, fields
from typing import IO, Iterable, Optional

from ..limits import weight_split

FIELDS = (
    "policy", "rho", "r", "omega", "mu", "p1",
    "E_PAoI_1", "E_PAoI_2", "E_AoI_1", "E_AoI_2", "W_PAoI", "W_AoI",
    "source", "ci_low", "ci_high",
)


@dataclass(frozen=True)
class ResultRow:
    """
    One evaluated (policy, operating point).

    ``rho`` is ``inf`` for heavy-traffic rows. For simulated rows
    ``ci_low``/``ci_high`` bound the weighted metric the policy targets
    (``W_PAoI`` for ``-P`` and ``OPS-P`` policies, ``W_AoI`` otherwise).
    ``source`` is ``analytic``, ``simulated``, or ``error:<reason>``.
    """

    policy: str
    rho: float
    r: Optional[float]
    omega: float
    mu: float
    p1: Optional[float]
    E_PAoI_1: Optional[float]
    E_PAoI_2: Optional[float]
    E_AoI_1: Optional[float]
    E_AoI_2: Optional[float]
    W_PAoI: Optional[float]
    W_AoI: Optional[float]
    source: str = "analytic"
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None

    @classmethod
    def from_means(cls, policy, rho, r, omega, mu, p1, paoi, aoi, source="analytic", ci=(None, None)):
        """Build a row; the weighted columns are derived from ``omega``."""
        w1, w2 = weight_split(omega)
        return cls(
            policy=policy, rho=rho, r=r, omega=omega, mu=mu, p1=p1,
            E_PAoI_1=paoi[0], E_PAoI_2=paoi[1], E_AoI_1=aoi[0], E_AoI_2=aoi[1],
            W_PAoI=w1 * paoi[0] + w2 * paoi[1], W_AoI=w1 * aoi[0] + w2 * aoi[1],
            source=source, ci_low=ci[0], ci_high=ci[1],
        )

    @classmethod
    def error(cls, policy, rho, r, omega, mu, p1, reason: str):
        return cls(policy, rho, r, omega, mu, p1, None, None, None, None, None, None, f"error:{reason}")

    @property
    def ok(self) -> bool:
        return not self.source.startswith("error")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, numbers.Real) and not isinstance(value, bool):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def write_rows(rows: Iterable[ResultRow], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(FIELDS)
    for row in rows:
        writer.writerow([_fmt(v) for v in astuple(row)])


def rows_to_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    write_rows(rows, buf)
    return buf.getvalue()


def _parse(name: str, text: str):
    if name in ("policy", "source"):
        return text
    return float(text) if text != "" else None


def read_rows(inp: IO[str]) -> list[ResultRow]:
    reader = csv.reader(inp)
    header = next(reader)
    if tuple(header) != FIELDS:
        raise ValueError(f"unexpected CSV header {header!r}")
    names = [f.name for f in fields(ResultRow)]
    return [ResultRow(**{n: _parse(n, v) for n, v in zip(names, rec)}) for rec in reader]


def weighted_residual(row: ResultRow) -> float:
    """Largest mismatch between the weighted columns and their recomputation."""
    if not row.ok:
        return 0.0
    w1, w2 = weight_split(row.omega)
    return max(
        abs(row.W_PAoI - (w1 * row.E_PAoI_1 + w2 * row.E_PAoI_2)),
        abs(row.W_AoI - (w1 * row.E_AoI_1 + w2 * row.E_AoI_2)),
    )
