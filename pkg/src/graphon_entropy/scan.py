"""Phase-diagram sweeps over an (e, t) grid."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import DomainError, MultipodalGraphon, order_parameter
from . import named
from .optimizer import InfeasibleTargetError, NonConvergenceError, maximize_entropy

FEASIBILITY_MARGIN = 1e-6

CSV_HEADER = (
    "e,t,feasible,pods_used,entropy,classification,order_q,sym_bipodal_entropy,"
    "delta_s,lambda_e,lambda_t,el_residual,restarts_agreeing"
).split(",")


def feasibility(e: float, t: float, margin: float = FEASIBILITY_MARGIN) -> str:
    """Screen ``(e, t)`` against known bounds of the achievable region.

    Upper bound ``t <= e^(3/2)`` (Kruskal-Katona) and lower bound
    ``t >= max(0, e(2e - 1))`` (Goodman).  For ``e <= 1/2`` the lower bound
    ``t = 0`` is attained, so it counts as feasible.  For ``e > 1/2`` the true
    lower boundary lies above Goodman's; points are certified feasible only
    down to ``e^3 - (1-e)^3``, where the symmetric bipodal family ends, and
    below that are ``boundary_unknown``.
    """
    e, t = float(e), float(t)
    if not (0 <= e <= 1 and 0 <= t <= 1):
        return "infeasible"
    upper = e**1.5
    goodman = max(0.0, e * (2 * e - 1))
    if t > upper + margin or t < goodman - margin:
        return "infeasible"
    if t > upper - margin:
        return "boundary_unknown"
    if e <= 0.5:
        if t >= 0.0 and (t == 0.0 or t > margin or e == 0.5):
            return "feasible" if (e > 0 or t == 0) else "boundary_unknown"
        return "boundary_unknown"
    certified = e**3 - (1 - e) ** 3
    if t >= certified:
        return "feasible"
    return "boundary_unknown"


def sym_bipodal_reference(e: float, t: float) -> float | None:
    """Entropy of the symmetric bipodal graphon at ``(e, t)`` when that form exists."""
    gap = e**3 - t
    if not gap > 0:
        return None
    sigma = gap ** (1.0 / 3.0)
    if sigma > min(e, 1.0 - e):
        return None
    return named.symmetric_bipodal_entropy(e, sigma)


@dataclass(frozen=True)
class ScanRecord:
    e: float
    t: float
    feasible: str
    row: int = 0
    col: int = 0
    pods_used: int | None = None
    entropy: float | None = None
    classification: str = ""
    order_q: float | None = None
    sym_bipodal_entropy: float | None = None
    delta_s: float | None = None
    lambda_e: float | None = None
    lambda_t: float | None = None
    el_residual: float | None = None
    restarts_agreeing: int | None = None
    graphon: MultipodalGraphon | None = field(default=None, compare=False, repr=False)
    message: str = ""

    @property
    def optimized(self) -> bool:
        return self.graphon is not None and self.classification not in ("", "failed")

    def csv_row(self) -> list[str]:
        return [_fmt(getattr(self, name)) for name in CSV_HEADER]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _solve_cell(template, e, t, i, j, warm):
    status = feasibility(e, t)
    ref = sym_bipodal_reference(e, t)
    base = dict(e=e, t=t, feasible=status, row=i, col=j, sym_bipodal_entropy=ref)
    if status != "feasible":
        return ScanRecord(**base, message="not optimized: " + status)
    problem = replace(template, target_e=e, target_t=t, init=warm if warm is not None else "random")
    try:
        r = maximize_entropy(problem)
    except NonConvergenceError as exc:
        return ScanRecord(**base, classification="failed", message=str(exc))
    except (InfeasibleTargetError, DomainError, ValueError) as exc:
        return ScanRecord(**base, classification="failed", message=f"{type(exc).__name__}: {exc}")
    g = r.graphon
    return ScanRecord(
        **base,
        pods_used=g.pods,
        entropy=r.entropy,
        classification=r.classification,
        order_q=order_parameter(g),
        delta_s=None if ref is None else r.entropy - ref,
        lambda_e=r.multipliers[0],
        lambda_t=r.multipliers[1],
        el_residual=r.el_residual,
        restarts_agreeing=r.restarts_agreeing,
        graphon=g,
    )


def _scan_row(template, i, e, t_values, warm_start):
    out = []
    warm = None
    for j, t in enumerate(t_values):
        rec = _solve_cell(template, float(e), float(t), i, j, warm if warm_start else None)
        if rec.optimized:
            warm = rec.graphon
        out.append(rec)
    return out


def run_scan(
    e_values: Sequence[float],
    t_values: Sequence[float],
    template,
    warm_start: bool = True,
    threads: int = 1,
) -> list[ScanRecord]:
    """Optimize every feasible cell of the grid ``e_values x t_values``.

    Row ``i`` holds ``e = e_values[i]``; within a row cells are solved in
    order of ``t_values`` and each feasible cell is warm-started from the
    last successful solution in the same row.  Rows are independent and may
    run concurrently; records come back in row-major order either way.
    Cells that fail the feasibility screen are recorded without optimization.
    """
    e_values = [float(e) for e in e_values]
    t_values = [float(t) for t in t_values]
    if threads > 1 and len(e_values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda a: _scan_row(template, a[0], a[1], t_values, warm_start),
                                 enumerate(e_values)))
    else:
        rows = [_scan_row(template, i, e, t_values, warm_start) for i, e in enumerate(e_values)]
    return [rec for row in rows for rec in row]


def grid(lo: float, hi: float, steps: int) -> list[float]:
    if steps < 1:
        raise DomainError(f"steps must be positive, got {steps!r}")
    if steps == 1:
        return [float(lo)]
    return np.linspace(lo, hi, steps).tolist()


def boundary_trace(records: Sequence[ScanRecord]) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Grid edges between neighbouring optimized cells with different classifications.

    Neighbours are cells whose ``(row, col)`` indices differ by one in a single
    coordinate.  Cells that were screened out or failed carry no
    classification and contribute no edges.
    """
    cells = {(r.row, r.col): r for r in records if r.optimized}
    edges = []
    for (i, j), r in sorted(cells.items()):
        for di, dj in ((0, 1), (1, 0)):
            q = cells.get((i + di, j + dj))
            if q is not None and q.classification != r.classification:
                edges.append(((r.e, r.t), (q.e, q.t)))
    return edges


def write_csv(records: Sequence[ScanRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        if list(row.keys()) != CSV_HEADER:
            raise ValueError("unexpected CSV header")
    return rows
