"""Named numerical suites that check quantitative claims about entropy maximizers.

Each suite returns a :class:`VerifyReport` made of :class:`VerifyCase` rows.
A case status is one of ``pass``, ``fail``, ``skipped``, ``inconclusive`` or
``consistent-with``; only ``fail`` makes a report fail.  ``consistent-with``
marks runs where a check is informative but proves nothing, for instance a
search that finds no counterexample.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import named
from .core import (
    DomainError,
    MultipodalGraphon,
    central_moment,
    edge_density,
    entropy,
    h,
    h_derivative,
    triangle_density,
)
from .spectral import spectrum

STATUSES = ("pass", "fail", "skipped", "inconclusive", "consistent-with")
UPPER_BOUND_SLACK = 1e-12


@dataclass
class VerifyCase:
    name: str
    inputs: dict
    measured: Any
    expected: Any
    tolerance: Any
    status: str
    note: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown case status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": self.inputs,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "status": self.status,
            "note": self.note,
        }


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


@dataclass
class VerifyReport:
    suite: str
    cases: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def add(self, *args, **kwargs) -> VerifyCase:
        case = VerifyCase(*args, **kwargs)
        self.cases.append(case)
        return case

    @property
    def summary(self) -> dict:
        counts = {s: 0 for s in STATUSES}
        for c in self.cases:
            counts[c.status] += 1
        counts["total"] = len(self.cases)
        return counts

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def case(self, name: str) -> VerifyCase:
        for c in self.cases:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "params": self.params,
            "cases": [c.to_dict() for c in self.cases],
            "summary": self.summary,
            "passed": self.passed,
        }

    def human(self) -> str:
        lines = [f"suite {self.suite}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.cases:
            lines.append(f"  [{c.status}] {c.name}: measured {_short(c.measured)}"
                         f" expected {_short(c.expected)} tol {_short(c.tolerance)}"
                         + (f" ({c.note})" if c.note else ""))
        s = self.summary
        lines.append("  " + ", ".join(f"{k} {s[k]}" for k in STATUSES + ("total",) if s[k]))
        return "\n".join(lines)


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _ordered_map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def ratio_window(order: float, factor: float, scale: float = 2.0) -> tuple[float, float]:
    """Accepted range of an error ratio over one step ``sigma -> sigma/scale``."""
    nominal = scale**order
    return nominal / factor, nominal * factor


# ---------------------------------------------------------------------------
# upper bound on the entropy below t = e^3


def random_graphon(rng: np.random.Generator, max_pods: int = 5, lo: float = 0.0, hi: float = 1.0):
    m = int(rng.integers(1, max_pods + 1))
    c = rng.dirichlet(np.ones(m))
    c = np.maximum(c, 1e-6)
    c /= math.fsum(c.tolist())
    P = rng.uniform(lo, hi, size=(m, m))
    P = np.triu(P) + np.triu(P, 1).T
    return MultipodalGraphon(c, P)


def rescale_to_edge(g: MultipodalGraphon, e: float, u: float) -> MultipodalGraphon | None:
    """Affine map ``p -> e + s (p - eps)`` with ``s = u s_max``; keeps ``p`` in ``[0, 1]``."""
    eps = edge_density(g)
    dev = g.p - eps
    limits = [math.inf]
    for d in dev.ravel():
        if d > 0:
            limits.append((1.0 - e) / d)
        elif d < 0:
            limits.append(e / -d)
    s = u * min(limits)
    if not math.isfinite(s):
        s = 0.0
    P = np.clip(e + s * dev, 0.0, 1.0)
    try:
        return MultipodalGraphon(g.c, P)
    except ValueError:
        return None


def upper_bound(e: float, sigma: float) -> float:
    r = math.hypot(e - 0.5, sigma)
    return h(min(0.5 + r, 1.0))


def verify_upper_bound(
    e: float | Sequence[float] = (0.48, 0.5, 0.52),
    sigma: float | None = None,
    n_samples: int = 1000,
    seed: int = 42,
    max_draws_factor: int = 200,
) -> VerifyReport:
    """Check ``S <= H(1/2 + sqrt(delta^2 + sigma_g^2))`` on random graphons with ``eps = e``.

    The bound only concerns graphons with ``tau <= e^3``, so candidates are
    drawn until ``n_samples`` of them qualify (at most
    ``max_draws_factor * n_samples`` draws).
    """
    es = [float(e)] if np.isscalar(e) else [float(x) for x in e]
    rep = VerifyReport("upper-bound", params={"e": es, "sigma": sigma, "n_samples": n_samples, "seed": seed})
    for k, ev in enumerate(es):
        rng = np.random.default_rng([seed, k])
        accepted = violations = draws = 0
        worst = -math.inf
        while accepted < n_samples and draws < max_draws_factor * n_samples:
            draws += 1
            g = rescale_to_edge(random_graphon(rng), ev, float(rng.uniform(0.0, 1.0)))
            if g is None:
                continue
            tau = triangle_density(g)
            gap = ev**3 - tau
            if gap < 0:
                continue
            accepted += 1
            excess = entropy(g) - upper_bound(ev, gap ** (1.0 / 3.0))
            worst = max(worst, excess)
            if excess > UPPER_BOUND_SLACK:
                violations += 1
        name = f"random samples at e={ev:g}"
        inputs = {"e": ev, "n_samples": n_samples, "accepted": accepted, "draws": draws}
        if accepted == 0:
            rep.add(name, inputs, None, 0, UPPER_BOUND_SLACK, "inconclusive", "no sample had tau <= e^3")
        else:
            short = f"; only {accepted} of {n_samples} requested samples qualified" if accepted < n_samples else ""
            rep.add(name, inputs, violations, 0, UPPER_BOUND_SLACK, _status(violations == 0),
                    f"largest S - bound {worst:.3e}{short}")
        if sigma is not None and 0 < sigma <= min(ev, 1 - ev):
            sb = named.symmetric_bipodal_entropy(ev, sigma)
            bound = upper_bound(ev, sigma)
            slack = bound - sb
            rep.add(f"symmetric bipodal slack at e={ev:g}", {"e": ev, "sigma": sigma},
                    slack, ">= 0", UPPER_BOUND_SLACK, _status(slack >= -UPPER_BOUND_SLACK),
                    f"slack / delta^2 = {slack / (ev - 0.5) ** 2:.6g}" if ev != 0.5 else "equality at delta = 0")
    return rep


# ---------------------------------------------------------------------------
# tripodal construction versus symmetric bipodal


def default_a_grid(a_min: float = 0.01, a_max: float = 0.08, steps: int = 20) -> list:
    return np.linspace(a_min, a_max, steps).tolist()


def tripodal_sweep(e: float, sigma: float, A_grid: Sequence[float]):
    """Entropy margin over the symmetric bipodal graphon for each ``A``.

    Returns ``(rows, skipped)`` where rows are ``(A, B, margin, F - H''(e))``.
    """
    ref = 0.5 * (h(e + sigma) + h(e - sigma))
    h2 = h_derivative(2, e)
    rows, skipped = [], []
    for A in A_grid:
        try:
            g, spec = named.tripodal_counterexample(e, sigma, A)
        except DomainError as exc:
            skipped.append((float(A), str(exc)))
            continue
        rows.append((float(A), spec.B, entropy(g) - ref, named.f_of_ab(e, A, spec.B) - h2))
    return rows, skipped


def verify_tripodal_beats_symmetric(
    e: float = 0.15,
    sigma_list: Sequence[float] = (0.02, 0.01, 0.005),
    A_grid: Sequence[float] | None = None,
    scaling_tol: float = 0.25,
) -> VerifyReport:
    """Search the tripodal family for more entropy than the symmetric bipodal graphon.

    For ``e < e0`` each sigma must have a positive margin for some ``A``; the
    best margins must scale like ``sigma^2`` across consecutive sigmas, and
    each must lie within ``scaling_tol`` of ``(F - H''(e)) sigma^2 / 2`` at
    the best ``A``.  For ``e >= e0`` nothing is asserted.
    """
    A_grid = default_a_grid() if A_grid is None else [float(a) for a in A_grid]
    e = float(e)
    sigmas = [float(s) for s in sigma_list]
    below = e < named.e0()
    rep = VerifyReport("tripodal", params={"e": e, "sigma_list": sigmas, "A_grid": A_grid,
                                           "scaling_tol": scaling_tol, "e_below_e0": below})
    best = {}
    for s in sigmas:
        rows, skipped = tripodal_sweep(e, s, A_grid)
        for A, reason in skipped:
            rep.add(f"skip A={A:g} sigma={s:g}", {"e": e, "sigma": s, "A": A}, None, None, None,
                    "skipped", reason)
        if not rows:
            rep.add(f"margin at sigma={s:g}", {"e": e, "sigma": s}, None, "> 0", 0.0,
                    "inconclusive", "no admissible A in the grid")
            continue
        A, B, margin, fgap = max(rows, key=lambda r: r[2])
        best[s] = (A, B, margin, fgap)
        inputs = {"e": e, "sigma": s, "A": A, "B": B}
        if below:
            rep.add(f"margin at sigma={s:g}", inputs, margin, "> 0", 0.0, _status(margin > 0))
            pred = 0.5 * fgap * s * s
            ok = pred > 0 and abs(margin - pred) <= scaling_tol * abs(pred)
            rep.add(f"margin vs (F - H'')sigma^2/2 at sigma={s:g}", inputs, margin, pred,
                    scaling_tol, _status(ok), "relative tolerance")
        else:
            rep.add(f"margin at sigma={s:g}", inputs, margin, "none expected", 0.0,
                    "consistent-with",
                    "no margin found on the grid" if margin <= 0 else "positive margin found")
    if below:
        for s1, s2 in zip(sigmas, sigmas[1:]):
            if s1 not in best or s2 not in best:
                continue
            m1, m2 = best[s1][2], best[s2][2]
            lo = (s1 / s2) ** 2 * (1 - scaling_tol)
            hi = (s1 / s2) ** 2 * (1 + scaling_tol)
            ratio = m1 / m2 if m2 != 0 else math.inf
            ok = m1 > 0 and m2 > 0 and lo <= ratio <= hi
            rep.add(f"sigma^2 scaling {s1:g} -> {s2:g}", {"e": e, "sigma": [s1, s2]}, ratio,
                    (s1 / s2) ** 2, [lo, hi], _status(ok))
        positive = [s for s in sigmas if s in best and best[s][2] > 0]
        rep.add("largest sigma with a tripodal margin", {"e": e}, max(positive) if positive else None,
                None, None, "consistent-with", "empirical threshold, not asserted")
    return rep


# ---------------------------------------------------------------------------
# asymmetric bipodal series just below t = e^3


def bipodal_parameters(g: MultipodalGraphon) -> tuple[float, float, float, float]:
    """``(a, b, c, d)`` with ``c`` the smaller pod mass and ``a`` its diagonal value."""
    if g.pods != 2:
        raise DomainError(f"expected a 2-pod graphon, got {g.pods} pods")
    i, j = (0, 1) if g.c[0] <= g.c[1] else (1, 0)
    return float(g.p[i, i]), float(g.p[j, j]), float(g.c[i]), float(g.p[i, j])


def verify_b11_series(
    e: float = 0.6,
    sigma_list: Sequence[float] = (0.04, 0.02, 0.01),
    restarts: int = 16,
    seed: int = 42,
    threads: int = 1,
) -> VerifyReport:
    """Compare optimized bipodal graphons with the small-sigma series.

    The ratio of successive deviations from the series must lie within a
    factor 2 of ``(sigma_1/sigma_2)^2`` for ``a`` and ``c`` and of
    ``(sigma_1/sigma_2)^3`` for ``b`` and ``d``.
    """
    from .optimizer import ConstraintProblem, maximize_entropy

    e = float(e)
    sigmas = [float(s) for s in sigma_list]
    rep = VerifyReport("b11", params={"e": e, "sigma_list": sigmas, "restarts": restarts, "seed": seed})

    def solve(s):
        return maximize_entropy(ConstraintProblem(e, e**3 - s**3, pods=2, restarts=restarts, seed=seed))

    results = _ordered_map(solve, sigmas, threads)
    devs = []
    for s, r in zip(sigmas, results):
        inputs = {"e": e, "sigma": s}
        rep.add(f"classification at sigma={s:g}", inputs, r.classification, "asymmetric_bipodal",
                None, _status(r.classification == "asymmetric_bipodal"))
        if r.graphon.pods != 2:
            devs.append(None)
            continue
        a, b, c, d = bipodal_parameters(r.graphon)
        rep.add(f"a<b<d and c<1/2 at sigma={s:g}", inputs, [a, b, c, d], "a<b<d, c<1/2", None,
                _status(a < b < d and c < 0.5))
        lam = spectrum(r.graphon).eigenvalues
        prod, closed = float(lam[0] * lam[1]), c * (1 - c) * (a * b - d * d)
        rep.add(f"eigenvalue product at sigma={s:g}", inputs, prod, closed, 1e-10,
                _status(abs(prod - closed) <= 1e-10))
        series = named.bipodal_series_params(e, s)
        devs.append([abs(x - y) for x, y in zip((a, b, c, d), series)])
    orders = {"a": 2, "b": 3, "c": 2, "d": 3}
    for k in range(len(sigmas) - 1):
        s1, s2 = sigmas[k], sigmas[k + 1]
        if devs[k] is None or devs[k + 1] is None:
            continue
        for idx, name in enumerate("abcd"):
            n = orders[name]
            nominal = (s1 / s2) ** n
            lo, hi = nominal / 2, nominal * 2
            d1, d2 = devs[k][idx], devs[k + 1][idx]
            ratio = d1 / d2 if d2 > 0 else math.inf
            rep.add(f"{name} deviation ratio {s1:g} -> {s2:g}", {"e": e, "sigma": [s1, s2]},
                    ratio, nominal, [lo, hi], _status(lo <= ratio <= hi), f"O(sigma^{n})")
    return rep


# ---------------------------------------------------------------------------
# the strict inequality sigma H'(1/2 + sigma) < 2 [H(1/2 + sigma) - H(1/2)]


def vary_v_gap(sigma: float) -> float:
    return 2.0 * (h(0.5 + sigma) - h(0.5)) - sigma * h_derivative(1, 0.5 + sigma)


def default_sigma_grid(n: int = 100, top: float = 0.49) -> list:
    return np.linspace(top / n, top, n).tolist()


def verify_vary_v(sigma_grid: Sequence[float] | None = None, halvings: int = 8) -> VerifyReport:
    grid_ = default_sigma_grid() if sigma_grid is None else [float(s) for s in sigma_grid]
    rep = VerifyReport("vary-v", params={"sigma_grid": grid_, "halvings": halvings})
    for s in grid_:
        if not 0 < s < 0.5:
            rep.add(f"gap at sigma={s:g}", {"sigma": s}, None, "> 0", 0.0, "skipped", "sigma outside (0, 1/2)")
            continue
        gap = vary_v_gap(s)
        rep.add(f"gap at sigma={s:.6g}", {"sigma": s}, gap, "> 0", 0.0, _status(gap > 0))
    # quartic onset: gap(s) / gap(s/2) -> 16, accepted within a factor 2
    s = 0.2
    lo, hi = ratio_window(4.0, 2.0)
    for _ in range(halvings):
        ratio = vary_v_gap(s) / vary_v_gap(s / 2)
        rep.add(f"quartic ratio {s:g} -> {s / 2:g}", {"sigma": [s, s / 2]}, ratio, 16.0, [lo, hi],
                _status(lo <= ratio <= hi))
        s /= 2
    limit = -2.0 * h_derivative(4, 0.5) / 24.0
    rep.add("gap / sigma^4 at the smallest sigma", {"sigma": 2 * s}, vary_v_gap(2 * s) / (2 * s) ** 4,
            limit, 0.05 * limit, _status(abs(vary_v_gap(2 * s) / (2 * s) ** 4 - limit) <= 0.05 * limit),
            "limit -2 H''''(1/2) / 4!")
    return rep


# ---------------------------------------------------------------------------
# even-moment series of the entropy about 1/2


def entropy_series(g: MultipodalGraphon, K: int = 60) -> float:
    terms = [h(0.5)]
    for k in range(1, K + 1):
        n = 2 * k
        terms.append(h_derivative(n, 0.5) / math.factorial(n) * central_moment(g, n, 0.5))
    return math.fsum(terms)


def rank_one_series(e: float, sigma: float, v: Sequence[float], c: Sequence[float], J: int = 60) -> float:
    """``sum_j (-sigma)^j H^(j)(e)/j! (int v^j)^2`` for the kernel ``e - sigma v(x) v(y)``."""
    v, c = np.asarray(v, float), np.asarray(c, float)
    terms = [h(e)]
    for j in range(1, J + 1):
        mom = math.fsum((c * v**j).tolist())
        terms.append((-sigma) ** j * h_derivative(j, e) / math.factorial(j) * mom * mom)
    return math.fsum(terms)


def verify_entropy_series(
    graphon_samples: int | Sequence[MultipodalGraphon] = 100,
    K: int = 60,
    seed: int = 42,
    tol: float = 1e-8,
) -> VerifyReport:
    if isinstance(graphon_samples, int):
        rng = np.random.default_rng(seed)
        samples = [random_graphon(rng, 5, 0.05, 0.95) for _ in range(graphon_samples)]
        count = graphon_samples
    else:
        samples = list(graphon_samples)
        count = len(samples)
    rep = VerifyReport("series", params={"samples": count, "K": K, "seed": seed, "tol": tol})
    worst = 0.0
    for g in samples:
        worst = max(worst, abs(entropy_series(g, K) - entropy(g)))
    rep.add("random graphons, values in [0.05, 0.95]", {"samples": count, "K": K}, worst, 0.0, tol,
            _status(worst <= tol), "largest |series - S|")
    half = named.constant_graphon(0.5)
    err = abs(entropy_series(half, K) - math.log(2.0))
    rep.add("constant 1/2", {"K": K}, err, 0.0, 0.0, _status(err == 0.0))
    sb = named.symmetric_bipodal(0.5, 0.3)
    err = abs(entropy_series(sb, K) - entropy(sb))
    rep.add("symmetric bipodal (1/2, 0.3)", {"K": K}, err, 0.0, tol, _status(err <= tol))
    near = MultipodalGraphon([0.5, 0.5], [[0.03, 0.95], [0.95, 0.5]])
    err = abs(entropy_series(near, K) - entropy(near))
    rep.add("values near 0 and 0.95", {"K": K}, err, 0.0, 1e-6, _status(err <= 1e-6),
            "slower convergence near the ends")
    # rank one: e - sigma v v with v = +-1 on two halves
    e, s = 0.4, 0.2
    g = MultipodalGraphon([0.5, 0.5], [[e - s, e + s], [e + s, e - s]])
    err = abs(rank_one_series(e, s, [1.0, -1.0], [0.5, 0.5], K) - entropy(g))
    rep.add("rank-one expansion", {"e": e, "sigma": s, "J": K}, err, 0.0, tol, _status(err <= tol))
    return rep


# ---------------------------------------------------------------------------
# e0 and the A^2 coefficient of F


def fit_f_coefficient(e: float, a_max: float = 0.02, points: int = 10) -> float:
    """Fit ``F(A, B(A)) - H''(e) = alpha A^2 + beta A^3`` for ``A <= a_max``; returns ``alpha``."""
    A = np.linspace(a_max / points, a_max, points)
    h2 = h_derivative(2, e)
    y = np.array([named.f_of_ab(e, a, named.tripodal_b(e, a)) - h2 for a in A])
    X = np.column_stack([A**2, A**3])
    return float(np.linalg.lstsq(X, y, rcond=None)[0][0])


def verify_e0(f_e: Sequence[float] = (0.10, 0.15, 0.20), f_tol: float = 0.05) -> VerifyReport:
    rep = VerifyReport("e0", params={"f_e": list(f_e), "f_tol": f_tol})
    root = (3.0 - math.sqrt(3.0)) / 6.0
    resid = abs(named.e0_discriminant(root))
    rep.add("e0 entropy condition", {"e0": root}, resid, 0.0, 1e-9, _status(resid <= 1e-9),
            f"e0 = {root:.8f}")
    rep.add("e0 value", {}, named.e0(), root, 1e-15, _status(abs(named.e0() - root) <= 1e-15))
    for ev, sign in ((0.1, 1), (0.4, -1)):
        d = named.e0_discriminant(ev)
        rep.add(f"discriminant sign at e={ev:g}", {"e": ev}, d, "> 0" if sign > 0 else "< 0", 0.0,
                _status(d * sign > 0))
    for ev in f_e:
        fit = fit_f_coefficient(ev)
        want = named.f_expansion_coefficient(ev)
        rel = abs(fit - want) / abs(want)
        rep.add(f"F expansion coefficient at e={ev:g}", {"e": ev, "a_max": 0.02}, fit, want, f_tol,
                _status(rel <= f_tol), "relative tolerance")
    return rep


SUITES = {
    "upper-bound": verify_upper_bound,
    "tripodal": verify_tripodal_beats_symmetric,
    "b11": verify_b11_series,
    "vary-v": verify_vary_v,
    "series": verify_entropy_series,
    "e0": verify_e0,
}


def run_suite(name: str, **params) -> VerifyReport:
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](**params)
