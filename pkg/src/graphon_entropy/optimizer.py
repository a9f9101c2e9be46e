"""Constrained entropy maximization over m-podal graphons.

Maximize ``S(g)`` subject to ``eps(g) = e`` and ``tau(g) = t``.  Each restart
runs a quadratic-penalty phase in unconstrained coordinates (softmax chart for
pod masses, logits for block values) followed by a Newton polish on the KKT
system in the natural coordinates.  The best restart is certified with a
least-squares fit of the Euler-Lagrange equation
``H'(p_ij) = Lambda_e + Lambda_t G_ij``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .core import (
    DomainError,
    MultipodalGraphon,
    canonical_order,
    compact,
    edge_density,
    entropy,
    h,
    triangle_density,
)
from . import named


PENALTY_MU0 = 10.0
PENALTY_GROWTH = 10.0
PENALTY_ROUNDS = 6
# residuals enter the penalty in units of residual_unit(e, t), so the effective
# weight of the first round is PENALTY_MU0 / unit**2
RESIDUAL_UNIT = 1e-2
MIN_RESIDUAL_UNIT = 1e-10
PRE_POLISH_MERGE_TOL = 1e-3
MIN_POD_MASS = 1e-7
SATURATION_TOL = 1e-12
AGREE_TOL = 1e-8
TIE_TOL = 1e-10


class InfeasibleTargetError(DomainError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateCertificateError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesInit:
    """Start from the bipodal series at ``(e, sigma)``."""

    e: float
    sigma: float


InitSpec = Union[str, MultipodalGraphon, SeriesInit]


@dataclass
class ConstraintProblem:
    target_e: float
    target_t: float
    pods: int = 2
    restarts: int = 32
    seed: int = 42
    constraint_tol: float = 1e-9
    stationarity_tol: float = 1e-7
    max_iterations: int = 2000
    init: InitSpec = "random"
    canonical_starts: bool = True
    merge_tol: float = 1e-5
    threads: int = 1

    def __post_init__(self):
        from .scan import feasibility

        if int(self.pods) != self.pods or self.pods < 1:
            raise DomainError(f"pods must be a positive integer, got {self.pods!r}")
        if self.restarts < 1:
            raise DomainError(f"restarts must be positive, got {self.restarts!r}")
        if isinstance(self.init, str) and self.init != "random":
            raise DomainError(f"unknown init {self.init!r}")
        status = feasibility(self.target_e, self.target_t)
        if status == "infeasible":
            raise InfeasibleTargetError(
                f"(e, t) = ({self.target_e!r}, {self.target_t!r}) is outside the achievable region"
            )


# ---------------------------------------------------------------------------
# functionals and analytic gradients


@dataclass(frozen=True)
class GradientBundle:
    """Partials of eps, tau and S.

    ``*_p[i, j]`` is the derivative with respect to the shared value
    ``p_ij = p_ji`` of a block (so off-diagonal entries carry both halves of the
    symmetric pair).  ``*_c`` are partials with pod masses treated as free; use
    :meth:`tangent` to project onto ``sum(dc) = 0``.  Saturated blocks get a
    ``+inf`` / ``-inf`` entropy partial.
    """

    edge_p: np.ndarray
    triangle_p: np.ndarray
    entropy_p: np.ndarray
    edge_c: np.ndarray
    triangle_c: np.ndarray
    entropy_c: np.ndarray
    saturated: np.ndarray

    @staticmethod
    def tangent(v: np.ndarray) -> np.ndarray:
        return v - v.mean()


def _hprime(P):
    with np.errstate(divide="ignore"):
        return np.log1p(-P) - np.log(P)


def _evaluate(c, P, need_grad=True):
    W = np.outer(c, c)
    G = (P * c) @ P
    Hp = h(P)
    eps = float(np.sum(W * P))
    tau = float(np.sum(W * P * G))
    S = float(np.sum(W * Hp))
    if not need_grad:
        return eps, tau, S, None
    F = 2.0 * W - np.diag(np.diag(W))
    grads = (
        F,
        3.0 * F * G,
        F * _hprime(P),
        2.0 * (P @ c),
        3.0 * ((P * G) @ c),
        2.0 * (Hp @ c),
    )
    return eps, tau, S, grads


def functional_gradients(g: MultipodalGraphon) -> GradientBundle:
    eps_p, tau_p, s_p, eps_c, tau_c, s_c = _evaluate(g.c, g.p)[3]
    sat = (g.p <= 0.0) | (g.p >= 1.0)
    s_p = np.where(g.p <= 0.0, np.inf, np.where(g.p >= 1.0, -np.inf, s_p))
    return GradientBundle(eps_p, tau_p, s_p, eps_c, tau_c, s_c, sat)


# ---------------------------------------------------------------------------
# Euler-Lagrange certificate and classification


class ELCertificate(NamedTuple):
    lambda_e: float
    lambda_t: float
    residual: float
    saturated: tuple  # ((i, j, p_ij, rhs), ...) for blocks at 0 or 1
    kkt_consistent: bool


def el_certificate(g: MultipodalGraphon, sat_tol: float = SATURATION_TOL) -> ELCertificate:
    """Weighted least-squares fit of ``H'(p_ij) = Lambda_e + Lambda_t G_ij``.

    Unsaturated blocks enter with weight ``c_i c_j``; the residual is the
    weighted RMS misfit.  With fewer independent equations than unknowns the
    minimum-norm multipliers are returned.  A block pinned at 0 (resp. 1) is
    consistent when its right-hand side is at least (resp. at most) every
    unsaturated ``H'`` value, i.e. when the fit would push it further toward
    the bound it sits on.
    """
    G = g.codegree()
    W = np.outer(g.c, g.c)
    P = g.p
    free = (P > sat_tol) & (P < 1.0 - sat_tol)
    if not free.any():
        raise DegenerateCertificateError("every block is saturated; no equation to fit")
    w = np.sqrt(W[free])
    A = np.column_stack([w, w * G[free]])
    y = w * _hprime(P[free])
    (lam_e, lam_t), *_ = np.linalg.lstsq(A, y, rcond=1e-13)
    misfit = _hprime(P[free]) - lam_e - lam_t * G[free]
    resid = math.sqrt(float(np.sum(W[free] * misfit**2) / np.sum(W[free])))
    hp_free = _hprime(P[free])
    saturated = []
    ok = True
    m = g.pods
    for i in range(m):
        for j in range(i, m):
            if free[i, j]:
                continue
            rhs = float(lam_e + lam_t * G[i, j])
            saturated.append((i, j, float(P[i, j]), rhs))
            if P[i, j] <= sat_tol:
                ok &= rhs >= float(hp_free.max())
            else:
                ok &= rhs <= float(hp_free.min())
    return ELCertificate(float(lam_e), float(lam_t), resid, tuple(saturated), bool(ok))


def classify(g: MultipodalGraphon, tol: float = 1e-5) -> str:
    merged = compact(g, tol)
    m = merged.pods
    if m == 1:
        return "constant"
    if m == 2:
        c = merged.c[0]
        if abs(c - 0.5) <= tol and abs(merged.p[0, 0] - merged.p[1, 1]) <= tol:
            return "symmetric_bipodal"
        return "asymmetric_bipodal"
    if m == 3:
        return "tripodal"
    return f"other({m})"


def effective_pods(g: MultipodalGraphon, tol: float = 1e-5) -> int:
    return compact(g, tol).pods


# ---------------------------------------------------------------------------
# coordinates


class _Chart:
    """Softmax chart for masses (last logit pinned at 0) and logits for blocks."""

    LIMIT = 35.0

    def __init__(self, m: int):
        self.m = m
        self.iu = np.triu_indices(m)
        self.nz = m - 1

    def to_theta(self, g: MultipodalGraphon) -> np.ndarray:
        z = np.log(g.c[:-1]) - np.log(g.c[-1])
        p = np.clip(g.p[self.iu], 1e-15, 1 - 1e-15)
        return np.concatenate([z, np.clip(logit(p), -self.LIMIT, self.LIMIT)])

    def unpack(self, theta):
        z = np.concatenate([theta[: self.nz], [0.0]])
        z = z - z.max()
        c = np.exp(z)
        c /= c.sum()
        w = np.clip(theta[self.nz:], -self.LIMIT, self.LIMIT)
        P = np.empty((self.m, self.m))
        P[self.iu] = expit(w)
        P.T[self.iu] = P[self.iu]
        return c, P

    def pull_back(self, c, P, grad_p, grad_c):
        gz = c * grad_c - c * np.dot(c, grad_c)
        pv = P[self.iu]
        gw = grad_p[self.iu] * pv * (1 - pv)
        return np.concatenate([gz[: self.nz], gw])


# ---------------------------------------------------------------------------
# per-restart solver


@dataclass
class RestartOutcome:
    index: int
    start: str
    graphon: MultipodalGraphon | None = None
    entropy: float = -math.inf
    constraint_error: float = math.inf
    el_residual: float = math.inf
    converged: bool = False
    classification: str = "failed"
    pods_used: int = 0
    merit_history: list = field(default_factory=list, repr=False)
    message: str = ""


def _multiplier_estimate(c, P):
    _, _, _, (ep, tp, sp, ec, tc, sc) = _evaluate(c, P)
    A = np.column_stack([np.concatenate([ep.ravel(), ec - ec.mean()]),
                         np.concatenate([tp.ravel(), tc - tc.mean()])])
    b = np.concatenate([sp.ravel(), sc - sc.mean()])
    return np.linalg.lstsq(A, b, rcond=None)[0]


def _restore(chart, theta, e, t, max_iterations):
    """Move to the constraint set by least squares on the residuals alone."""

    def resid2(th):
        c, P = chart.unpack(th)
        eps, tau, _, (ep, tp, _, ec, tc, _) = _evaluate(c, P)
        re, rt = eps - e, tau - t
        f = 0.5 * (re * re + rt * rt)
        return f, chart.pull_back(c, P, re * ep + rt * tp, re * ec + rt * tc)

    if resid2(theta)[0] < 1e-20:
        return theta
    res = minimize(resid2, theta, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iterations, "gtol": 1e-14, "ftol": 1e-30})
    return res.x


def residual_unit(e: float, t: float) -> float:
    """Penalty scale: ``|e^3 - t|`` clipped to ``[MIN_RESIDUAL_UNIT, RESIDUAL_UNIT]``.

    Near ``t = e^3`` the entropy gained by violating the triangle constraint is
    comparable to the gap itself, so a fixed scale lets restarts collapse onto
    the constant graphon.
    """
    return min(RESIDUAL_UNIT, max(abs(e**3 - t), MIN_RESIDUAL_UNIT))


def _penalty_phase(g0, e, t, max_iterations, history):
    """Quadratic penalty rounds with first-order multiplier updates.

    Merit is ``S - lam . r - mu/2 |r|^2`` with ``r = (eps - e, tau - t)``;
    ``mu`` grows geometrically and ``lam`` follows ``lam <- lam + mu r`` after
    each round.  Starting multipliers are fitted at the start point, so a
    start that already solves the KKT system stays put.
    """
    chart = _Chart(g0.pods)
    theta = _restore(chart, chart.to_theta(g0), e, t, max_iterations)
    c, P = chart.unpack(theta)
    lam = _multiplier_estimate(c, P)
    mu = PENALTY_MU0 / residual_unit(e, t) ** 2
    for _ in range(PENALTY_ROUNDS):
        rnd = []

        def merit(th, mu=mu, lam=lam):
            c, P = chart.unpack(th)
            eps, tau, S, (ep, tp, sp, ec, tc, sc) = _evaluate(c, P)
            re, rt = eps - e, tau - t
            f = -S + lam[0] * re + lam[1] * rt + 0.5 * mu * (re * re + rt * rt)
            ke, kt = lam[0] + mu * re, lam[1] + mu * rt
            gp = -sp + ke * ep + kt * tp
            gc = -sc + ke * ec + kt * tc
            return f, chart.pull_back(c, P, gp, gc)

        def record(intermediate_result):
            rnd.append(-float(intermediate_result.fun))

        res = minimize(
            merit,
            theta,
            jac=True,
            method="L-BFGS-B",
            callback=record,
            options={"maxiter": max_iterations, "gtol": 1e-12, "ftol": 1e-16, "maxcor": 30},
        )
        theta = res.x
        history.append(rnd)
        c, P = chart.unpack(theta)
        eps, tau, _, _ = _evaluate(c, P, need_grad=False)
        lam = lam + mu * np.array([eps - e, tau - t])
        mu *= PENALTY_GROWTH
        if max(abs(eps - e), abs(tau - t)) < 1e-13:
            break
    return chart.unpack(theta)


def _reduced(c, P, iu):
    return np.concatenate([c[:-1], P[iu]])


def _expand(x, m, iu):
    c = np.concatenate([x[: m - 1], [1.0 - np.sum(x[: m - 1])]])
    P = np.empty((m, m))
    P[iu] = x[m - 1:]
    P.T[iu] = P[iu]
    return c, P


def _lagrangian_parts(x, m, iu):
    c, P = _expand(x, m, iu)
    eps, tau, S, (ep, tp, sp, ec, tc, sc) = _evaluate(c, P)

    def red(gp, gc):
        return np.concatenate([gc[:-1] - gc[-1], gp[iu]])

    return eps, tau, S, red(sp, sc), red(ep, ec), red(tp, tc)


def _room(x, m, iu):
    """Distance of each reduced coordinate to the nearest bound."""
    c, P = _expand(x, m, iu)
    pv = P[iu]
    rc = np.minimum(c[:-1], c[-1])
    return np.concatenate([rc, np.minimum(pv, 1 - pv)])


def _admissible(x, m, iu):
    c, P = _expand(x, m, iu)
    return bool(np.all(c > 0) and np.all(P > 0) and np.all(P < 1))


def newton_polish(g: MultipodalGraphon, e: float, t: float, iterations: int = 200):
    """Newton iteration on the KKT system of max S s.t. eps = e, tau = t, sum c = 1.

    The Hessian of the Lagrangian is a central difference of the analytic
    gradient; steps are least-squares solutions (rank-deficient systems are
    fine) with backtracking on the KKT residual norm.  Returns the polished
    graphon and the multipliers of the eps and tau constraints.
    """
    m = g.pods
    iu = np.triu_indices(m)
    x = _reduced(g.c, np.clip(g.p, 1e-14, 1 - 1e-14), iu)
    n = x.size

    def kkt(x, lam):
        eps, tau, S, gs, ge, gt = _lagrangian_parts(x, m, iu)
        return np.concatenate([gs - lam[0] * ge - lam[1] * gt, [eps - e, tau - t]]), ge, gt

    _, _, _, gs, ge, gt = _lagrangian_parts(x, m, iu)
    lam = np.linalg.lstsq(np.column_stack([ge, gt]), gs, rcond=None)[0]
    F, ge, gt = kkt(x, lam)
    norm = np.linalg.norm(F)
    for _ in range(iterations):
        if norm < 1e-15:
            break
        room = _room(x, m, iu)
        Hm = np.empty((n, n))
        for k in range(n):
            hstep = min(1e-6, 0.25 * room[k])
            dx = np.zeros(n)
            dx[k] = hstep
            fp = kkt(x + dx, lam)[0][:n]
            fm = kkt(x - dx, lam)[0][:n]
            Hm[:, k] = (fp - fm) / (2 * hstep)
        if not np.all(np.isfinite(Hm)):
            break
        Hm = 0.5 * (Hm + Hm.T)
        J = np.column_stack([ge, gt])
        K = np.block([[Hm, -J], [J.T, np.zeros((2, 2))]])
        step = np.linalg.lstsq(K, -F, rcond=1e-14)[0]
        alpha = 1.0
        improved = False
        while alpha > 1e-6:
            xn = x + alpha * step[:n]
            ln = lam + alpha * step[n:]
            if _admissible(xn, m, iu):
                Fn, gen, gtn = kkt(xn, ln)
                nn = np.linalg.norm(Fn)
                if nn < norm:
                    x, lam, F, ge, gt, norm = xn, ln, Fn, gen, gtn, nn
                    improved = True
                    break
            alpha *= 0.5
        if not improved:
            break
    c, P = _expand(x, m, iu)
    c = c / math.fsum(c.tolist())
    return MultipodalGraphon(c, P), (float(lam[0]), float(lam[1]))


def _drop_tiny(c, P):
    keep = c > MIN_POD_MASS
    if keep.all() or not keep.any():
        return c, P
    c = c[keep] / c[keep].sum()
    return c, P[np.ix_(keep, keep)]


def _solve_one(problem: ConstraintProblem, index: int, start: MultipodalGraphon, kind: str):
    out = RestartOutcome(index=index, start=kind)
    e, t = problem.target_e, problem.target_t
    try:
        c, P = _penalty_phase(start, e, t, problem.max_iterations, out.merit_history)
        c, P = _drop_tiny(c, P)
        raw = MultipodalGraphon(c / math.fsum(c.tolist()), 0.5 * (P + P.T))
        candidates = []
        merged = compact(raw, PRE_POLISH_MERGE_TOL)
        candidates.append(merged)
        if merged.pods != raw.pods:
            candidates.append(raw)
        best = None
        for cand in candidates:
            g, _ = newton_polish(cand, e, t)
            if g.pods > 1 and g.c.min() < MIN_POD_MASS:
                c2, P2 = _drop_tiny(g.c, g.p)
                g, _ = newton_polish(MultipodalGraphon(c2, P2), e, t)
            err = max(abs(edge_density(g) - e), abs(triangle_density(g) - t))
            try:
                cert = el_certificate(g)
                resid = cert.residual
            except DegenerateCertificateError:
                resid = math.inf
            ok = err <= problem.constraint_tol and resid <= problem.stationarity_tol
            if best is None or (ok and not best[2]):
                best = (g, err, ok, resid)
            if ok:
                break
        g, err, ok, resid = best
        g = canonical_order(compact(g, problem.merge_tol)) if ok else g
        out.graphon = g
        out.entropy = entropy(g)
        out.constraint_error = err
        out.el_residual = resid
        out.converged = ok
        out.classification = classify(g, problem.merge_tol)
        out.pods_used = g.pods
    except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        out.message = f"{type(exc).__name__}: {exc}"
    return out


# ---------------------------------------------------------------------------
# starts


def _random_start(rng, m):
    c = 0.5 * rng.dirichlet(np.ones(m)) + 0.5 / m
    c /= c.sum()
    P = rng.uniform(0.05, 0.95, size=(m, m))
    P = np.triu(P) + np.triu(P, 1).T
    return MultipodalGraphon(c, P)


def sigma_of(e: float, t: float) -> float | None:
    gap = e**3 - t
    return gap ** (1.0 / 3.0) if gap > 0 else None


def canonical_starts(e: float, t: float, pods: int):
    """Structured starting graphons: symmetric bipodal and bipodal series when they apply."""
    starts = []
    if pods == 1:
        if 0 <= e <= 1:
            starts.append(("constant", named.constant_graphon(e)))
        return starts
    sigma = sigma_of(e, t)
    if sigma is not None and sigma <= min(e, 1 - e):
        starts.append(("symmetric_bipodal", named.embed(named.symmetric_bipodal(e, sigma), pods)))
    if sigma is not None and e > 0.5:
        try:
            starts.append(("bipodal_series", named.embed(named.bipodal_series(e, sigma), pods)))
        except DomainError:
            pass
    return starts


def build_starts(problem: ConstraintProblem):
    m = problem.pods
    starts = []
    init = problem.init
    if isinstance(init, MultipodalGraphon):
        starts.append(("warm", named.embed(init, m)))
    elif isinstance(init, SeriesInit):
        starts.append(("series", named.embed(named.bipodal_series(init.e, init.sigma), m)))
    if problem.canonical_starts:
        starts.extend(canonical_starts(problem.target_e, problem.target_t, m))
    starts = starts[: problem.restarts]
    k = len(starts)
    while len(starts) < problem.restarts:
        rng = np.random.default_rng([problem.seed, len(starts)])
        starts.append(("random", _random_start(rng, m)))
    return starts[:k], starts[k:], starts


# ---------------------------------------------------------------------------
# driver


@dataclass(frozen=True)
class RestartSummary:
    index: int
    start: str
    converged: bool
    entropy: float
    classification: str
    pods_used: int


@dataclass(frozen=True)
class OptimizerResult:
    graphon: MultipodalGraphon
    achieved_e: float
    achieved_t: float
    entropy: float
    multipliers: tuple
    el_residual: float
    classification: str
    restarts_agreeing: int
    restarts_converged: int
    converged: bool
    target_e: float
    target_t: float
    pods_requested: int
    restarts: tuple = ()

    @property
    def pods_used(self) -> int:
        return self.graphon.pods


def _pick_best(outcomes):
    conv = [o for o in outcomes if o.converged]
    pool = conv if conv else [o for o in outcomes if o.graphon is not None]
    if not pool:
        return None
    top = max(o.entropy for o in pool)
    near = [o for o in pool if o.entropy >= top - TIE_TOL]
    return min(near, key=lambda o: (o.pods_used, o.index))


def run_restarts(problem: ConstraintProblem):
    _, _, starts = build_starts(problem)
    jobs = [(i, g, kind) for i, (kind, g) in enumerate(starts)]
    if problem.threads > 1:
        with ThreadPoolExecutor(max_workers=problem.threads) as pool:
            outcomes = list(pool.map(lambda j: _solve_one(problem, j[0], j[1], j[2]), jobs))
    else:
        outcomes = [_solve_one(problem, i, g, kind) for i, g, kind in jobs]
    return outcomes


def maximize_entropy(problem: ConstraintProblem) -> OptimizerResult:
    outcomes = run_restarts(problem)
    best = _pick_best(outcomes)
    if best is None or not best.converged:
        raise NonConvergenceError(
            f"no restart converged for (e, t) = ({problem.target_e}, {problem.target_t})",
            best=best,
        )
    g = best.graphon
    cert = el_certificate(g)
    agreeing = sum(
        1
        for o in outcomes
        if o.converged
        and abs(o.entropy - best.entropy) <= AGREE_TOL
        and o.classification == best.classification
    )
    summaries = tuple(
        RestartSummary(o.index, o.start, o.converged, o.entropy, o.classification, o.pods_used)
        for o in outcomes
    )
    return OptimizerResult(
        graphon=g,
        achieved_e=edge_density(g),
        achieved_t=triangle_density(g),
        entropy=entropy(g),
        multipliers=(cert.lambda_e, cert.lambda_t),
        el_residual=cert.residual,
        classification=best.classification,
        restarts_agreeing=agreeing,
        restarts_converged=sum(o.converged for o in outcomes),
        converged=True,
        target_e=problem.target_e,
        target_t=problem.target_t,
        pods_requested=problem.pods,
        restarts=summaries,
    )


def entropy_upper_bound(e: float, t: float) -> float:
    """A-priori bound ``H(1/2 + sqrt(delta^2 + sigma^2))`` valid for ``t < e^3``."""
    sigma = sigma_of(e, t)
    if sigma is None:
        return math.log(2.0)
    r = math.sqrt((e - 0.5) ** 2 + sigma**2)
    return h(min(0.5 + r, 1.0))


__all__ = [
    "ConstraintProblem",
    "OptimizerResult",
    "SeriesInit",
    "GradientBundle",
    "ELCertificate",
    "functional_gradients",
    "maximize_entropy",
    "el_certificate",
    "classify",
    "newton_polish",
    "InfeasibleTargetError",
    "NonConvergenceError",
    "DegenerateCertificateError",
]
