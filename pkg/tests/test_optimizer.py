import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_graphon
from graphon_entropy import named
from graphon_entropy.core import DomainError, MultipodalGraphon, edge_density, entropy, h, h_derivative, triangle_density
from graphon_entropy.optimizer import (
    ConstraintProblem,
    DegenerateCertificateError,
    GradientBundle,
    InfeasibleTargetError,
    NonConvergenceError,
    SeriesInit,
    build_starts,
    classify,
    el_certificate,
    entropy_upper_bound,
    functional_gradients,
    maximize_entropy,
    newton_polish,
    run_restarts,
)


def raw_functionals(c, P):
    """eps, tau, S for unnormalized masses, straight from the defining sums."""
    eps = np.einsum("i,j,ij->", c, c, P)
    tau = np.einsum("i,j,k,ij,jk,ki->", c, c, c, P, P, P)
    with np.errstate(divide="ignore", invalid="ignore"):
        H = -(P * np.log(P) + (1 - P) * np.log(1 - P))
    S = np.einsum("i,j,ij->", c, c, H)
    return np.array([eps, tau, S])


def fd_gradients(g, step=1e-6):
    c, P = g.c.copy(), g.p.copy()
    m = g.pods
    dp = np.zeros((3, m, m))
    for i in range(m):
        for j in range(i, m):
            Pp, Pm = P.copy(), P.copy()
            Pp[i, j] += step
            Pm[i, j] -= step
            if i != j:
                Pp[j, i] += step
                Pm[j, i] -= step
            dp[:, i, j] = dp[:, j, i] = (raw_functionals(c, Pp) - raw_functionals(c, Pm)) / (2 * step)
    dc = np.zeros((3, m))
    for i in range(m):
        cp, cm = c.copy(), c.copy()
        cp[i] += step
        cm[i] -= step
        dc[:, i] = (raw_functionals(cp, P) - raw_functionals(cm, P)) / (2 * step)
    return dp, dc


def test_gradients_against_finite_differences(rng):
    worst = 0.0
    for _ in range(20):
        g = random_graphon(rng, m=3, lo=0.02, hi=0.98)
        gb = functional_gradients(g)
        dp, dc = fd_gradients(g)
        for k, (ap, ac) in enumerate([(gb.edge_p, gb.edge_c), (gb.triangle_p, gb.triangle_c),
                                      (gb.entropy_p, gb.entropy_c)]):
            for a, f in ((ap, dp[k]), (ac, dc[k])):
                worst = max(worst, float(np.max(np.abs(a - f) / np.maximum(np.abs(f), 1e-300))))
    assert worst <= 1e-5


def test_constant_half_entropy_gradient_vanishes():
    gb = functional_gradients(named.embed(named.constant_graphon(0.5), 3))
    assert np.all(gb.entropy_p == 0.0)


def test_symmetric_bipodal_diagonal_edge_partials_equal():
    gb = functional_gradients(named.symmetric_bipodal(0.5, 0.2))
    assert gb.edge_p[0, 0] == gb.edge_p[1, 1]
    assert gb.edge_p[0, 1] == pytest.approx(2 * gb.edge_p[0, 0])


def test_saturated_blocks_flagged():
    g = MultipodalGraphon([0.5, 0.5], [[0.0, 0.5], [0.5, 1.0]])
    gb = functional_gradients(g)
    assert gb.saturated.tolist() == [[True, False], [False, True]]
    assert gb.entropy_p[0, 0] == np.inf and gb.entropy_p[1, 1] == -np.inf


def test_tangent_projection():
    v = GradientBundle.tangent(np.array([1.0, 2.0, 6.0]))
    assert v.sum() == pytest.approx(0.0, abs=1e-15)


class TestCertificate:
    def test_symmetric_bipodal(self):
        cert = el_certificate(named.symmetric_bipodal(0.5, 0.2))
        assert cert.residual <= 1e-10
        assert cert.lambda_t > 0

    def test_lambda_t_small_delta_form(self):
        # at e = 1/2 the fitted tau-multiplier is -H'(1/2 + sigma) / sigma^2 (positive)
        for sigma in (0.05, 0.1, 0.2, 0.3):
            cert = el_certificate(named.symmetric_bipodal(0.5, sigma))
            want = -h_derivative(1, 0.5 + sigma) / sigma**2
            assert cert.lambda_t == pytest.approx(want, rel=0.05)

    def test_constant(self):
        p = 0.3
        cert = el_certificate(named.constant_graphon(p))
        assert cert.residual <= 1e-15
        assert cert.lambda_e == pytest.approx(h_derivative(1, p) - cert.lambda_t * p * p, abs=1e-12)
        # minimum-norm solution of one equation in two unknowns
        norm = math.hypot(1.0, p * p)
        assert math.hypot(cert.lambda_e, cert.lambda_t) == pytest.approx(abs(h_derivative(1, p)) / norm, rel=1e-12)

    def test_perturbed_optimum_separates(self, rng):
        opt = maximize_entropy(ConstraintProblem(0.5, 0.117, pods=2, restarts=4)).graphon
        base = el_certificate(opt).residual
        noise = rng.normal(0, 1e-3, size=(2, 2))
        P = np.clip(opt.p + 0.5 * (noise + noise.T), 0.01, 0.99)
        assert el_certificate(MultipodalGraphon(opt.c, P)).residual > 10 * max(base, 1e-16)

    def test_all_saturated(self):
        with pytest.raises(DegenerateCertificateError):
            el_certificate(MultipodalGraphon([0.5, 0.5], [[0.0, 1.0], [1.0, 0.0]]))

    def test_saturated_kkt_direction(self):
        # e = sigma: the inner blocks sit at 0
        g = named.symmetric_bipodal(0.4, 0.4)
        cert = el_certificate(g)
        assert len(cert.saturated) == 2
        assert cert.kkt_consistent


class TestClassify:
    def test_examples(self):
        assert classify(named.constant_graphon(0.3)) == "constant"
        assert classify(named.symmetric_bipodal(0.5, 0.2)) == "symmetric_bipodal"
        assert classify(named.bipodal_series(0.6, 0.05)) == "asymmetric_bipodal"
        assert classify(named.tripodal_counterexample(0.15, 0.02, 0.05)[0]) == "tripodal"

    def test_merges_split_pods(self):
        assert classify(named.embed(named.symmetric_bipodal(0.5, 0.2), 5)) == "symmetric_bipodal"
        assert classify(named.embed(named.constant_graphon(0.4), 3)) == "constant"

    def test_other(self, rng):
        g = MultipodalGraphon(np.full(4, 0.25), np.diag([0.1, 0.3, 0.5, 0.7]) + 0.05)
        assert classify(g) == "other(4)"


class TestProblem:
    def test_infeasible(self):
        with pytest.raises(InfeasibleTargetError):
            ConstraintProblem(0.3, 0.2)

    def test_bad_pods(self):
        with pytest.raises(DomainError):
            ConstraintProblem(0.5, 0.117, pods=0)

    def test_starts_are_seeded(self):
        a = build_starts(ConstraintProblem(0.5, 0.117, pods=3, restarts=6, seed=3))[2]
        b = build_starts(ConstraintProblem(0.5, 0.117, pods=3, restarts=6, seed=3))[2]
        assert [k for k, _ in a] == [k for k, _ in b]
        assert all(np.array_equal(x.p, y.p) for (_, x), (_, y) in zip(a, b))
        assert a[0][0] == "symmetric_bipodal"

    def test_series_init_first(self):
        starts = build_starts(ConstraintProblem(0.6, 0.6**3 - 0.02**3, init=SeriesInit(0.6, 0.02)))[2]
        assert starts[0][0] == "series"


class TestMaximize:
    def test_er_point(self):
        for p in (0.3, 0.7):
            r = maximize_entropy(ConstraintProblem(p, p**3, pods=1, restarts=3))
            assert r.classification == "constant"
            assert r.entropy == pytest.approx(h(p), abs=1e-12)

    def test_desk_symmetric_bipodal(self):
        r = maximize_entropy(ConstraintProblem(0.5, 0.117, pods=3, restarts=8))
        assert r.classification == "symmetric_bipodal"
        assert abs(r.entropy - h(0.7)) <= 1e-7
        assert abs(r.achieved_e - 0.5) <= 1e-9 and abs(r.achieved_t - 0.117) <= 1e-9
        assert r.el_residual <= 1e-7
        assert r.entropy <= entropy_upper_bound(0.5, 0.117) + 1e-12

    def test_asymmetric_bipodal_above_half(self):
        e, s = 0.6, 0.02
        r = maximize_entropy(ConstraintProblem(e, e**3 - s**3, pods=2, restarts=4))
        assert r.classification == "asymmetric_bipodal"
        assert r.entropy > named.symmetric_bipodal_entropy(e, s)

    def test_deterministic_and_thread_independent(self):
        p = dict(target_e=0.45, target_t=0.08, pods=3, restarts=6, seed=11)
        a = maximize_entropy(ConstraintProblem(**p))
        b = maximize_entropy(ConstraintProblem(**p))
        c = maximize_entropy(ConstraintProblem(**p, threads=3))
        for r in (b, c):
            assert np.array_equal(a.graphon.p, r.graphon.p) and np.array_equal(a.graphon.c, r.graphon.c)
            assert a.entropy == r.entropy and a.multipliers == r.multipliers
            assert a.restarts == r.restarts

    def test_merit_monotone_within_rounds(self):
        outs = run_restarts(ConstraintProblem(0.45, 0.08, pods=3, restarts=4, seed=5))
        for o in outs:
            for rnd in o.merit_history:
                assert all(b >= a - 1e-12 * max(1.0, abs(a)) for a, b in zip(rnd, rnd[1:]))

    def test_non_convergence_carries_best(self):
        with pytest.raises(NonConvergenceError) as exc:
            maximize_entropy(ConstraintProblem(0.6, 0.6**3 - 0.01**3, pods=2, restarts=1,
                                               canonical_starts=False, max_iterations=2,
                                               stationarity_tol=1e-30))
        assert exc.value.best is not None


class TestPolish:
    def test_polish_recovers_optimum_from_series(self):
        e, s = 0.6, 0.02
        g, (le, lt) = newton_polish(named.bipodal_series(e, s), e, e**3 - s**3)
        assert abs(edge_density(g) - e) <= 1e-13
        assert abs(triangle_density(g) - (e**3 - s**3)) <= 1e-13
        cert = el_certificate(g)
        assert cert.residual <= 1e-10
        # the polish multiplies grad tau = 3 F G, the certificate fits G itself
        assert le == pytest.approx(cert.lambda_e, rel=1e-6)
        assert lt == pytest.approx(cert.lambda_t / 3, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 0.7), st.floats(0.02, 0.25))
def test_entropy_bound_holds_for_symmetric_bipodal(e, sigma):
    sigma = min(sigma, min(e, 1 - e))
    S = entropy(named.symmetric_bipodal(e, sigma))
    assert S <= entropy_upper_bound(e, e**3 - sigma**3) + 1e-12
