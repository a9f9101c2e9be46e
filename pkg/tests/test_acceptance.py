"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (collected again in the terminal
summary) and then asserts both the criterion and its runtime budget.
"""
import io
import math
import time

import numpy as np
import pytest

from acceptance_log import record
from graphon_entropy import cli, named
from graphon_entropy import io as gio
from graphon_entropy.core import MultipodalGraphon, edge_density, entropy, h, h_derivative, l2_distance, triangle_density
from graphon_entropy.optimizer import ConstraintProblem, functional_gradients, maximize_entropy
from graphon_entropy.scan import run_scan
from graphon_entropy.spectral import triangle_identity_residual
from graphon_entropy.verify import (
    default_a_grid,
    fit_f_coefficient,
    verify_b11_series,
    verify_tripodal_beats_symmetric,
    verify_upper_bound,
    verify_vary_v,
)

pytestmark = pytest.mark.slow


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def cli_bytes(*argv):
    buf = io.StringIO()
    code = cli.run(list(argv), stdin=io.StringIO(), stdout=buf, stderr=io.StringIO())
    return code, buf.getvalue().encode("utf-8")


def random_graphon(rng, m):
    c = rng.dirichlet(np.ones(m))
    a = rng.uniform(0.02, 0.98, size=(m, m))
    return MultipodalGraphon(c, np.triu(a) + np.triu(a, 1).T)


# ---------------------------------------------------------------------------


def test_01_closed_form():
    g = named.symmetric_bipodal(0.5, 0.2)

    def evaluate():
        return edge_density(g), triangle_density(g), entropy(g)

    evaluate()
    best = math.inf
    for _ in range(20):
        (e, t, s), dt = timed(evaluate)
        best = min(best, dt)
    de, dt_, ds = abs(e - 0.5), abs(t - 0.117), abs(s - h(0.7))
    ok = de <= 1e-15 and dt_ <= 1e-15 and ds <= 1e-12 and abs(s - 0.610864) <= 1e-6
    record(1, "closed form", ok and best < 1e-3,
           f"|de|={de:.1e} |dt|={dt_:.1e} |dS|={ds:.1e} S={s:.9f} time={best * 1e3:.3f} ms")
    assert ok and best < 1e-3


def test_02_triangle_identity():
    def run():
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            m = int(rng.integers(1, 7))
            c = rng.dirichlet(np.ones(m))
            a = rng.uniform(0.0, 1.0, size=(m, m))
            worst = max(worst, triangle_identity_residual(MultipodalGraphon(c, np.triu(a) + np.triu(a, 1).T)))
        return worst

    worst, dt = timed(run)
    ok = worst <= 1e-10
    record(2, "spectral triangle identity", ok and dt < 1.0, f"max residual={worst:.2e} over 1000, time={dt:.2f} s")
    assert ok and dt < 1.0


def _raw(c, P):
    with np.errstate(divide="ignore", invalid="ignore"):
        H = -(P * np.log(P) + (1 - P) * np.log(1 - P))
    return np.array([
        np.einsum("i,j,ij->", c, c, P),
        np.einsum("i,j,k,ij,jk,ki->", c, c, c, P, P, P),
        np.einsum("i,j,ij->", c, c, H),
    ])


def test_03_gradient_check():
    def run():
        rng = np.random.default_rng(3)
        # step near eps^(1/3): balances truncation against roundoff on the small partials
        step, worst = 1e-5, 0.0
        for _ in range(100):
            g = random_graphon(rng, 3)
            gb = functional_gradients(g)
            c, P = g.c, g.p
            pairs = []
            for i in range(3):
                for j in range(i, 3):
                    E = np.zeros((3, 3))
                    E[i, j] = E[j, i] = step
                    fd = (_raw(c, P + E) - _raw(c, P - E)) / (2 * step)
                    pairs += list(zip([gb.edge_p[i, j], gb.triangle_p[i, j], gb.entropy_p[i, j]], fd))
                d = np.zeros(3)
                d[i] = step
                fd = (_raw(c + d, P) - _raw(c - d, P)) / (2 * step)
                pairs += list(zip([gb.edge_c[i], gb.triangle_c[i], gb.entropy_c[i]], fd))
            for a, f in pairs:
                worst = max(worst, abs(a - f) / max(abs(f), 1e-12))
        return worst

    worst, dt = timed(run)
    ok = worst <= 1e-5
    record(3, "gradient check", ok and dt < 5.0, f"max relative error={worst:.2e} on 100 graphons, time={dt:.2f} s")
    assert ok and dt < 5.0


def test_04_symmetric_bipodal_optimum():
    r, dt = timed(maximize_entropy, ConstraintProblem(0.5, 0.117, pods=4, restarts=32, seed=42))
    ds = abs(r.entropy - h(0.7))
    l2 = l2_distance(r.graphon, named.symmetric_bipodal(0.5, 0.2))
    share = r.restarts_agreeing / max(r.restarts_converged, 1)
    ok = (r.classification == "symmetric_bipodal" and ds <= 1e-7 and l2 <= 1e-4
          and r.el_residual <= 1e-7 and share >= 0.9)
    record(4, "symmetric bipodal optimum", ok and dt < 30,
           f"{r.classification}, |dS|={ds:.1e}, l2={l2:.1e}, EL residual={r.el_residual:.1e}, "
           f"agree {r.restarts_agreeing}/{r.restarts_converged}, time={dt:.1f} s")
    assert ok and dt < 30


def test_05_bipodal_series():
    rep, dt = timed(verify_b11_series, 0.6, (0.04, 0.02, 0.01), restarts=16, seed=42)
    ratios = {c.name.split()[0] + c.name.split()[-1]: c.measured for c in rep.cases if "ratio" in c.name}
    ordered = all(c.status == "pass" for c in rep.cases if c.name.startswith("a<b<d"))
    detail = ", ".join(f"{k}={v:.2f}" for k, v in ratios.items())
    ok = rep.passed and ordered
    record(5, "bipodal series orders", ok and dt < 120, f"{detail}; ordering a<b<d, c<1/2 ok={ordered}; time={dt:.1f} s")
    assert ok and dt < 120


def test_06_tripodal_beats_symmetric():
    rep, dt = timed(verify_tripodal_beats_symmetric, 0.15, (0.02, 0.01, 0.005), default_a_grid(0.01, 0.08, 20))
    margins = {c.inputs["sigma"]: c.measured for c in rep.cases if c.name.startswith("margin at")}
    ratios = [c.measured for c in rep.cases if c.name.startswith("sigma^2 scaling")]
    ok = rep.passed
    record(6, "tripodal margin", ok and dt < 10,
           "best margins " + ", ".join(f"sigma={s:g}: {m:.3e}" for s, m in margins.items())
           + "; ratios " + ", ".join(f"{x:.2f}" for x in ratios) + f"; time={dt:.2f} s")
    assert ok and dt < 10


def test_07_e0_root():
    e0 = (3 - math.sqrt(3)) / 6

    def disc(e):
        return 3 * h_derivative(3, e) ** 2 - h_derivative(2, e) * h_derivative(4, e)

    (r0, lo, hi), dt = timed(lambda: (disc(e0), disc(0.1), disc(0.4)))
    ok = abs(r0) <= 1e-9 and lo > 0 and hi < 0 and abs(named.e0() - e0) <= 1e-15
    record(7, "e0 root", ok and dt < 1e-3,
           f"e0={e0:.8f}, residual={r0:.1e}, sign(0.1)={'+' if lo > 0 else '-'}, "
           f"sign(0.4)={'+' if hi > 0 else '-'}, time={dt * 1e3:.3f} ms")
    assert ok and dt < 1e-3


def test_08_f_expansion():
    def run():
        out = []
        for e in (0.10, 0.15, 0.20):
            want = h_derivative(4, e) / 12 - h_derivative(3, e) ** 2 / (4 * h_derivative(2, e))
            out.append((e, fit_f_coefficient(e, a_max=0.02), want))
        return out

    rows, dt = timed(run)
    rel = [abs(f - w) / abs(w) for _, f, w in rows]
    ok = max(rel) <= 0.05
    record(8, "F expansion coefficient", ok and dt < 1.0,
           ", ".join(f"e={e:.2f}: fit={f:.4f} want={w:.4f}" for e, f, w in rows) + f"; max rel={max(rel):.1e}")
    assert ok and dt < 1.0


def test_09_upper_bound():
    rep, dt = timed(verify_upper_bound, (0.48, 0.5, 0.52), None, 1000, 42)
    violations = sum(c.measured for c in rep.cases)
    accepted = [c.inputs["accepted"] for c in rep.cases]
    ok = rep.passed and violations == 0 and all(a == 1000 for a in accepted)
    record(9, "entropy upper bound", ok and dt < 30,
           f"violations={violations}, evaluated samples per e={accepted}, draws={[c.inputs['draws'] for c in rep.cases]}, time={dt:.1f} s")
    assert ok and dt < 30


def test_10_vary_v():
    rep, dt = timed(verify_vary_v)
    gaps = [c for c in rep.cases if c.name.startswith("gap at")]
    ratios = [c.measured for c in rep.cases if "ratio" in c.name]
    ok = rep.passed and len(gaps) == 100
    record(10, "vary-v inequality", ok and dt < 1.0,
           f"{len(gaps)} strict gaps, quartic ratios in [{min(ratios):.3f}, {max(ratios):.3f}], time={dt:.2f} s")
    assert ok and dt < 1.0


SIGMAS_11 = (0.05, 0.025)
T_11 = [0.6**3 - s**3 for s in SIGMAS_11]


def _scan_11():
    tpl = ConstraintProblem(0.5, 0.117, pods=2, restarts=8, seed=42)
    row = run_scan([0.6], T_11, tpl)
    near = run_scan([0.495, 0.5, 0.505], [0.115, 0.117, 0.119], tpl)
    return row, near


def test_11_order_parameter():
    (row, near), dt = timed(_scan_11)
    q = [r.order_q for r in row]
    ratio = q[0] / q[1] if q[1] else math.inf
    qmax_near = max(r.order_q for r in near)
    ok = all(x is not None and x > 0 for x in q) and 32 / 3 <= ratio <= 96 and qmax_near <= 1e-8
    record(11, "order parameter", ok and dt < 120,
           f"Q={q[0]:.3e}, {q[1]:.3e}, ratio={ratio:.1f} (window [10.7, 96]); max Q near (0.5, 0.117)={qmax_near:.1e}; "
           f"time={dt:.1f} s")
    assert ok and dt < 120


def test_12_determinism():
    opt = ["optimize", "--e", "0.5", "--t", "0.117", "--pods", "4", "--restarts", "32", "--seed", "42", "--json"]
    scan = ["scan", "--e-min", "0.6", "--e-max", "0.6", "--e-steps", "1", "--t-min", repr(T_11[0]),
            "--t-max", repr(T_11[1]), "--t-steps", "2", "--pods", "2", "--restarts", "8", "--seed", "42"]
    a1, a2 = cli_bytes(*opt), cli_bytes(*opt)
    b1, b2 = cli_bytes(*scan), cli_bytes(*scan, "--threads", "2")
    same_opt, same_scan = a1 == a2 and a1[0] == 0, b1 == b2 and b1[0] == 0
    # the library path gives the same bytes as the command line
    lib = gio.write_result(maximize_entropy(ConstraintProblem(0.5, 0.117, pods=4, restarts=32, seed=42)))
    same_lib = lib == a1[1]
    ok = same_opt and same_scan and same_lib
    record(12, "determinism", ok,
           f"optimize JSON identical={same_opt} ({len(a1[1])} bytes), scan CSV identical={same_scan}, "
           f"library==CLI={same_lib}")
    assert ok
