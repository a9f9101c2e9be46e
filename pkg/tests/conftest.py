import math

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from graphon_entropy import MultipodalGraphon

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

import acceptance_log


def random_graphon(rng, m=None, max_pods=6, lo=0.0, hi=1.0):
    m = int(rng.integers(1, max_pods + 1)) if m is None else m
    c = rng.dirichlet(np.ones(m)) + 1e-3
    c /= math.fsum(c.tolist())
    P = rng.uniform(lo, hi, size=(m, m))
    P = np.triu(P) + np.triu(P, 1).T
    return MultipodalGraphon(c, P)


@st.composite
def graphons(draw, min_pods=1, max_pods=5, lo=0.0, hi=1.0):
    m = draw(st.integers(min_pods, max_pods))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=m, max_size=m))
    c = np.array(raw) / math.fsum(raw)
    vals = draw(st.lists(st.floats(lo, hi), min_size=m * (m + 1) // 2, max_size=m * (m + 1) // 2))
    P = np.empty((m, m))
    iu = np.triu_indices(m)
    P[iu] = vals
    P.T[iu] = vals
    return MultipodalGraphon(c, P)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
