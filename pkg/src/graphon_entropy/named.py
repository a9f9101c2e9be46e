"""Constructors for the special graphons of the edge-triangle model.

Every constructor checks the closed-form edge and triangle densities of its
output against the exact evaluators in :mod:`graphon_entropy.core` and raises
if they disagree by more than ``BUILD_TOL``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DomainError,
    MultipodalGraphon,
    edge_density,
    h,
    h_derivative,
    triangle_density,
)

BUILD_TOL = 1e-12


def _check(name: str, got: float, want: float) -> None:
    if not abs(got - want) <= BUILD_TOL:
        raise RuntimeError(f"{name}: closed form {want!r} disagrees with evaluation {got!r}")


def _prob(name: str, x: float, lo_open=False, hi_open=False) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0 or x > 1 or (lo_open and x == 0) or (hi_open and x == 1):
        raise DomainError(f"{name} = {x!r} is not a valid probability")
    return x


def constant_graphon(p: float) -> MultipodalGraphon:
    p = _prob("p", p)
    return MultipodalGraphon([1.0], [[p]])


def symmetric_bipodal(e: float, sigma: float) -> MultipodalGraphon:
    """Two half-pods with value ``e - sigma`` inside and ``e + sigma`` across."""
    e = _prob("e", e)
    sigma = float(sigma)
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    if sigma > min(e, 1.0 - e):
        raise DomainError(f"sigma = {sigma!r} exceeds min(e, 1-e) = {min(e, 1 - e)!r}")
    lo, hi = max(e - sigma, 0.0), min(e + sigma, 1.0)
    g = MultipodalGraphon([0.5, 0.5], [[lo, hi], [hi, lo]])
    _check("symmetric_bipodal edge", edge_density(g), e)
    _check("symmetric_bipodal triangle", triangle_density(g), e**3 - sigma**3)
    return g


def symmetric_bipodal_entropy(e: float, sigma: float) -> float:
    return 0.5 * (h(e + sigma) + h(e - sigma))


def bipodal(a: float, b: float, c: float, d: float) -> MultipodalGraphon:
    """Pods of mass ``c`` and ``1 - c``; ``a``, ``b`` on the diagonal blocks, ``d`` across."""
    a, b, d = _prob("a", a), _prob("b", b), _prob("d", d)
    c = float(c)
    if not 0 < c < 1:
        raise DomainError(f"pod mass c = {c!r} must lie in (0, 1)")
    g = MultipodalGraphon([c, 1.0 - c], [[a, d], [d, b]])
    eps = c * c * a + (1 - c) ** 2 * b + 2 * c * (1 - c) * d
    _check("bipodal edge", edge_density(g), eps)
    return g


def bipodal_series_params(e: float, sigma: float) -> tuple[float, float, float, float]:
    """Leading-order series for the optimal bipodal graphon just below ``t = e^3``."""
    e, sigma = float(e), float(sigma)
    if not e > 0.5:
        raise DomainError(f"bipodal series needs e > 1/2, got {e!r}")
    if not 0 < e < 1:
        raise DomainError(f"e = {e!r} outside (0, 1)")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    k = 2 * e - 1
    h1, h2 = h_derivative(1, e), h_derivative(2, e)
    a = 1 - e - sigma
    b = e - sigma**2 / k
    c = sigma / k - 2 * sigma**2 / k
    d = e + sigma + sigma**2 * (h1 - (e - 0.5) * h2) / (e * h1)
    return a, b, c, d


def bipodal_series(e: float, sigma: float) -> MultipodalGraphon:
    a, b, c, d = bipodal_series_params(e, sigma)
    for name, v in (("a", a), ("b", b), ("d", d)):
        if not 0 < v < 1:
            raise DomainError(f"series value {name} = {v!r} outside (0, 1); sigma too large")
    if not 0 < c < 1:
        raise DomainError(f"series pod mass c = {c!r} outside (0, 1); sigma too large")
    return bipodal(a, b, c, d)


# ---------------------------------------------------------------------------
# tripodal construction below t = e^3


@dataclass(frozen=True)
class TripodalSpec:
    e: float
    sigma: float
    A: float
    B: float
    c: float

    def block_values(self) -> dict:
        e, A, B, c = self.e, self.A, self.B, self.c
        return {
            "inner_diag": e - A + B * (1 - c),
            "inner_cross": e + A + B * (1 - c),
            "inner_outer": e - c * B,
            "outer": e + c * c * B / (1 - c),
        }


def tripodal_b(e: float, A: float) -> float:
    """The quadratic choice ``B = -H'''(e) / (2 H''(e)) A^2``."""
    return -h_derivative(3, e) / (2 * h_derivative(2, e)) * A * A


def tripodal_counterexample(e: float, sigma: float, A: float, B: float | None = None):
    """Three-pod graphon ``e - cA v1 v1 + cB v2 v2`` with triangle density ``e^3 - sigma^3``.

    Pods have masses ``(c/2, c/2, 1-c)`` with ``c = sigma (A^3 - B^3)^(-1/3)``.
    ``B`` defaults to :func:`tripodal_b`.  Returns ``(graphon, spec)``.
    """
    e = _prob("e", e, lo_open=True, hi_open=True)
    sigma, A = float(sigma), float(A)
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    if not A > 0:
        raise DomainError(f"A must be positive, got {A!r}")
    B = tripodal_b(e, A) if B is None else float(B)
    if not B >= 0:
        raise DomainError(f"B = {B!r} must be nonnegative")
    if not A > B:
        raise DomainError(f"need A > B, got A = {A!r}, B = {B!r}")
    c = sigma * (A**3 - B**3) ** (-1.0 / 3.0)
    if not 0 < c < 1:
        raise DomainError(f"pod scale c = {c!r} must lie in (0, 1); increase A or decrease sigma")
    spec = TripodalSpec(e=e, sigma=sigma, A=A, B=B, c=c)
    vals = spec.block_values()
    for name, v in vals.items():
        if not 0 <= v <= 1:
            raise DomainError(f"block value {name} = {v!r} outside [0, 1]")
    x, y, z, w = vals["inner_diag"], vals["inner_cross"], vals["inner_outer"], vals["outer"]
    g = MultipodalGraphon(
        [c / 2, c / 2, 1 - c],
        [[x, y, z], [y, x, z], [z, z, w]],
    )
    _check("tripodal edge", edge_density(g), e)
    _check("tripodal triangle", triangle_density(g), e**3 - sigma**3)
    return g, spec


def f_of_ab(e: float, A: float, B: float) -> float:
    """``[H(e+A+B) + H(e-A+B) - 2H(e) - 2B H'(e)] / (A^3 - B^3)^(2/3)``."""
    e, A, B = float(e), float(A), float(B)
    if not A > B:
        raise DomainError(f"F(A, B) needs A > B, got A = {A!r}, B = {B!r}")
    if B < 0:
        raise DomainError(f"F(A, B) needs B >= 0, got {B!r}")
    for u in (e, e + A + B, e - A + B):
        if not 0 < u < 1:
            raise DomainError(f"argument {u!r} of H outside (0, 1)")
    num = h(e + A + B) + h(e - A + B) - 2 * h(e) - 2 * B * h_derivative(1, e)
    return num / (A**3 - B**3) ** (2.0 / 3.0)


def f_expansion_coefficient(e: float) -> float:
    """A^2 coefficient of ``F(A, B(A)) - H''(e)``: ``H''''/12 - H'''^2 / (4 H'')``."""
    h2, h3, h4 = (h_derivative(n, e) for n in (2, 3, 4))
    return h4 / 12 - h3 * h3 / (4 * h2)


def e0_discriminant(e: float) -> float:
    """``3 H'''(e)^2 - H''(e) H''''(e)``; positive below ``e0`` and negative above."""
    h2, h3, h4 = (h_derivative(n, e) for n in (2, 3, 4))
    return 3 * h3 * h3 - h2 * h4


def e0() -> float:
    """Root ``(3 - sqrt 3)/6`` of ``6e^2 - 6e + 1``, checked against the entropy condition."""
    root = (3.0 - math.sqrt(3.0)) / 6.0
    resid = abs(e0_discriminant(root))
    if resid > 1e-9:
        raise RuntimeError(f"e0 entropy condition residual {resid!r} exceeds 1e-9")
    return root


def embed(g: MultipodalGraphon, pods: int) -> MultipodalGraphon:
    """Represent ``g`` with exactly ``pods`` pods by halving its largest pods."""
    if pods < g.pods:
        raise DomainError(f"cannot embed a {g.pods}-pod graphon into {pods} pods")
    while g.pods < pods:
        g = g.split_pod(int(np.argmax(g.c)))
    return g
