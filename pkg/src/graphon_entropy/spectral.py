"""Eigendecomposition of multipodal kernels.

The kernel ``g - center`` acts on L2([0,1]); restricted to pod-constant
functions it is the matrix ``(P - center J) D`` with ``D = diag(c)``, which is
self-adjoint for the inner product weighted by ``c``.  We diagonalize the
symmetric matrix ``sqrt(D) (P - center J) sqrt(D)`` and map eigenvectors back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MultipodalGraphon, _fsum, edge_density, triangle_density


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigvec_pod_values: np.ndarray  # column j is v_j evaluated on each pod
    center: float

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "eigvec_pod_values": self.eigvec_pod_values.tolist(),
            "center": self.center,
        }

    def nonzero(self, tol: float = 1e-12) -> np.ndarray:
        return self.eigenvalues[np.abs(self.eigenvalues) > tol]


def spectrum(g: MultipodalGraphon, center: float = 0.0) -> Spectrum:
    s = np.sqrt(g.c)
    K = s[:, None] * (g.p - center) * s[None, :]
    lam, U = np.linalg.eigh(0.5 * (K + K.T))
    # descending |lambda|, ties toward the larger signed value
    order = np.lexsort((-lam, -np.round(np.abs(lam), 13)))
    lam = lam[order]
    V = U[:, order] / s[:, None]
    # sign convention: the entry of largest magnitude (first on ties) is positive
    lead = np.argmax(np.round(np.abs(V), 12), axis=0)
    V = V * np.where(V[lead, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return Spectrum(eigenvalues=lam, eigvec_pod_values=V, center=float(center))


def reconstruct(spec: Spectrum) -> np.ndarray:
    V = spec.eigvec_pod_values
    return spec.center + (V * spec.eigenvalues) @ V.T


def triangle_identity_terms(g: MultipodalGraphon) -> dict:
    """Pieces of ``tau = eps^3 + 3 eps sum_i c_i (d_i - eps)^2 + sum_j lambda_j^3``."""
    eps = edge_density(g)
    d = g.degrees()
    lam = spectrum(g, eps).eigenvalues
    return {
        "edge_cubed": eps**3,
        "degree_term": 3.0 * eps * _fsum(g.c * (d - eps) ** 2),
        "cubic_eigen_sum": math.fsum((lam**3).tolist()),
    }


def triangle_identity_residual(g: MultipodalGraphon) -> float:
    parts = triangle_identity_terms(g)
    return abs(triangle_density(g) - math.fsum(parts.values()))
