"""
Quadrature on the Riemann sphere.

Nodes live on the equal-area parametrization (t, phi) of P¹, where t = (|z|² - 1) / (|z|² + 1)
is the height on the unit sphere and phi = arg z. The normalized Fubini-Study measure
is dt dphi / 4π in these coordinates, so node weights are the t-rule weights times the
uniform phi weights and always sum to 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import legendre
from scipy import sparse

from .projective import area_jacobian, sphere_embedding


@dataclass(frozen=True)
class QuadratureSpec:
    grid: int = 96  # nodes per axis for pairings
    coarse_grid: int = 48  # second grid for the two-grid noise estimate
    rule: str = "gauss"  # t-rule: "gauss" (Gauss-Legendre) or "midpoint"


class SphereGrid:
    """Product grid in (t, phi) with Fubini-Study probability weights."""

    def __init__(self, n_theta: int, n_phi: Optional[int] = None, rule: str = "gauss") -> None:
        if n_theta < 2:
            raise ValueError(f"grid needs at least 2 nodes per axis, got {n_theta}")
        n_phi = n_theta if n_phi is None else n_phi
        if rule == "gauss":
            t, wt = legendre.leggauss(n_theta)
            wt = wt / 2.0
        elif rule == "midpoint":
            t = -1.0 + (2.0 * np.arange(n_theta) + 1.0) / n_theta
            wt = np.full(n_theta, 1.0 / n_theta)
        else:
            raise ValueError(f"unknown quadrature rule {rule!r}")
        self.rule = rule
        self.t = t
        self.phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
        self.shape = (n_theta, n_phi)
        T, PHI = np.meshgrid(t, self.phi, indexing="ij")
        radius = np.sqrt((1.0 + T) / (1.0 - T))
        self.nodes = (radius * np.exp(1j * PHI)).ravel()
        self.weights = np.repeat(wt / n_phi, n_phi)

    @classmethod
    def from_spec(cls, spec: QuadratureSpec, coarse: bool = False) -> "SphereGrid":
        return cls(spec.coarse_grid if coarse else spec.grid, rule=spec.rule)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def area_weights(self) -> np.ndarray:
        """Weights against Lebesgue area dA in the affine coordinate."""
        return self.weights * area_jacobian(self.nodes)

    def integrate(self, values: np.ndarray) -> complex:
        """Integral against the normalized Fubini-Study measure of node values."""
        return np.sum(self.weights * np.asarray(values), axis=-1)

    def integrate_function(self, fn: Callable[[np.ndarray], np.ndarray]) -> complex:
        return self.integrate(fn(self.nodes))

    def coordinates(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(t, phi) of arbitrary projective points; infinity maps to t = 1."""
        points = np.asarray(points, dtype=complex)
        _, _, s3 = sphere_embedding(points)
        phi = np.where(np.isfinite(points), np.angle(points), 0.0) % (2.0 * np.pi)
        return s3, phi

    def interpolation_matrix(self, points: np.ndarray) -> sparse.csr_matrix:
        """
        Sparse (len(points), size) bilinear interpolation operator in (t, phi).

        Periodic in phi; t is clamped to the outermost node rows near the poles.
        """
        points = np.asarray(points, dtype=complex).ravel()
        n_t, n_phi = self.shape
        t, phi = self.coordinates(points)
        i0 = np.clip(np.searchsorted(self.t, t) - 1, 0, n_t - 2)
        span = self.t[i0 + 1] - self.t[i0]
        ft = np.clip((t - self.t[i0]) / span, 0.0, 1.0)
        u = phi / (2.0 * np.pi) * n_phi - 0.5
        base = np.floor(u)
        fp = u - base
        j0 = base.astype(int) % n_phi
        j1 = (j0 + 1) % n_phi
        rows = np.repeat(np.arange(points.size), 4)
        cols = np.stack(
            [i0 * n_phi + j0, i0 * n_phi + j1, (i0 + 1) * n_phi + j0, (i0 + 1) * n_phi + j1],
            axis=1,
        ).ravel()
        vals = np.stack(
            [(1 - ft) * (1 - fp), (1 - ft) * fp, ft * (1 - fp), ft * fp], axis=1
        ).ravel()
        return sparse.csr_matrix((vals, (rows, cols)), shape=(points.size, self.size))


__all__ = ["QuadratureSpec", "SphereGrid"]
