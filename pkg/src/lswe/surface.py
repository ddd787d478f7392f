"""Pointwise coefficients of the level-set wave operator.

For a potential V(q) the operator is ``L = Laplacian - G d2/dnu2 + TrH d/dnu``
with ``G = |grad V|^2`` and ``TrH`` the Laplacian of V.  Everything here is
derived from one third-order jet of V per point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import StationaryPoint
from .expr import PotentialExpr, parse
from .taylor import JetBatch, derive_batch

DEFAULT_STATIONARY_THRESHOLD = 1e-10


@dataclass(frozen=True)
class PotentialSurface:
    expr: PotentialExpr
    stationary_threshold: float = DEFAULT_STATIONARY_THRESHOLD

    def __post_init__(self):
        if not self.stationary_threshold > 0.0:
            raise ValueError("stationary_threshold must be positive")

    @classmethod
    def from_source(cls, source: str, dimension: int, **kwargs) -> "PotentialSurface":
        return cls(parse(source, dimension), **kwargs)

    @property
    def dimension(self) -> int:
        return self.expr.dimension

    @property
    def source(self) -> str:
        return self.expr.source

    def value(self, point: Sequence[float]) -> float:
        return self.expr(point)

    def jets(self, points, order: int = 2) -> JetBatch:
        return derive_batch(self.expr, points, order)

    def fields(self, points, order: int = 2, *, check: bool = True) -> "GaugeBatch":
        """Batched gauge quantities at each row of ``points``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        jet = self.jets(pts, max(order, 1))
        g = jet.gradient
        G = np.einsum("pi,pi->p", g, g)
        if check:
            bad = np.flatnonzero(~(G >= self.stationary_threshold))
            if bad.size:
                p = bad[0]
                raise StationaryPoint(pts[p], G[p], self.stationary_threshold)
        return GaugeBatch(pts, jet, G)


@dataclass(frozen=True)
class GaugeBatch:
    points: np.ndarray
    jet: JetBatch
    G: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return self.jet.value

    @property
    def gradient(self) -> np.ndarray:
        return self.jet.gradient

    @property
    def hessian(self) -> np.ndarray:
        return self.jet.hessian

    @property
    def trace_H(self) -> np.ndarray:
        return np.trace(self.jet.hessian, axis1=1, axis2=2)

    @property
    def script_H(self) -> np.ndarray:
        # H_k = sum_i g_i H_ik
        return np.einsum("pi,pik->pk", self.jet.gradient, self.jet.hessian)

    def script_H_jacobian(self) -> np.ndarray:
        """d H_k / d q^j = sum_i (H_ij H_ik + g_i T_ijk); symmetric in (j, k)."""
        H = self.jet.hessian
        return np.einsum("pij,pik->pjk", H, H) + np.einsum(
            "pi,pijk->pjk", self.jet.gradient, self.jet.third
        )

    def gauge(self, p: int = 0) -> "SurfaceGauge":
        jet = self.jet
        if jet.order < 2:
            raise ValueError("a SurfaceGauge needs at least second-order jets")
        g = jet.gradient[p]
        H = jet.hessian[p]
        scr = g @ H
        return SurfaceGauge(
            point=self.points[p].copy(),
            value=float(jet.value[p]),
            gradient=g,
            hessian=H,
            G=float(self.G[p]),
            trace_H=float(np.trace(H)),
            script_H=scr,
            dG=2.0 * scr,
            third=None if jet.third is None else jet.third[p],
        )


@dataclass(frozen=True)
class SurfaceGauge:
    """All LSWE coefficients at a single point."""

    point: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    G: float
    trace_H: float
    script_H: np.ndarray
    dG: np.ndarray
    third: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not np.array_equal(self.dG, 2.0 * self.script_H):
            raise AssertionError("dG must equal 2 * script_H")

    @property
    def dimension(self) -> int:
        return self.gradient.shape[0]

    @property
    def gamma(self) -> float:
        """|det g_IJ| of the (N+1)-metric, i.e. 1/G."""
        return 1.0 / self.G

    def script_H_jacobian(self) -> np.ndarray:
        if self.third is None:
            raise ValueError("third derivatives of V are required")
        H = self.hessian
        return H @ H + np.einsum("i,ijk->jk", self.gradient, self.third)

    def inv_G_gradient(self) -> np.ndarray:
        """d(1/G)/dq^k = -2 H_k / G^2."""
        return -2.0 * self.script_H / self.G**2

    def inv_G_hessian(self) -> np.ndarray:
        """d2(1/G)/dq^j dq^k = -2 J_jk / G^2 + 8 H_j H_k / G^3."""
        G = self.G
        s = self.script_H
        return -2.0 * self.script_H_jacobian() / G**2 + 8.0 * np.outer(s, s) / G**3


def gauge(surface: PotentialSurface, point: Sequence[float]) -> SurfaceGauge:
    """Evaluate every pointwise coefficient from a single order-3 jet.

    Raises :class:`StationaryPoint` when G(point) is below the surface's
    stationary threshold.
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (surface.dimension,):
        raise ValueError(f"point must have {surface.dimension} coordinates")
    return surface.fields(point[None, :], order=3).gauge(0)


def first_order_coefficients(g: SurfaceGauge) -> tuple[np.ndarray, np.ndarray]:
    """Contravariant and covariant first-order coefficients A^I and A_I.

    ``A^i = A_i = H_i / G`` for the spatial indices; the nu component is
    ``A^nu = TrH`` and ``A_nu = -TrH / G``.  The zeroth-order coefficient
    of the operator vanishes.
    """
    spatial = g.script_H / g.G
    upper = np.append(spatial, g.trace_H)
    lower = np.append(spatial, -g.trace_H / g.G)
    return upper, lower
