"""Metric, connection and curvature of the (N+1)-dimensional LSWE manifold.

Coordinates are ``(q^1, ..., q^N, nu)`` with the diagonal metric
``g_IJ = diag(1, ..., 1, -1/G(q))``.  Because only the last diagonal entry
varies, and only with q, every nonvanishing Christoffel symbol and curvature
component is a closed-form function of G, the vector ``H_k = (1/2) dG/dq^k``
and its Jacobian.  Index N (zero-based) denotes nu throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .surface import PotentialSurface, SurfaceGauge, gauge


@dataclass(frozen=True)
class MetricAtPoint:
    covariant: np.ndarray  # diagonal entries
    contravariant: np.ndarray
    gamma: float

    def covariant_matrix(self) -> np.ndarray:
        return np.diag(self.covariant)

    def contravariant_matrix(self) -> np.ndarray:
        return np.diag(self.contravariant)


@dataclass(frozen=True)
class ChristoffelSet:
    """The two nonvanishing families of second-kind Christoffel symbols."""

    nu_nu_up_i: np.ndarray  # Gamma^i_{nu nu} = -H_i / G^2
    nu_i_up_nu: np.ndarray  # Gamma^nu_{nu i} = Gamma^nu_{i nu} = -H_i / G

    @property
    def dimension(self) -> int:
        return self.nu_nu_up_i.shape[0]

    def full(self) -> np.ndarray:
        """Dense array ``Gamma[I, J, K] = Gamma^I_{JK}`` over N+1 indices."""
        n = self.dimension
        out = np.zeros((n + 1, n + 1, n + 1))
        out[:n, n, n] = self.nu_nu_up_i
        out[n, n, :n] = self.nu_i_up_nu
        out[n, :n, n] = self.nu_i_up_nu
        return out


@dataclass(frozen=True)
class CurvatureReport:
    riemann_i_nu_nu_l: np.ndarray  # R_{i nu nu}^l, indexed [i, l]
    riemann_nu_j_k_nu: np.ndarray  # R_{nu j k}^nu, indexed [j, k]
    ricci_nu_nu: float
    ricci_jk: np.ndarray
    scalar_R: float
    scalar_R_closed: float  # sum_j (-6 H_j^2 / G^2 + 2 dH_j/dq^j / G)

    def riemann_j_nu_k_nu(self) -> np.ndarray:
        """R_{j nu k}^nu, the first-pair swap of ``riemann_nu_j_k_nu``."""
        return -self.riemann_nu_j_k_nu


def metric(g: SurfaceGauge) -> MetricAtPoint:
    n = g.dimension
    cov = np.ones(n + 1)
    con = np.ones(n + 1)
    cov[n] = -1.0 / g.G
    con[n] = -g.G
    return MetricAtPoint(cov, con, 1.0 / g.G)


def christoffels(g: SurfaceGauge) -> ChristoffelSet:
    return ChristoffelSet(-g.script_H / g.G**2, -g.script_H / g.G)


def curvature_from_gauge(g: SurfaceGauge) -> CurvatureReport:
    G = g.G
    s = g.script_H
    J = g.script_H_jacobian()
    df = g.inv_G_gradient()  # d(1/G)
    d2f = g.inv_G_hessian()
    dfdf = np.outer(df, df)

    r_inn = 0.5 * d2f - 0.25 * G * dfdf
    # d_j (G d_k (1/G)) = 2 H_j d_k(1/G) + G d_jk(1/G)
    d_G_df = 2.0 * np.outer(s, df) + G * d2f
    r_njk = -0.5 * d_G_df - 0.25 * G**2 * dfdf
    # enforce the exact (j, k) symmetry the analytic form has
    r_njk = 0.5 * (r_njk + r_njk.T)

    ricci_nn = float(np.trace(r_inn))
    ricci = r_njk
    scalar = float(np.trace(ricci) - G * ricci_nn)
    closed = float(np.sum(-6.0 * s * s / G**2 + 2.0 * np.diag(J) / G))
    return CurvatureReport(r_inn, r_njk, ricci_nn, ricci, scalar, closed)


def curvature(surface: PotentialSurface, point: Sequence[float]) -> CurvatureReport:
    """Riemann, Ricci and scalar curvature at ``point``.

    Raises :class:`StationaryPoint` if G(point) is below threshold.
    """
    return curvature_from_gauge(gauge(surface, point))
