"""Hadamard-type necessary conditions for a strong Huygens' principle.

Condition one is evaluated twice: from its sorted closed form in G, TrH and
H_k, and by assembling ``C - div(A)/2 - A.A/4 - (N-1)/(4N) R`` from the
covariant divergence, the contraction A_I A^I and the scalar curvature.
Condition two is the covariant divergence of
``K_IJ = (d_J A_I - d_I A_J) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import christoffels, curvature_from_gauge
from .surface import PotentialSurface, SurfaceGauge, first_order_coefficients, gauge

SATISFIED_RTOL = 1e-9
RICHARDSON_STEP = 1e-4


@dataclass(frozen=True)
class ConditionOneTerms:
    trace_term: float  # (TrH)^2 / (4G)
    divergence_term: float  # -(sum_i dH_i/dq^i) (1 + (N-1)/N) / (2G)
    script_H_term: float  # (sum_i H_i^2) (5 + 6(N-1)/N) / (4G^2)

    def total(self) -> float:
        return self.trace_term + self.divergence_term + self.script_H_term

    def scale(self) -> float:
        return max(abs(self.trace_term), abs(self.divergence_term), abs(self.script_H_term))


@dataclass(frozen=True)
class ConditionOne:
    residual: float
    terms: ConditionOneTerms
    assembled: float
    zeroth_order: float  # C
    half_divergence: float  # -(1/2) nabla_I A^I
    quarter_contraction: float  # -(1/4) A_I A^I
    curvature_part: float  # -(N-1)/(4N) R

    @property
    def satisfied(self) -> bool:
        return abs(self.residual) < SATISFIED_RTOL * max(1.0, self.terms.scale())


@dataclass(frozen=True)
class ConditionTwo:
    spatial: np.ndarray
    nu: float
    scale: float = 1.0

    @property
    def satisfied(self) -> bool:
        tol = SATISFIED_RTOL * max(1.0, self.scale)
        return bool(np.all(np.abs(self.spatial) < tol) and abs(self.nu) < tol)


@dataclass(frozen=True)
class HuygensReport:
    point: np.ndarray
    condition1_residual: float
    condition1_terms: ConditionOneTerms
    condition1_assembled: float
    condition2_residual_spatial: np.ndarray
    condition2_residual_nu: float
    verdict: tuple  # (condition one satisfied, condition two satisfied)


def condition_one_from_gauge(g: SurfaceGauge) -> ConditionOne:
    N = g.dimension
    G = g.G
    s = g.script_H
    J = g.script_H_jacobian()
    ratio = (N - 1) / N
    sum_dH = float(np.trace(J))
    sum_H2 = float(s @ s)
    terms = ConditionOneTerms(
        trace_term=g.trace_H**2 / (4.0 * G),
        divergence_term=-sum_dH * (1.0 + ratio) / (2.0 * G),
        script_H_term=sum_H2 * (5.0 + 6.0 * ratio) / (4.0 * G**2),
    )

    # assembled route
    A_up, A_low = first_order_coefficients(g)
    gam = christoffels(g)
    # d_i A^i with A^i = H_i / G
    div_spatial = float(np.sum(np.diag(J) / G - 2.0 * s * s / G**2))
    # nabla_nu A^nu = sum_j Gamma^nu_{nu j} A^j (A^nu has no nu dependence)
    div_nu = float(gam.nu_i_up_nu @ A_up[:N])
    half_div = -0.5 * (div_spatial + div_nu)
    quarter = -0.25 * float(A_low @ A_up)
    R = curvature_from_gauge(g).scalar_R
    curv = -ratio / 4.0 * R
    C = 0.0
    assembled = C + half_div + quarter + curv
    return ConditionOne(terms.total(), terms, assembled, C, half_div, quarter, curv)


def condition_one(surface: PotentialSurface, point: Sequence[float]) -> ConditionOne:
    """First necessary condition; zero would be required for a Huygens operator."""
    return condition_one_from_gauge(gauge(surface, point))


def _trace_over_G_derivatives(surface: PotentialSurface, point: np.ndarray, h: float):
    """Gradient and Laplacian-diagonal of w = -TrH/G.

    The gradient is exact from third-order jets.  The second derivatives
    would need fourth-order jets, so they are central differences of the
    exact gradient at q +- h e_j and q +- h/2 e_j, Richardson-extrapolated.
    """
    N = surface.dimension
    offsets = [np.zeros(N)]
    for j in range(N):
        for step in (h, -h, h / 2, -h / 2):
            e = np.zeros(N)
            e[j] = step
            offsets.append(e)
    pts = point[None, :] + np.array(offsets)
    batch = surface.fields(pts, order=3)
    H = batch.hessian
    trH = np.trace(H, axis1=1, axis2=2)
    G = batch.G
    dtrH = np.einsum("pjii->pj", batch.jet.third)
    dG = 2.0 * batch.script_H
    # d_j(-TrH/G) = -dTrH_j/G + TrH dG_j / G^2
    dw = -dtrH / G[:, None] + trH[:, None] * dG / G[:, None] ** 2

    grad = dw[0]
    second = np.empty(N)
    for j in range(N):
        base = 1 + 4 * j
        d_h = (dw[base, j] - dw[base + 1, j]) / (2 * h)
        d_h2 = (dw[base + 2, j] - dw[base + 3, j]) / h
        second[j] = (4.0 * d_h2 - d_h) / 3.0
    return grad, second


def condition_two(
    surface: PotentialSurface, point: Sequence[float], *, step: float = RICHARDSON_STEP
) -> ConditionTwo:
    """Covariant divergence of K_IJ.

    The spatial components cancel identically (K_ij = 0, and each surviving
    Christoffel term multiplies a vanishing K component), so they are
    returned as exact zeros.  The nu component is
    ``sum_j (1/2)(d_j^2 + (H_j/G) d_j)(-TrH/G)``.
    """
    point = np.asarray(point, dtype=float)
    g = gauge(surface, point)
    grad, second = _trace_over_G_derivatives(surface, point, step)
    nu = float(np.sum(0.5 * (second + g.script_H / g.G * grad)))
    scale = float(np.max(np.abs(np.concatenate([second, g.script_H / g.G * grad]))))
    return ConditionTwo(np.zeros(surface.dimension), nu, scale)


def huygens_report(surface: PotentialSurface, point: Sequence[float]) -> HuygensReport:
    point = np.asarray(point, dtype=float)
    one = condition_one(surface, point)
    two = condition_two(surface, point)
    return HuygensReport(
        point=point,
        condition1_residual=one.residual,
        condition1_terms=one.terms,
        condition1_assembled=one.assembled,
        condition2_residual_spatial=two.spatial,
        condition2_residual_nu=two.nu,
        verdict=(one.satisfied, two.satisfied),
    )
