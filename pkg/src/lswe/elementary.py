"""Leading (singular) part U of the elementary solution and its adjoint check.

Along a geodesic from the base point (q0, nu0) to (q, nu),

    U = (1 / (sqrt(2) pi)) (G(q) / G(q0))^(1/2) exp(-(1/2) int TrH/G dnu),

with ``(G/G0)^(1/4)`` the discriminant factor to linear order.  The path
integral is a composite trapezoid over the path samples with
``dnu = nu' ds``.  The tail term of the elementary solution is not
computed; the general-dimension prefactor is not applied either, the
constant above is used for every N.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .geodesics import GeodesicPath, connect
from .surface import PotentialSurface

PREFACTOR = 1.0 / (math.sqrt(2.0) * math.pi)
DEFAULT_STENCIL_STEP = 1e-3
ADJOINT_SHOOT_TOL = 1e-12
ADJOINT_PATH_STEP = 2e-3


@dataclass(frozen=True)
class ElementaryPart:
    base: np.ndarray
    endpoint: np.ndarray
    discriminant_factor: float
    path_integral: float
    U: float

    def assembled(self) -> float:
        return PREFACTOR * self.discriminant_factor**2 * math.exp(-0.5 * self.path_integral)


def singular_part(surface: PotentialSurface, path: GeodesicPath) -> ElementaryPart:
    """U along ``path`` (any kind: shooting, steepest-ascent, hyperplane)."""
    if path.error is not None:
        raise path.error
    batch = surface.fields(path.q, order=2)
    G = batch.G
    integrand = batch.trace_H / G * path.nu_dot
    integral = float(trapezoid(integrand, path.s)) if path.s.size > 1 else 0.0
    ratio = float(G[-1] / G[0])
    disc = ratio**0.25
    U = PREFACTOR * math.sqrt(ratio) * math.exp(-0.5 * integral)
    base = np.append(path.q[0], path.nu[0])
    end = np.append(path.q[-1], path.nu[-1])
    return ElementaryPart(base, end, disc, integral, U)


def _central_weights(order: int):
    # 4th-order central stencils on offsets -2..2
    if order == 1:
        return np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    return np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


@dataclass(frozen=True)
class AdjointResidual:
    value: float
    U: float
    U_q: float
    U_nu: float
    U_qq: float
    U_nunu: float
    stencil_step: float


def adjoint_residual_report(surface: PotentialSurface, base: Sequence[float],
                            sample: Sequence[float],
                            stencil_step: float = DEFAULT_STENCIL_STEP, *,
                            path_step: float = ADJOINT_PATH_STEP,
                            tol: float = ADJOINT_SHOOT_TOL, max_iters: int = 50,
                            workers: int = 1) -> AdjointResidual:
    """``P U = g^IJ nabla_I nabla_J U - nabla_I (A^I U)`` at ``sample`` (N = 1).

    U is built by shooting from ``base`` to each node of a 5 x 5 stencil
    around ``sample``.  The metric is diagonal, so only the two axes of the
    stencil enter; corner nodes are not shot.  Derivatives are fourth-order
    central differences with spacing ``stencil_step``.  In (q, nu)
    coordinates the operator reduces to

        U_qq - G U_nunu - (H/G) U_q - d_q(A^q U) - TrH U_nu + (H/G) A^q U

    with ``A^q = H/G`` and ``H = g H_11``.
    """
    if surface.dimension != 1:
        raise ValueError("the adjoint residual is implemented for one coordinate")
    base = np.asarray(base, dtype=float)
    sample = np.asarray(sample, dtype=float)
    h = float(stencil_step)
    if not h > 0:
        raise ValueError("stencil_step must be positive")

    center_path = connect(surface, base, sample, max_iters=max_iters, tol=tol, step=path_step)
    v0 = np.array([center_path.q_dot[0, 0], center_path.nu_dot[0]])
    offsets = [(k * h, 0.0) for k in (-2, -1, 1, 2)] + [(0.0, k * h) for k in (-2, -1, 1, 2)]

    def shoot(off):
        target = sample + np.asarray(off)
        path = connect(surface, base, target, max_iters=max_iters, tol=tol, step=path_step,
                       initial_velocity=v0)
        return singular_part(surface, path).U

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(shoot, offsets))
    else:
        values = [shoot(o) for o in offsets]
    U0 = singular_part(surface, center_path).U
    uq = np.array(values[0:2] + [U0] + values[2:4])
    un = np.array(values[4:6] + [U0] + values[6:8])
    w1 = _central_weights(1)
    w2 = _central_weights(2)
    U_q = float(w1 @ uq) / h
    U_qq = float(w2 @ uq) / h**2
    U_nu = float(w1 @ un) / h
    U_nunu = float(w2 @ un) / h**2

    g = surface.fields(sample[None, :1], order=3).gauge(0)
    G = g.G
    s = float(g.script_H[0])
    J = float(g.script_H_jacobian()[0, 0])
    A = s / G
    dA = J / G - 2.0 * s * s / G**2
    box = U_qq - G * U_nunu - A * U_q
    div = dA * U0 + A * U_q + g.trace_H * U_nu - A * A * U0
    return AdjointResidual(box - div, U0, U_q, U_nu, U_qq, U_nunu, h)


def adjoint_residual(surface: PotentialSurface, base: Sequence[float], sample: Sequence[float],
                     stencil_step: float = DEFAULT_STENCIL_STEP, **kwargs) -> float:
    return adjoint_residual_report(surface, base, sample, stencil_step, **kwargs).value
