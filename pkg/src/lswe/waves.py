"""Fields on (q, nu) and the action of the level-set wave operator on them.

A field is described by how its derivatives are obtained:

* :class:`ProgressingField` -- ``F(V(q) + sign*(nu - nu0))`` for a profile F;
  ``sign=-1`` is the progressing wave with phase V - nu.
* :class:`IVPField` -- the two-profile superposition
  ``(1/2)[F(V+t) + F(V-t) + D(V+t) - D(V-t)]``, ``t = nu - nu0``.
* :class:`CustomField` -- an expression in N+1 variables whose last
  variable is nu, differentiated with jets.

All q-derivatives come from jets of V, all profile derivatives from the
profile itself; nothing is finite-differenced.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .expr import PotentialExpr, parse
from .surface import GaugeBatch, PotentialSurface, SurfaceGauge
from .taylor import derive_batch


# ---------------------------------------------------------------- profiles


class WaveProfile:
    """A function of one real variable with value, first and second derivative."""

    def value(self, x):
        raise NotImplementedError

    def first(self, x):
        raise NotImplementedError

    def second(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def scaled(self, factor: float) -> "WaveProfile":
        return ScaledProfile(self, float(factor))

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PolynomialProfile(WaveProfile):
    """``sum_k coeffs[k] * x**k``."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs) or (0.0,))

    def value(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def first(self, x):
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs, 1))

    def second(self, x):
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.coeffs, 2))

    def describe(self) -> dict:
        return {"kind": "poly", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class GaussianProfile(WaveProfile):
    """``amplitude * exp(-(x - center)^2 / (2 width^2))``."""

    center: float = 0.0
    width: float = 0.05
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("gaussian width must be positive")

    def value(self, x):
        z = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.amplitude * np.exp(-0.5 * z * z)

    def first(self, x):
        z = (np.asarray(x, dtype=float) - self.center) / self.width
        return -self.amplitude * z / self.width * np.exp(-0.5 * z * z)

    def second(self, x):
        z = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.amplitude * (z * z - 1.0) / self.width**2 * np.exp(-0.5 * z * z)

    def describe(self) -> dict:
        return {"kind": "gauss", "center": self.center, "width": self.width,
                "amplitude": self.amplitude}


class TabulatedProfile(WaveProfile):
    """Piecewise cubic Hermite interpolant of tabulated values and slopes."""

    def __init__(self, x: Sequence[float], values: Sequence[float], slopes: Sequence[float]):
        self.x = np.asarray(x, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.slopes = np.asarray(slopes, dtype=float)
        self._spline = CubicHermiteSpline(self.x, self.values, self.slopes)
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)

    def value(self, x):
        return self._spline(x)

    def first(self, x):
        return self._d1(x)

    def second(self, x):
        return self._d2(x)

    def describe(self) -> dict:
        return {"kind": "tab", "x": self.x.tolist(), "values": self.values.tolist(),
                "slopes": self.slopes.tolist()}


@dataclass(frozen=True)
class ScaledProfile(WaveProfile):
    base: WaveProfile
    factor: float

    def value(self, x):
        return self.factor * self.base.value(x)

    def first(self, x):
        return self.factor * self.base.first(x)

    def second(self, x):
        return self.factor * self.base.second(x)

    def describe(self) -> dict:
        return {"kind": "scaled", "factor": self.factor, "base": self.base.describe()}


ZERO_PROFILE = PolynomialProfile((0.0,))


def parse_profile(spec: str, *, pulse_width: float = 0.05) -> WaveProfile:
    """Build a profile from ``kind:args`` text.

    ``poly:c0,c1,...``  ascending coefficients
    ``gauss:center,width[,amplitude]``
    ``delta:center``    gaussian of width ``pulse_width`` (mollified delta front)
    ``zero``
    A leading ``-`` negates the profile.
    """
    text = spec.strip()
    if text.startswith("-"):
        return parse_profile(text[1:], pulse_width=pulse_width).scaled(-1.0)
    kind, _, args = text.partition(":")
    kind = kind.strip().lower()
    try:
        nums = [float(a) for a in args.split(",")] if args.strip() else []
    except ValueError as exc:
        raise ValueError(f"bad profile arguments in {spec!r}") from exc
    if kind == "zero" and not nums:
        return ZERO_PROFILE
    if kind == "poly" and nums:
        return PolynomialProfile(tuple(nums))
    if kind == "gauss" and len(nums) in (2, 3):
        return GaussianProfile(*nums)
    if kind == "delta" and len(nums) == 1:
        return GaussianProfile(nums[0], pulse_width)
    raise ValueError(f"unrecognised profile {spec!r}")


# ---------------------------------------------------------------- fields


@dataclass(frozen=True)
class ProgressingField:
    profile: WaveProfile
    sign: int = -1
    nu0: float = 0.0

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")


@dataclass(frozen=True)
class IVPField:
    F: WaveProfile
    D: WaveProfile
    nu0: float = 0.0


@dataclass(frozen=True)
class CustomField:
    """Field given by an expression in q1..qN and q(N+1) = nu."""

    expr: PotentialExpr

    @classmethod
    def from_source(cls, source: str, dimension: int) -> "CustomField":
        return cls(parse(source, dimension + 1))


WaveField = Union[ProgressingField, IVPField, CustomField]


@dataclass(frozen=True)
class FieldDerivatives:
    """Derivatives of a field at a batch of points.

    ``d2q[p, i]`` is d2 psi / dq_i^2; only the diagonal is needed by L.
    """

    value: np.ndarray
    d2q: np.ndarray
    dnu: np.ndarray
    d2nu: np.ndarray


def _progressing_parts(profile: WaveProfile, sign: float, weight: float, V, g, H_diag, t):
    x = V + sign * t
    f0 = profile.value(x)
    f1 = profile.first(x)
    f2 = profile.second(x)
    value = weight * f0
    d2q = weight * (f2[:, None] * g * g + f1[:, None] * H_diag)
    dnu = weight * sign * f1
    d2nu = weight * f2
    return value, d2q, dnu, d2nu


def field_derivatives(surface: PotentialSurface, field: WaveField, q, nu,
                      batch: GaugeBatch | None = None) -> FieldDerivatives:
    q = np.atleast_2d(np.asarray(q, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if isinstance(field, CustomField):
        if field.expr.dimension != surface.dimension + 1:
            raise ValueError("custom field must have dimension N+1 (last variable is nu)")
        jet = derive_batch(field.expr, np.column_stack([q, nu]), 2)
        n = surface.dimension
        diag = np.diagonal(jet.hessian, axis1=1, axis2=2)
        return FieldDerivatives(jet.value, diag[:, :n], jet.gradient[:, n], diag[:, n])
    if batch is None:
        batch = surface.fields(q, order=2)
    V = batch.value
    g = batch.gradient
    Hd = np.diagonal(batch.hessian, axis1=1, axis2=2)
    if isinstance(field, ProgressingField):
        parts = [_progressing_parts(field.profile, field.sign, 1.0, V, g, Hd, nu - field.nu0)]
    elif isinstance(field, IVPField):
        t = nu - field.nu0
        parts = [
            _progressing_parts(field.F, 1.0, 0.5, V, g, Hd, t),
            _progressing_parts(field.F, -1.0, 0.5, V, g, Hd, t),
            _progressing_parts(field.D, 1.0, 0.5, V, g, Hd, t),
            _progressing_parts(field.D, -1.0, -0.5, V, g, Hd, t),
        ]
    else:
        raise TypeError(f"unsupported field {field!r}")
    return FieldDerivatives(*(sum(p[k] for p in parts) for k in range(4)))


def operator_parts(surface: PotentialSurface, field: WaveField, q, nu) -> np.ndarray:
    """Per-coordinate summands ``L_i psi``, shape (P, N).

    ``L_i = d2/dq_i^2 - (dV/dq_i)^2 d2/dnu2 + (d2V/dq_i^2) d/dnu``.
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    batch = surface.fields(q, order=2)
    d = field_derivatives(surface, field, q, nu, batch)
    g = batch.gradient
    Hd = np.diagonal(batch.hessian, axis1=1, axis2=2)
    return d.d2q - g * g * d.d2nu[:, None] + Hd * d.dnu[:, None]


def apply_operator_batch(surface: PotentialSurface, field: WaveField, q, nu) -> np.ndarray:
    q = np.atleast_2d(np.asarray(q, dtype=float))
    batch = surface.fields(q, order=2)
    d = field_derivatives(surface, field, q, nu, batch)
    trH = batch.trace_H
    return d.d2q.sum(axis=1) - batch.G * d.d2nu + trH * d.dnu


def apply_operator(surface: PotentialSurface, field: WaveField, point) -> float:
    """``L psi`` at ``point = (q1, ..., qN, nu)``."""
    q, nu = _split_point(surface, point)
    return float(apply_operator_batch(surface, field, q[None, :], [nu])[0])


def split_operator(surface: PotentialSurface, partition: Iterable[int], field: WaveField,
                   point) -> tuple[float, float]:
    """``(L_I psi, L_II psi)`` for the coordinate block ``partition`` (1-based) and its complement."""
    n = surface.dimension
    block = sorted({int(i) for i in partition})
    if not block or len(block) >= n or block[0] < 1 or block[-1] > n:
        raise ValueError(f"partition must be a nonempty proper subset of 1..{n}")
    q, nu = _split_point(surface, point)
    parts = operator_parts(surface, field, q[None, :], [nu])[0]
    mask = np.zeros(n, dtype=bool)
    mask[np.array(block) - 1] = True
    return float(parts[mask].sum()), float(parts[~mask].sum())


def _split_point(surface: PotentialSurface, point) -> tuple[np.ndarray, float]:
    point = np.asarray(point, dtype=float)
    if point.shape != (surface.dimension + 1,):
        raise ValueError(f"point must be (q1..q{surface.dimension}, nu)")
    return point[:-1], float(point[-1])


# ---------------------------------------------------------------- phases


@dataclass(frozen=True)
class LinearPhase:
    """Phase ``S = a V(q) + b nu + c``."""

    a: float = 1.0
    b: float = -1.0
    c: float = 0.0


Phase = Union[LinearPhase, CustomField]


def eikonal_residual(surface: PotentialSurface, phase: Phase, point) -> float:
    """``|grad_q S|^2 - G (dS/dnu)^2``; zero for characteristic phases."""
    q, nu = _split_point(surface, point)
    batch = surface.fields(q[None, :], order=1)
    G = float(batch.G[0])
    if isinstance(phase, LinearPhase):
        grad = phase.a * batch.gradient[0]
        dnu = phase.b
    else:
        jet = derive_batch(phase.expr, np.append(q, nu)[None, :], 1)
        grad = jet.gradient[0, :-1]
        dnu = jet.gradient[0, -1]
    return float(grad @ grad - G * dnu * dnu)


def transport_residual(g: SurfaceGauge) -> float:
    """Laplacian of V minus TrH; the coefficient of F' in L F(V - nu)."""
    laplacian = float(np.sum(np.diag(g.hessian)))
    return laplacian - g.trace_H


# ---------------------------------------------------------------- IVP


def ivp_values(surface: PotentialSurface, F: WaveProfile, D: WaveProfile, q, nu, nu0: float = 0.0):
    """Batched ``(1/2)[F(V+t) + F(V-t) + D(V+t) - D(V-t)]`` with ``t = nu - nu0``."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    V = surface.jets(q, 1).value if q.shape[0] > 0 else np.empty(0)
    return ivp_from_levels(F, D, V, nu, nu0)


def ivp_from_levels(F: WaveProfile, D: WaveProfile, V, nu, nu0: float = 0.0):
    t = np.asarray(nu, dtype=float) - nu0
    return 0.5 * (F.value(V + t) + F.value(V - t) + D.value(V + t) - D.value(V - t))


def ivp_solution(surface: PotentialSurface, F: WaveProfile, D: WaveProfile, point,
                 nu0: float = 0.0) -> float:
    """Two-profile solution at ``point = (q, nu)``.

    At nu = nu0 it equals F(V(q)) and its nu-derivative equals D'(V(q)).
    ``D = -F`` reduces it to F(V - (nu - nu0)); ``D = F`` gives
    F(V + (nu - nu0)).  It solves ``L psi = 0`` exactly when
    ``TrH (F' + D')(V + nu - nu0)`` vanishes, which covers ``D = -F`` on
    every surface and arbitrary profiles on surfaces with TrH = 0.
    """
    q, nu = _split_point(surface, point)
    return float(ivp_values(surface, F, D, q[None, :], nu, nu0)[0])
