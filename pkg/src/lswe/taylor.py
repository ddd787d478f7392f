"""Forward-mode truncated multivariate Taylor arithmetic up to third order.

Each intermediate quantity of the expression tree is carried as a jet
``(value, gradient, hessian, third)`` over a batch of P points.  Products
and function compositions follow the multivariate Leibniz and Faa di Bruno
rules truncated at the requested order, so results are exact (up to
rounding) for polynomials and use closed-form derivatives for the smooth
primitives.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import ExprDomainError
from .expr import BinOp, Call, Const, Neg, Node, PotentialExpr, Var, _eval


@dataclass(frozen=True)
class TaylorJet:
    """Derivatives of a scalar field at one point.

    ``hessian`` and ``third`` are full arrays, built from their unique
    entries (i <= j <= k) so every index permutation holds the identical
    float.  Entries above ``order`` are ``None``.
    """

    value: float
    gradient: np.ndarray
    hessian: Optional[np.ndarray]
    third: Optional[np.ndarray]
    order: int

    @property
    def dimension(self) -> int:
        return self.gradient.shape[0]

    def third_unique(self) -> dict:
        """Third derivatives keyed by sorted index triples."""
        if self.third is None:
            return {}
        n = self.dimension
        return {
            idx: float(self.third[idx])
            for idx in itertools.combinations_with_replacement(range(n), 3)
        }

    def truncate(self, order: int) -> "TaylorJet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        return TaylorJet(
            self.value,
            self.gradient,
            self.hessian if order >= 2 else None,
            self.third if order >= 3 else None,
            order,
        )


@dataclass(frozen=True)
class JetBatch:
    """Batched jets: value (P,), gradient (P,N), hessian (P,N,N), third (P,N,N,N)."""

    value: np.ndarray
    gradient: np.ndarray
    hessian: Optional[np.ndarray]
    third: Optional[np.ndarray]
    order: int

    def __len__(self) -> int:
        return self.value.shape[0]

    def at(self, p: int) -> TaylorJet:
        return TaylorJet(
            float(self.value[p]),
            self.gradient[p],
            None if self.hessian is None else self.hessian[p],
            None if self.third is None else self.third[p],
            self.order,
        )


class _Jet:
    """Mutable-free working jet used during the tree walk."""

    __slots__ = ("v", "g", "h", "t")

    def __init__(self, v, g, h=None, t=None):
        self.v = v
        self.g = g
        self.h = h
        self.t = t


def _outer(a, b):
    return a[:, :, None] * b[:, None, :]


def _scale(j: _Jet, c, order: int) -> _Jet:
    """Multiply a jet by a per-point or scalar factor ``c`` (no derivative)."""
    if np.ndim(c) == 0:
        return _Jet(
            j.v * c,
            j.g * c,
            j.h * c if order >= 2 else None,
            j.t * c if order >= 3 else None,
        )
    return _Jet(
        j.v * c,
        j.g * c[:, None],
        j.h * c[:, None, None] if order >= 2 else None,
        j.t * c[:, None, None, None] if order >= 3 else None,
    )


def _add(a: _Jet, b: _Jet, sign: float, order: int) -> _Jet:
    if sign > 0:
        return _Jet(
            a.v + b.v,
            a.g + b.g,
            a.h + b.h if order >= 2 else None,
            a.t + b.t if order >= 3 else None,
        )
    return _Jet(
        a.v - b.v,
        a.g - b.g,
        a.h - b.h if order >= 2 else None,
        a.t - b.t if order >= 3 else None,
    )


def _mul(a: _Jet, b: _Jet, order: int) -> _Jet:
    av, bv = a.v, b.v
    v = av * bv
    g = a.g * bv[:, None] + av[:, None] * b.g
    h = t = None
    if order >= 2:
        ab = _outer(a.g, b.g)
        h = a.h * bv[:, None, None] + (ab + ab.transpose(0, 2, 1)) + av[:, None, None] * b.h
    if order >= 3:
        hg = a.h[:, :, :, None] * b.g[:, None, None, :]
        gh = b.h[:, :, :, None] * a.g[:, None, None, :]
        t = (
            a.t * bv[:, None, None, None]
            + hg + hg.transpose(0, 1, 3, 2) + hg.transpose(0, 3, 2, 1)
            + gh + gh.transpose(0, 1, 3, 2) + gh.transpose(0, 3, 2, 1)
            + av[:, None, None, None] * b.t
        )
    return _Jet(v, g, h, t)


def _compose(u: _Jet, d0, d1, d2, d3, order: int) -> _Jet:
    """Jet of phi(u) given phi and its first three derivatives at u.v."""
    g = d1[:, None] * u.g
    h = t = None
    if order >= 2:
        h = d2[:, None, None] * _outer(u.g, u.g) + d1[:, None, None] * u.h
    if order >= 3:
        gg = u.g
        ggg = gg[:, :, None, None] * gg[:, None, :, None] * gg[:, None, None, :]
        hg = u.h[:, :, :, None] * gg[:, None, None, :]
        t = (
            d3[:, None, None, None] * ggg
            + d2[:, None, None, None] * (hg + hg.transpose(0, 1, 3, 2) + hg.transpose(0, 3, 2, 1))
            + d1[:, None, None, None] * u.t
        )
    return _Jet(d0, g, h, t)


def _function_derivatives(func: str, x: np.ndarray, order: int):
    if func == "sin":
        s, c = np.sin(x), np.cos(x)
        return s, c, -s, -c
    if func == "cos":
        s, c = np.sin(x), np.cos(x)
        return c, -s, -c, s
    if func == "exp":
        with np.errstate(over="raise"):
            try:
                e = np.exp(x)
            except FloatingPointError as exc:
                raise ExprDomainError("exp overflow") from exc
        return e, e, e, e
    if func == "log":
        if np.any(x <= 0.0):
            raise ExprDomainError(f"log of non-positive value {x[x <= 0.0][0]!r}")
        r = 1.0 / x
        return np.log(x), r, -r * r, 2.0 * r * r * r
    if func == "sqrt":
        if np.any(x < 0.0) or (order >= 1 and np.any(x == 0.0)):
            raise ExprDomainError("sqrt argument outside its differentiable domain")
        s = np.sqrt(x)
        d1 = 0.5 / s
        d2 = -0.25 / (s * x)
        d3 = 0.375 / (s * x * x)
        return s, d1, d2, d3
    if func == "tanh":
        th = np.tanh(x)
        sech2 = 1.0 - th * th
        return th, sech2, -2.0 * th * sech2, sech2 * (6.0 * th * th - 2.0)
    raise ValueError(f"unknown function {func!r}")


def _power_derivatives(x: np.ndarray, p: float):
    """x**p and its first three derivatives for a constant exponent."""
    integral = float(p).is_integer()
    if not integral and np.any(x <= 0.0):
        raise ExprDomainError(f"non-integer power {p!r} of non-positive base")
    out = []
    coeff = 1.0
    for k in range(4):
        e = p - k
        if coeff == 0.0:
            out.append(np.zeros_like(x))
        else:
            if integral and e < 0 and np.any(x == 0.0):
                raise ExprDomainError("zero raised to a negative power")
            out.append(coeff * np.power(x, e))
        coeff *= e
    return out


def _reciprocal_derivatives(x: np.ndarray):
    if np.any(x == 0.0):
        raise ExprDomainError("division by zero")
    r = 1.0 / x
    r2 = r * r
    return r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2


class _Walker:
    def __init__(self, points: np.ndarray, order: int):
        self.x = points
        self.P, self.N = points.shape
        self.order = order

    def const_jet(self, c: float) -> _Jet:
        P, N = self.P, self.N
        return _Jet(
            np.full(P, c),
            np.zeros((P, N)),
            np.zeros((P, N, N)) if self.order >= 2 else None,
            np.zeros((P, N, N, N)) if self.order >= 3 else None,
        )

    def walk(self, node: Node):
        """Return a float for variable-free subtrees, otherwise a _Jet."""
        order = self.order
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Var):
            P, N = self.P, self.N
            g = np.zeros((P, N))
            g[:, node.index - 1] = 1.0
            return _Jet(
                self.x[:, node.index - 1].copy(),
                g,
                np.zeros((P, N, N)) if order >= 2 else None,
                np.zeros((P, N, N, N)) if order >= 3 else None,
            )
        if isinstance(node, Neg):
            a = self.walk(node.operand)
            return -a if isinstance(a, float) else _scale(a, -1.0, order)
        if isinstance(node, Call):
            a = self.walk(node.arg)
            if isinstance(a, float):
                d = _function_derivatives(node.func, np.array([a]), 0)
                return float(d[0][0])
            return _compose(a, *_function_derivatives(node.func, a.v, order), order)
        a = self.walk(node.left)
        b = self.walk(node.right)
        op = node.op
        if isinstance(a, float) and isinstance(b, float):
            return _float_binop(op, a, b)
        if op in "+-":
            sign = 1.0 if op == "+" else -1.0
            if isinstance(b, float):
                return _Jet(a.v + sign * b, a.g, a.h, a.t)
            if isinstance(a, float):
                nb = b if sign > 0 else _scale(b, -1.0, order)
                return _Jet(a + nb.v, nb.g, nb.h, nb.t)
            return _add(a, b, sign, order)
        if op == "*":
            if isinstance(a, float):
                return _scale(b, a, order)
            if isinstance(b, float):
                return _scale(a, b, order)
            return _mul(a, b, order)
        if op == "/":
            if isinstance(b, float):
                if b == 0.0:
                    raise ExprDomainError("division by zero")
                return _Jet(
                    a.v / b,
                    a.g / b,
                    a.h / b if order >= 2 else None,
                    a.t / b if order >= 3 else None,
                )
            recip = _compose(b, *_reciprocal_derivatives(b.v), order)
            if isinstance(a, float):
                return _scale(recip, a, order)
            return _mul(a, recip, order)
        # power
        if isinstance(b, float):
            return _compose(a, *_power_derivatives(a.v, b), order)
        # non-constant exponent: a^b = exp(b log a), needs a > 0
        if isinstance(a, float):
            if a <= 0.0:
                raise ExprDomainError("variable exponent of non-positive base")
            la = math.log(a)
            ex = _scale(b, la, order)
        else:
            if np.any(a.v <= 0.0):
                raise ExprDomainError("variable exponent of non-positive base")
            la = _compose(a, *_function_derivatives("log", a.v, order), order)
            ex = _mul(b, la, order)
        return _compose(ex, *_function_derivatives("exp", ex.v, order), order)


def _float_binop(op: str, a: float, b: float) -> float:
    # variable-free subtree: reuse the scalar evaluator's semantics
    return _eval(BinOp(op, Const(a), Const(b)), ())


@lru_cache(maxsize=8)
def _sym_index(n: int):
    """Index arrays mapping every (i,j,k) to its sorted representative."""
    idx = np.indices((n, n, n)).reshape(3, -1)
    s = np.sort(idx, axis=0)
    return tuple(s)


def _symmetrize2(h: np.ndarray) -> np.ndarray:
    upper = np.triu(h)
    return upper + np.triu(h, 1).transpose(0, 2, 1)


def _symmetrize3(t: np.ndarray) -> np.ndarray:
    P, n = t.shape[0], t.shape[1]
    i, j, k = _sym_index(n)
    return t[:, i, j, k].reshape(P, n, n, n)


def derive_batch(expr: PotentialExpr, points, order: int = 2) -> JetBatch:
    """Jets of ``expr`` at each row of ``points`` (shape (P, N))."""
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order!r}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != expr.dimension:
        raise ValueError(f"points have {pts.shape[1]} coordinates, expected {expr.dimension}")
    walker = _Walker(pts, order)
    jet = walker.walk(expr.root)
    if isinstance(jet, float):
        jet = walker.const_jet(jet)
    h = _symmetrize2(jet.h) if order >= 2 else None
    t = _symmetrize3(jet.t) if order >= 3 else None
    return JetBatch(jet.v, jet.g, h, t, order)


def derive(expr: PotentialExpr, point, order: int = 2) -> TaylorJet:
    """Value and partial derivatives of ``expr`` up to ``order`` at ``point``."""
    point = np.asarray(point, dtype=float)
    if point.ndim != 1:
        raise ValueError("point must be a 1-D sequence")
    return derive_batch(expr, point[None, :], order).at(0)
