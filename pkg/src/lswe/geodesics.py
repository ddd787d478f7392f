"""Geodesics of the metric diag(1, ..., 1, -1/G).

The geodesic system is

    q''^i = (H_i / G^2) nu'^2,      nu'' = (2 / G) nu' sum_j q'^j H_j,

and ``D = |q'|^2 - nu'^2 / G`` is conserved along each solution.  Paths are
integrated with fixed-step classical RK4; several trajectories can be
advanced at once, which the shooting Jacobian relies on.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergentPath, NoConvergence, StationaryPoint, TimelikePath
from .surface import PotentialSurface, SurfaceGauge

TIMELIKE_TOLERANCE = 1e-10
DEFAULT_STEP = 1e-3

KIND_STEEPEST = "steepest_ascent"
KIND_HYPERPLANE = "hyperplane"
KIND_GENERAL = "general"
KIND_SHOOTING = "shooting"


@dataclass(frozen=True)
class GeodesicState:
    q: np.ndarray
    nu: float
    q_dot: np.ndarray
    nu_dot: float
    s: float = 0.0

    @classmethod
    def make(cls, q, nu, q_dot, nu_dot, s=0.0) -> "GeodesicState":
        return cls(np.asarray(q, dtype=float).copy(), float(nu),
                   np.asarray(q_dot, dtype=float).copy(), float(nu_dot), float(s))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, [self.nu], self.q_dot, [self.nu_dot]])


@dataclass
class GeodesicPath:
    s: np.ndarray
    q: np.ndarray  # (M, N)
    nu: np.ndarray
    q_dot: np.ndarray
    nu_dot: np.ndarray
    D: float
    kind: str = KIND_GENERAL
    G: np.ndarray | None = field(default=None, repr=False)
    error: Exception | None = None
    iterations: int = 0

    @property
    def complete(self) -> bool:
        return self.error is None

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    @property
    def samples(self) -> list[GeodesicState]:
        return [GeodesicState(self.q[k], float(self.nu[k]), self.q_dot[k],
                              float(self.nu_dot[k]), float(self.s[k]))
                for k in range(self.s.size)]

    @property
    def start(self) -> GeodesicState:
        return self.samples[0]

    @property
    def end(self) -> GeodesicState:
        k = self.s.size - 1
        return GeodesicState(self.q[k], float(self.nu[k]), self.q_dot[k],
                             float(self.nu_dot[k]), float(self.s[k]))

    def D_along(self) -> np.ndarray:
        """Pointwise ``|q'|^2 - nu'^2 / G`` at every sample."""
        return np.einsum("mi,mi->m", self.q_dot, self.q_dot) - self.nu_dot**2 / self.G

    def D_residual(self) -> np.ndarray:
        return self.D_along() - self.D

    def max_drift(self) -> float:
        return float(np.max(np.abs(self.D_residual())))

    def to_csv(self) -> str:
        n = self.q.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", *[f"q{i + 1}" for i in range(n)], "nu",
                    *[f"qdot{i + 1}" for i in range(n)], "nudot", "D_residual"])
        res = self.D_residual()
        for k in range(self.s.size):
            w.writerow([repr(float(x)) for x in (
                self.s[k], *self.q[k], self.nu[k], *self.q_dot[k], self.nu_dot[k], res[k])])
        return buf.getvalue()


# ---------------------------------------------------------------- integrator


def _rhs(surface: PotentialSurface, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side for a batch of states ``y`` of shape (B, 2N+2)."""
    n = surface.dimension
    q = y[:, :n]
    qd = y[:, n + 1:2 * n + 1]
    nd = y[:, 2 * n + 1]
    batch = surface.fields(q, order=2)
    G = batch.G
    scr = batch.script_H
    out = np.empty_like(y)
    out[:, :n] = qd
    out[:, n] = nd
    out[:, n + 1:2 * n + 1] = scr / G[:, None] ** 2 * (nd**2)[:, None]
    out[:, 2 * n + 1] = 2.0 / G * nd * np.einsum("bi,bi->b", qd, scr)
    return out, G


def _integrate(surface: PotentialSurface, y0: np.ndarray, steps: int, h: float):
    """RK4 on a batch; returns the trajectory (steps+1, B, 2N+2), G history and error.

    Integration stops early at a stationary point or when the state stops
    being finite; the trajectory up to the last good sample is returned.
    """
    traj = np.empty((steps + 1,) + y0.shape)
    Gs = np.empty((steps + 1, y0.shape[0]))
    traj[0] = y0
    y = y0
    k1, G = _rhs(surface, y)
    Gs[0] = G
    done = 0
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            for m in range(steps):
                k2, _ = _rhs(surface, y + 0.5 * h * k1)
                k3, _ = _rhs(surface, y + 0.5 * h * k2)
                k4, _ = _rhs(surface, y + h * k3)
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if not np.all(np.isfinite(y)):
                    raise DivergentPath(f"geodesic diverged near s={(m + 1) * h:.6g}")
                k1, G = _rhs(surface, y)
                if not (np.all(np.isfinite(k1)) and np.all(np.isfinite(G))):
                    raise DivergentPath(f"geodesic diverged near s={(m + 1) * h:.6g}")
                traj[m + 1] = y
                Gs[m + 1] = G
                done = m + 1
    except (StationaryPoint, DivergentPath) as exc:
        return traj[: done + 1], Gs[: done + 1], exc
    return traj, Gs, None


def _step_count(length: float, step: float) -> tuple[int, float]:
    if not step > 0:
        raise ValueError("step must be positive")
    if not length > 0:
        raise ValueError("length must be positive")
    steps = max(1, int(np.ceil(length / step - 1e-9)))
    return steps, length / steps


def conserved_quantity(g: SurfaceGauge, state: GeodesicState) -> float:
    """``|q'|^2 - nu'^2 / G``: positive spacelike, zero null, negative timelike."""
    qd = np.asarray(state.q_dot, dtype=float)
    return float(qd @ qd - state.nu_dot**2 / g.G)


def _path_from(traj: np.ndarray, Gs: np.ndarray, n: int, h: float, kind: str,
               error: Exception | None, s0: float = 0.0) -> GeodesicPath:
    y = traj[:, 0, :] if traj.ndim == 3 else traj
    G = Gs[:, 0] if Gs.ndim == 2 else Gs
    s = s0 + h * np.arange(y.shape[0])
    qd = y[:, n + 1:2 * n + 1]
    D = float(qd[0] @ qd[0] - y[0, 2 * n + 1] ** 2 / G[0])
    return GeodesicPath(s=s, q=y[:, :n].copy(), nu=y[:, n].copy(), q_dot=qd.copy(),
                        nu_dot=y[:, 2 * n + 1].copy(), D=D, kind=kind, G=G.copy(), error=error)


def integrate_geodesic(surface: PotentialSurface, initial: GeodesicState, length: float,
                       step: float = DEFAULT_STEP, kind: str = KIND_GENERAL) -> GeodesicPath:
    """Fixed-step RK4 trajectory from ``initial`` over arclength ``length``.

    If the path runs into a stationary point the integration stops; the
    partial path is returned with ``error`` set.  A stationary start raises.
    """
    n = surface.dimension
    if initial.q.shape != (n,) or initial.q_dot.shape != (n,):
        raise ValueError(f"state vectors must have {n} components")
    surface.fields(initial.q[None, :], order=1)  # raises on a stationary start
    steps, h = _step_count(length, step)
    traj, Gs, err = _integrate(surface, initial.as_vector()[None, :], steps, h)
    return _path_from(traj, Gs, n, h, kind, err, initial.s)


def steepest_ascent(surface: PotentialSurface, q0: Sequence[float], nu0: float,
                    length: float, step: float = DEFAULT_STEP) -> GeodesicPath:
    """Null geodesic with initial tangent ``(grad V, G)``.

    With ``nu0 = V(q0)`` the path stays on the characteristic surface
    ``V(q) = nu``.
    """
    q0 = np.asarray(q0, dtype=float)
    batch = surface.fields(q0[None, :], order=1)
    g = batch.gradient[0]
    init = GeodesicState.make(q0, nu0, g, batch.G[0])
    return integrate_geodesic(surface, init, length, step, kind=KIND_STEEPEST)


def hyperplane_geodesic(surface: PotentialSurface, q0: Sequence[float], nu0: float,
                        direction: Sequence[float], length: float,
                        step: float = DEFAULT_STEP) -> GeodesicPath:
    """Straight line in q at constant nu (nu' = 0 keeps q'' = 0)."""
    d = np.asarray(direction, dtype=float)
    init = GeodesicState.make(q0, nu0, d, 0.0)
    return integrate_geodesic(surface, init, length, step, kind=KIND_HYPERPLANE)


def geodesic_distance(path: GeodesicPath) -> float:
    """``sqrt(D) * s`` over the whole path; zero on null paths."""
    if path.D < -TIMELIKE_TOLERANCE:
        raise TimelikePath(f"D={path.D:.3e} < 0: distance undefined for timelike paths")
    return float(np.sqrt(max(path.D, 0.0)) * path.length)


def distance_gradient(path: GeodesicPath) -> tuple[np.ndarray, float]:
    """``(dJ/dq, dJ/dnu)`` at the endpoint, ``(q'/sqrt(D), -nu'/(sqrt(D) G))``.

    Defined only for D > 0.
    """
    if not path.D > TIMELIKE_TOLERANCE:
        raise TimelikePath("the distance gradient needs D > 0")
    r = np.sqrt(path.D)
    return path.q_dot[-1] / r, float(-path.nu_dot[-1] / (r * path.G[-1]))


# ---------------------------------------------------------------- world function


def world_function_local(surface: PotentialSurface, p0: Sequence[float],
                         p: Sequence[float]) -> float:
    """Quadratic approximation ``|q - q0|^2 - (nu - nu0)^2 / G(q0)``."""
    p0 = np.asarray(p0, dtype=float)
    p = np.asarray(p, dtype=float)
    n = surface.dimension
    if p0.shape != (n + 1,) or p.shape != (n + 1,):
        raise ValueError(f"points must be (q1..q{n}, nu)")
    G0 = float(surface.fields(p0[None, :n], order=1).G[0])
    dq = p[:n] - p0[:n]
    dn = p[n] - p0[n]
    return float(dq @ dq - dn * dn / G0)


def world_function(surface: PotentialSurface, p0, p1, **kwargs) -> float:
    """Squared geodesic distance via a shooting connection (D >= 0 only)."""
    path = connect(surface, p0, p1, **kwargs)
    return geodesic_distance(path) ** 2


# ---------------------------------------------------------------- shooting


def _endpoints(surface: PotentialSurface, p0: np.ndarray, velocities: np.ndarray,
               steps: int, h: float):
    n = surface.dimension
    y0 = np.column_stack([np.repeat(p0[None, :n], len(velocities), 0),
                          np.full(len(velocities), p0[n]), velocities])
    traj, Gs, err = _integrate(surface, y0, steps, h)
    if err is not None:
        raise err
    return traj[-1][:, : n + 1], traj, Gs


def connect(surface: PotentialSurface, p0: Sequence[float], p1: Sequence[float],
            max_iters: int = 50, tol: float = 1e-8, step: float = 1e-2,
            initial_velocity: Sequence[float] | None = None,
            fd_step: float = 1e-6) -> GeodesicPath:
    """Geodesic from ``p0`` to ``p1`` parametrised over s in [0, 1].

    Damped Newton on the initial velocity; the Jacobian of the endpoint map
    is taken from central differences of whole trajectories integrated as
    one batch.  With s in [0, 1] the conserved quantity equals the squared
    distance.  ``initial_velocity`` defaults to the chord ``p1 - p0``.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    n = surface.dimension
    if p0.shape != (n + 1,) or p1.shape != (n + 1,):
        raise ValueError(f"points must be (q1..q{n}, nu)")
    if np.array_equal(p0, p1):
        raise ValueError("endpoints must be distinct")
    surface.fields(np.stack([p0[:n], p1[:n]]), order=1)
    steps, h = _step_count(1.0, step)
    v = (p1 - p0).copy() if initial_velocity is None else np.asarray(initial_velocity, float).copy()
    m = n + 1
    eye = np.eye(m)

    def residual(vel):
        end, traj, Gs = _endpoints(surface, p0, vel[None, :], steps, h)
        return end[0] - p1, traj, Gs

    r, traj, Gs = residual(v)
    err = float(np.max(np.abs(r)))
    for it in range(max_iters + 1):
        if err <= tol:
            path = _path_from(traj, Gs, n, h, KIND_SHOOTING, None)
            path.iterations = it
            return path
        if it == max_iters:
            break
        probes = np.concatenate([v + fd_step * eye, v - fd_step * eye])
        ends, _, _ = _endpoints(surface, p0, probes, steps, h)
        J = (ends[:m] - ends[m:]).T / (2.0 * fd_step)
        try:
            dv = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular shooting Jacobian at iteration {it}") from exc
        lam = 1.0
        while True:
            trial = v + lam * dv
            try:
                r_new, traj_new, Gs_new = residual(trial)
                err_new = float(np.max(np.abs(r_new)))
            except (StationaryPoint, DivergentPath):
                err_new = np.inf
            if err_new < err or lam <= 2.0**-10:
                break
            lam *= 0.5
        if not np.isfinite(err_new):
            raise NoConvergence(f"shooting left the admissible region at iteration {it}")
        v, r, traj, Gs, err = trial, r_new, traj_new, Gs_new, err_new
    raise NoConvergence(f"endpoint error {err:.3e} > {tol:.1e} after {max_iters} iterations")
