"""Explicit finite-difference evolution in nu, used to verify the two-profile solution.

The equation ``G psi_nunu = Laplacian psi + TrH psi_nu`` is advanced with
second-order central differences in q and nu:

    (1 - a) psi+ = 2 psi - (1 + a) psi- + (dnu^2 / G) Lap_h psi,   a = TrH dnu / (2G).

The first step uses a second-order Taylor start with psi_nu = D'(V) and
psi_nunu from the equation.  Boundary nodes are overwritten with the
analytic two-profile field at every level, so the interior scheme error is
isolated.  That field is an exact solution only when TrH (F' + D') vanishes
along the fronts; on curved surfaces use D = -F.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CFLViolation, StationaryPointOnGrid
from .surface import PotentialSurface
from .waves import GaussianProfile, ScaledProfile, WaveProfile, ivp_from_levels

MAX_CELLS_2D = 256
WAKE_WIDTHS = 3.0


@dataclass(frozen=True)
class Grid:
    bounds: tuple  # ((lo, hi), ...) per coordinate
    cells: tuple  # cells per coordinate
    nu0: float = 0.0
    nu1: float = 1.0
    dnu: float | None = None
    cfl_safety: float = 0.9

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        c = tuple(int(x) for x in self.cells)
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "cells", c)
        if len(b) != len(c) or len(b) not in (1, 2):
            raise ValueError("grids have one or two coordinates with matching cell counts")
        if any(not hi > lo for lo, hi in b):
            raise ValueError("each bound must satisfy lo < hi")
        if any(n < 2 for n in c):
            raise ValueError("need at least two cells per coordinate")
        if len(c) == 2 and max(c) > MAX_CELLS_2D:
            raise ValueError(f"two-dimensional grids are capped at {MAX_CELLS_2D} cells per side")
        if not self.nu1 > self.nu0:
            raise ValueError("nu1 must exceed nu0")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.dnu is not None and not self.dnu > 0:
            raise ValueError("dnu must be positive")

    @property
    def dimension(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / n for (lo, hi), n in zip(self.bounds, self.cells)])

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, n + 1) for (lo, hi), n in zip(self.bounds, self.cells)]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    @property
    def shape(self) -> tuple:
        return tuple(n + 1 for n in self.cells)

    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.bounds, tuple(n * factor for n in self.cells), self.nu0, self.nu1,
                    None if self.dnu is None else self.dnu / factor, self.cfl_safety)

    def max_stable_dnu(self, min_G: float) -> float:
        """``cfl_safety * dq_min * sqrt(min G / N)``."""
        return self.cfl_safety * float(self.spacing.min()) * np.sqrt(min_G / self.dimension)

    def steps(self, min_G: float) -> tuple[int, float]:
        limit = self.max_stable_dnu(min_G)
        span = self.nu1 - self.nu0
        if self.dnu is None:
            n = int(np.ceil(span / limit - 1e-12))
            return n, span / n
        if self.dnu > limit * (1 + 1e-12):
            raise CFLViolation(f"dnu={self.dnu:.4g} exceeds the stable limit {limit:.4g}")
        n = int(round(span / self.dnu))
        if n < 1 or abs(n * self.dnu - span) > 1e-9 * span:
            raise ValueError("dnu must divide the nu range")
        return n, span / n

    def describe(self) -> dict:
        return {"bounds": [list(b) for b in self.bounds], "cells": list(self.cells),
                "nu0": self.nu0, "nu1": self.nu1, "dnu": self.dnu,
                "cfl_safety": self.cfl_safety}


@dataclass
class FieldSnapshot:
    nu: float
    values: np.ndarray  # grid-shaped
    analytic: np.ndarray
    linf: float
    l2: float
    wake_energy: float
    mask: np.ndarray = field(repr=False)

    @property
    def error(self) -> np.ndarray:
        return self.values - self.analytic


@dataclass
class SolveResult:
    grid: Grid
    snapshots: list
    dnu: float
    steps: int
    min_G: float
    source: str

    @property
    def final(self) -> FieldSnapshot:
        return self.snapshots[-1]

    def manifest(self) -> dict:
        return {
            "surface": self.source,
            "grid": self.grid.describe(),
            "dnu": self.dnu,
            "steps": self.steps,
            "cfl": {"limit": self.grid.max_stable_dnu(self.min_G), "min_G": self.min_G,
                    "safety": self.grid.cfl_safety},
            "norms": [{"nu": s.nu, "linf": s.linf, "l2": s.l2, "wake_energy": s.wake_energy}
                      for s in self.snapshots],
        }


def _pulse_fronts(profile: WaveProfile):
    """(center, width) of every gaussian pulse inside ``profile``."""
    if isinstance(profile, GaussianProfile):
        return [(profile.center, profile.width)]
    if isinstance(profile, ScaledProfile):
        return _pulse_fronts(profile.base) if profile.factor != 0 else []
    return []


def wake_mask(V: np.ndarray, t: float, F: WaveProfile, D: WaveProfile,
              pulse_width: float | None = None) -> np.ndarray:
    """Points farther than 3 pulse widths from every front ``V +- t = center``."""
    mask = np.ones(V.shape, dtype=bool)
    for center, width in _pulse_fronts(F) + _pulse_fronts(D):
        w = WAKE_WIDTHS * (pulse_width if pulse_width is not None else width)
        for sign in (1.0, -1.0):
            mask &= np.abs(V + sign * t - center) > w
    return mask


def _norms(err: np.ndarray, mask: np.ndarray, vol: float) -> tuple[float, float, float]:
    flat = err.ravel()
    sq = flat * flat
    linf = float(np.max(np.abs(flat)))
    l2 = float(np.sqrt(np.sum(sq) * vol))
    wake = float(np.sqrt(np.sum(sq[mask.ravel()]) * vol))
    return linf, l2, wake


def wake_metric(snapshot: FieldSnapshot, vol: float = 1.0) -> float:
    """L2 norm of the error restricted to the wake region of ``snapshot``."""
    return _norms(snapshot.error, snapshot.mask, vol)[2]


def _laplacian(psi: np.ndarray, dq: np.ndarray) -> np.ndarray:
    """Second differences on interior nodes; boundary entries are zero."""
    out = np.zeros_like(psi)
    if psi.ndim == 1:
        out[1:-1] = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / dq[0] ** 2
    else:
        out[1:-1, 1:-1] = (psi[2:, 1:-1] - 2.0 * psi[1:-1, 1:-1] + psi[:-2, 1:-1]) / dq[0] ** 2
        out[1:-1, 1:-1] += (psi[1:-1, 2:] - 2.0 * psi[1:-1, 1:-1] + psi[1:-1, :-2]) / dq[1] ** 2
    return out


def _boundary(shape: tuple) -> np.ndarray:
    b = np.zeros(shape, dtype=bool)
    b[0] = b[-1] = True
    if len(shape) == 2:
        b[:, 0] = b[:, -1] = True
    return b


def solve_ivp(surface: PotentialSurface, grid: Grid, F: WaveProfile, D: WaveProfile, *,
              snapshots: int = 1, pulse_width: float | None = None,
              initial_velocity: WaveProfile | None = None) -> SolveResult:
    """Evolve from nu0 to nu1 and compare with the two-profile field.

    ``snapshots`` evenly spaced levels after nu0 are recorded (the last one
    at nu1), plus the initial level.  ``initial_velocity`` replaces the
    profile whose derivative gives psi_nu at nu0 (default D); the
    comparison field always uses F and D.
    """
    if surface.dimension != grid.dimension:
        raise ValueError("grid and surface dimensions differ")
    pts = grid.points()
    batch = surface.fields(pts, order=2, check=False)
    G = batch.G
    bad = np.flatnonzero(~(G >= surface.stationary_threshold))
    if bad.size:
        raise StationaryPointOnGrid(pts[bad[0]], G[bad[0]], surface.stationary_threshold)
    shape = grid.shape
    V = batch.value.reshape(shape)
    G = G.reshape(shape)
    trH = batch.trace_H.reshape(shape)
    min_G = float(G.min())
    steps, dnu = grid.steps(min_G)
    dq = grid.spacing
    vol = grid.cell_volume()
    bnd = _boundary(shape)
    vel = D if initial_velocity is None else initial_velocity

    record = set(np.unique(np.round(np.linspace(0, steps, snapshots + 1)).astype(int)))
    out = []

    def snap(k, psi):
        t = k * dnu
        exact = ivp_from_levels(F, D, V, grid.nu0 + t, grid.nu0)
        err = psi - exact
        mask = wake_mask(V, t, F, D, pulse_width)
        linf, l2, wake = _norms(err, mask, vol)
        out.append(FieldSnapshot(grid.nu0 + t, psi.copy(), exact, linf, l2, wake, mask))

    psi_prev = F.value(V)
    if 0 in record:
        snap(0, psi_prev)
    f1 = F.first(V)
    psi_nu = vel.first(V)
    psi_nunu = F.second(V) + trH * (f1 + psi_nu) / G
    psi = psi_prev + dnu * psi_nu + 0.5 * dnu**2 * psi_nunu
    psi[bnd] = ivp_from_levels(F, D, V[bnd], grid.nu0 + dnu, grid.nu0)
    if 1 in record:
        snap(1, psi)

    a = trH * dnu / (2.0 * G)
    c_lap = dnu**2 / G
    inv = 1.0 / (1.0 - a)
    for k in range(2, steps + 1):
        nxt = (2.0 * psi - (1.0 + a) * psi_prev + c_lap * _laplacian(psi, dq)) * inv
        nxt[bnd] = ivp_from_levels(F, D, V[bnd], grid.nu0 + k * dnu, grid.nu0)
        psi_prev, psi = psi, nxt
        if k in record:
            snap(k, psi)
    return SolveResult(grid, out, dnu, steps, min_G, surface.source)


@dataclass(frozen=True)
class ConvergenceStudy:
    cells: tuple
    spacings: tuple
    linf: tuple
    wake: tuple
    order: float

    def ratios(self) -> list[float]:
        return [self.linf[i] / self.linf[i + 1] for i in range(len(self.linf) - 1)]

    def wake_ratios(self) -> list[float]:
        return [self.wake[i] / self.wake[i + 1] for i in range(len(self.wake) - 1)]


def convergence_study(surface: PotentialSurface, grid: Grid, F: WaveProfile, D: WaveProfile,
                      refinements: int = 2, **kwargs) -> ConvergenceStudy:
    """Errors at nu1 for ``grid`` and ``refinements`` successive halvings.

    The order is the least-squares slope of log(L_inf) against log(dq).
    """
    if refinements < 2:
        raise ValueError("need at least two refinements")
    grids = [grid]
    for _ in range(refinements):
        grids.append(grids[-1].refined(2))
    results = [solve_ivp(surface, g, F, D, **kwargs) for g in grids]
    h = np.array([g.spacing.min() for g in grids])
    linf = np.array([r.final.linf for r in results])
    wake = np.array([r.final.wake_energy for r in results])
    order = float(np.polyfit(np.log(h), np.log(linf), 1)[0])
    return ConvergenceStudy(tuple(grids[i].cells[0] for i in range(len(grids))),
                            tuple(h.tolist()), tuple(linf.tolist()), tuple(wake.tolist()), order)


def snapshot_to_csv(snapshot: FieldSnapshot, grid: Grid, dnu: float) -> str:
    buf = io.StringIO()
    buf.write(f"# nu={snapshot.nu!r}\n")
    buf.write("# dq=" + ",".join(repr(float(x)) for x in grid.spacing) + "\n")
    buf.write(f"# dnu={dnu!r}\n")
    cols = [f"q{i + 1}" for i in range(grid.dimension)]
    buf.write(",".join(cols + ["psi", "analytic", "error"]) + "\n")
    pts = grid.points()
    vals = snapshot.values.ravel()
    ex = snapshot.analytic.ravel()
    for p, v, e in zip(pts, vals, ex):
        buf.write(",".join(repr(float(x)) for x in (*p, v, e, v - e)) + "\n")
    return buf.getvalue()


def manifest_json(result: SolveResult) -> str:
    return json.dumps(result.manifest(), sort_keys=True, indent=2)

