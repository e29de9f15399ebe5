"""Brute-force references for the exact geometry: LP feasibility and dense grids.

These are deliberately simple and slow; they exist so the exact routines can
be checked against something computed a different way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .geometry import LabeledPoint, ParamBox

GRID_THETA_STEP = math.radians(0.25)
GRID_C_STEP = 0.05
MARGIN_THETA_STEP = math.radians(0.05)
MARGIN_C_STEP = 0.01


def _arrays(points: Sequence[LabeledPoint]):
    a = np.array([(p.x, p.z, p.label) for p in points], float).reshape(-1, 3)
    return a[:, 0], a[:, 1], a[:, 2]


def lp_separable(points: Sequence[LabeledPoint], tol: float = 1e-9) -> bool:
    """Maximise s subject to y_i (z_i - rho x_i - c) >= s, s <= 1; separable iff s* > 0."""
    x, z, y = _arrays(points)
    if len(set(y.tolist())) < 2:
        return True
    # variables (rho, c, s); rows: -y*(z - rho x - c) + s <= 0
    A = np.column_stack([y * x, y, np.ones_like(y)])
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=A, b_ub=y * z,
                  bounds=[(None, None), (None, None), (None, 1.0)], method="highs")
    if res.status != 0:
        raise RuntimeError(f"linprog failed: {res.message}")
    return -res.fun > tol


def _theta_grid(lo: float, hi: float, step: float, closed: bool = False) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9))
    g = lo + step * np.arange(n + 1)
    if closed and hi - g[-1] > 1e-12:
        # keep the far edge so no cell is wider than one step
        g = np.append(g, hi)
    return g


def grid_separable(points: Sequence[LabeledPoint],
                   theta_step: float = GRID_THETA_STEP) -> bool:
    """Scan line angles; at each one the separating intercepts form an open interval.

    Positives must lie strictly above the line. The intercept direction is
    handled exactly, so only the angle is discretised.
    """
    x, z, y = _arrays(points)
    if len(set(y.tolist())) < 2:
        return True
    lim = math.pi / 2 - theta_step
    for t in _theta_grid(-lim, lim, theta_step, closed=True):
        b = z - math.tan(t) * x
        if b[y > 0].min() > b[y < 0].max():
            return True
    return False


@dataclass(frozen=True)
class GridExtent:
    theta_lo: float
    theta_hi: float
    c_lo: float
    c_hi: float
    cells: int


@dataclass(frozen=True)
class GridProjection:
    """Inner and outer grid approximations of a version space.

    ``inner`` keeps grid points that satisfy every sign constraint, so it
    lies inside the exact set. ``outer`` keeps every grid point whose cell
    could touch the exact set: each constraint may be violated by at most
    its variation across the cell. The exact extent must contain the inner
    extent and stay within half a cell of the outer one.
    """

    inner: Optional[GridExtent]
    outer: Optional[GridExtent]
    theta_step: float
    c_step: float

    def brackets(self, theta_lo: float, theta_hi: float, c_lo: float, c_hi: float,
                 tol: float = 1e-9) -> bool:
        if self.outer is None:
            return False
        o, ht, hc = self.outer, self.theta_step / 2 + tol, self.c_step / 2 + tol
        if not (o.theta_lo - ht <= theta_lo and theta_hi <= o.theta_hi + ht
                and o.c_lo - hc <= c_lo and c_hi <= o.c_hi + hc):
            return False
        i = self.inner
        if i is None:
            return True
        return (theta_lo <= i.theta_lo + tol and i.theta_hi - tol <= theta_hi
                and c_lo <= i.c_lo + tol and i.c_hi - tol <= c_hi)


def _extent(T: np.ndarray, C: np.ndarray, ok: np.ndarray) -> Optional[GridExtent]:
    if not ok.any():
        return None
    return GridExtent(float(T[ok].min()), float(T[ok].max()),
                      float(C[ok].min()), float(C[ok].max()), int(ok.sum()))


def grid_projection(points: Sequence[LabeledPoint], box: ParamBox,
                    theta_step: float = GRID_THETA_STEP,
                    c_step: float = GRID_C_STEP) -> GridProjection:
    """Projections of the feasible set onto theta and c, read off a (theta, c) grid."""
    x, z, y = _arrays(points)
    th = _theta_grid(box.theta_min, box.theta_max, theta_step, closed=True)
    cs = _theta_grid(box.c_min, box.c_max, c_step, closed=True)
    T, C = np.meshgrid(th, cs, indexing="ij")
    rho = np.tan(T)
    # largest change of rho within half a cell either side
    h = theta_step / 2
    drho = np.maximum(np.abs(np.tan(np.minimum(T + h, box.theta_max)) - rho),
                      np.abs(rho - np.tan(np.maximum(T - h, box.theta_min))))
    inner = np.ones(T.shape, bool)
    outer = np.ones(T.shape, bool)
    for xi, zi, yi in zip(x, z, y):
        f = yi * (zi - rho * xi - C)
        inner &= f >= 0
        outer &= f >= -(abs(xi) * drho + c_step / 2)
    return GridProjection(_extent(T, C, inner), _extent(T, C, outer), theta_step, c_step)


def grid_margin(points: Sequence[LabeledPoint], theta_step: float = MARGIN_THETA_STEP,
                c_step: float = MARGIN_C_STEP) -> tuple[float, float, float]:
    """Best (margin, rho, c) over a (theta, c) grid of non-vertical lines.

    For each angle only the intercepts that separate the data are scanned,
    which keeps the grid dense without scanning hopeless lines.
    """
    x, z, y = _arrays(points)
    best = (-math.inf, math.nan, math.nan)
    lim = math.pi / 2 - theta_step
    for t in _theta_grid(-lim, lim, theta_step):
        rho = math.tan(t)
        b = z - rho * x
        lo = b[y < 0].max() if np.any(y < 0) else b.min() - 1.0
        hi = b[y > 0].min() if np.any(y > 0) else b.max() + 1.0
        if hi <= lo:
            continue
        k0 = math.ceil(lo / c_step)
        k1 = math.floor(hi / c_step)
        if k1 < k0:
            continue
        cs = c_step * np.arange(k0, k1 + 1)
        marg = (y[:, None] * (b[:, None] - cs[None, :])).min(axis=0) * math.cos(t)
        k = int(np.argmax(marg))
        if marg[k] > best[0]:
            best = (float(marg[k]), rho, float(cs[k]))
    return best
