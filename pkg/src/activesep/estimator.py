"""Classifier estimates from a labeled dataset and their parameter errors."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import LabeledPoint, ParamPolygon, closest_opposite_pairs, is_separable
from .world import TrueClassifier

METHODS = ("bisector", "max_margin", "polygon_center", "midpoint_line")

# slope used when the widest margin belongs to a vertical line
NEAR_VERTICAL_SLOPE = 1e8


@dataclass(frozen=True)
class Estimate:
    rho: float
    c: float
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not (math.isfinite(self.rho) and math.isfinite(self.c)):
            raise ValueError("estimate must be finite")

    @property
    def theta(self) -> float:
        return math.atan(self.rho)


def _line_through(p, d, method: str) -> Estimate:
    if abs(d[0]) < 1e-12 * max(1.0, abs(d[1])):
        raise ZeroDivisionError("vertical line")
    rho = d[1] / d[0]
    return Estimate(rho, p[1] - rho * p[0], method)


def midpoint_line(pair_a, pair_b) -> Estimate:
    ma = np.array([(pair_a[0].x + pair_a[1].x) / 2, (pair_a[0].z + pair_a[1].z) / 2])
    mb = np.array([(pair_b[0].x + pair_b[1].x) / 2, (pair_b[0].z + pair_b[1].z) / 2])
    try:
        return _line_through(ma, mb - ma, "midpoint_line")
    except ZeroDivisionError:
        raise ValueError("pair midpoints are vertically aligned") from None


def bisector_from_pairs(pair_a, pair_b) -> Estimate:
    """Angle-bisector line of the quadrilateral spanned by two opposite-label pairs.

    ``pair_a = (p1, p2)`` and ``pair_b = (p4, p3)`` as (negative, positive).
    The diagonals p1-p3 and p2-p4 each join opposite labels; the estimate
    passes through their intersection and bisects the angle p1, pm, p2.
    """
    p1, p2 = (np.array([q.x, q.z], float) for q in pair_a)
    p4, p3 = (np.array([q.x, q.z], float) for q in pair_b)
    d1, d2 = p3 - p1, p4 - p2
    den = d1[0] * d2[1] - d1[1] * d2[0]
    scale = np.linalg.norm(d1) * np.linalg.norm(d2)
    if scale == 0 or abs(den) < 1e-12 * scale:
        return midpoint_line(pair_a, pair_b)
    r = p2 - p1
    t = (r[0] * d2[1] - r[1] * d2[0]) / den
    pm = p1 + t * d1
    u1, u2 = p1 - pm, p2 - pm
    n1, n2 = np.linalg.norm(u1), np.linalg.norm(u2)
    if n1 == 0 or n2 == 0:
        return midpoint_line(pair_a, pair_b)
    bis = u1 / n1 + u2 / n2
    if np.linalg.norm(bis) < 1e-12:
        return midpoint_line(pair_a, pair_b)
    try:
        return _line_through(pm, bis, "bisector")
    except ZeroDivisionError:
        return midpoint_line(pair_a, pair_b)


def bisector_estimate(dataset: Sequence[LabeledPoint], min_separation: float) -> Estimate:
    pair_a, pair_b = closest_opposite_pairs(dataset, min_separation)
    return bisector_from_pairs(pair_a, pair_b)


def margin_of(rho: float, c: float, dataset: Sequence[LabeledPoint]) -> float:
    """Signed minimum distance; negative if some point is misclassified."""
    pts = np.array([(p.x, p.z, p.label) for p in dataset], float)
    f = pts[:, 2] * (pts[:, 1] - rho * pts[:, 0] - c)
    return float(f.min() / math.hypot(1.0, rho))


def _candidate_lines(pts: np.ndarray, y: np.ndarray):
    """Unit normals ``n`` and offsets ``b`` with n . p = b, from support pairs and triples."""
    n = len(pts)
    for i, j in itertools.combinations(range(n), 2):
        pi, pj = pts[i], pts[j]
        if y[i] != y[j]:
            d = pj - pi
            L = np.linalg.norm(d)
            if L == 0:
                continue
            nrm = d / L
            yield nrm, float(nrm @ (pi + pj) / 2)
        else:
            d = pj - pi
            L = np.linalg.norm(d)
            if L == 0:
                continue
            nrm = np.array([-d[1], d[0]]) / L
            b0 = float(nrm @ pi)
            for k in range(n):
                if y[k] != y[i]:
                    yield nrm, 0.5 * (b0 + float(nrm @ pts[k]))


def max_margin_estimate(dataset: Sequence[LabeledPoint]) -> tuple[Estimate, float]:
    """Exact hard-margin separator by enumerating support sets.

    With the unit normal ``n`` kept upward (positives above the line), the
    widest margin is fixed either by one opposite-label pair (perpendicular
    bisector), by two same-label points and one point of the other label
    (parallel to the pair, halfway to the third), or by the vertical limit
    ``n_z = 0``.
    """
    if len({p.label for p in dataset}) < 2:
        raise ValueError("max-margin needs both labels")
    if not is_separable(dataset):
        raise ValueError("dataset is not linearly separable")
    pts = np.array([(p.x, p.z) for p in dataset], float)
    y = np.array([p.label for p in dataset], float)
    pos, neg = pts[y > 0], pts[y < 0]
    best = None

    def consider(nrm, b):
        nonlocal best
        s = pts @ nrm - b
        marg = float((y * s).min())
        if marg > 0 and (best is None or marg > best[0] + 1e-15):
            best = (marg, nrm, b)

    for nrm, b in _candidate_lines(pts, y):
        for sgn in (1.0, -1.0):
            n = sgn * nrm
            if n[1] > 1e-12:
                consider(n, sgn * b)
    for nx in (1.0, -1.0):
        n = np.array([nx, 0.0])
        lo, hi = (pos @ n).min(), (neg @ n).max()
        consider(n, 0.5 * (lo + hi))
    if best is None:
        raise ValueError("no separating candidate found")
    marg, (nx, nz), b = best
    if nz <= 1e-12:
        # vertical optimum: tilt by a negligible angle, upward normal kept
        xm = b / nx
        rho = -nx * NEAR_VERTICAL_SLOPE
        zc = float(pts[:, 1].mean())
        c = zc - rho * xm
        return Estimate(rho, c, "max_margin"), margin_of(rho, c, dataset)
    rho = -nx / nz
    c = b / nz
    return Estimate(rho, c, "max_margin"), marg


def polygon_center_estimate(poly: ParamPolygon) -> Estimate:
    rho, c = poly.centroid()
    return Estimate(rho, c, "polygon_center")


def estimation_error(e: Estimate, cl: TrueClassifier) -> tuple[float, float]:
    return abs(math.atan(e.rho) - math.atan(cl.rho_star)), abs(e.c - cl.c_star)
