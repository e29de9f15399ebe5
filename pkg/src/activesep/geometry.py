"""Version-space geometry for 2D linear classifiers ``z = rho * x + c``.

A labeled point ``(x, z, y)`` constrains the parameters through the
halfplane ``y * (z - rho * x - c) >= 0``.  Intersecting these halfplanes
with a parameter box gives a convex polygon in ``(rho, c)`` space: the set
of classifiers consistent with the data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DEDUP_TOL = 1e-9
CERTAINTY_TOL = 1e-9
DEGENERATE_AREA = 1e-12
PAIR_TIE_TOL = 1e-9


class InsufficientSpread(ValueError):
    """No second opposite-label pair satisfies the separation requirement."""


class LabeledPoint(NamedTuple):
    x: float
    z: float
    label: int


@dataclass(frozen=True)
class ParamBox:
    theta_min: float
    theta_max: float
    c_min: float
    c_max: float

    def __post_init__(self):
        vals = (self.theta_min, self.theta_max, self.c_min, self.c_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite parameter box {vals}")
        if not (-math.pi / 2 < self.theta_min < self.theta_max < math.pi / 2):
            raise ValueError(
                f"need -pi/2 < theta_min < theta_max < pi/2, got "
                f"[{self.theta_min}, {self.theta_max}]")
        if not self.c_min < self.c_max:
            raise ValueError(f"need c_min < c_max, got [{self.c_min}, {self.c_max}]")

    @property
    def rho_range(self) -> tuple[float, float]:
        return math.tan(self.theta_min), math.tan(self.theta_max)

    def image(self) -> "ParamPolygon":
        r0, r1 = self.rho_range
        return ParamPolygon(((r0, self.c_min), (r1, self.c_min),
                             (r1, self.c_max), (r0, self.c_max)))

    def contains(self, rho: float, c: float) -> bool:
        th = math.atan(rho)
        return self.theta_min <= th <= self.theta_max and self.c_min <= c <= self.c_max


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @classmethod
    def empty(cls) -> "Interval":
        return cls(math.nan, math.nan)

    @property
    def is_empty(self) -> bool:
        return math.isnan(self.lo) or math.isnan(self.hi)

    @property
    def width(self) -> float:
        return 0.0 if self.is_empty else self.hi - self.lo

    def contains(self, v: float, tol: float = 0.0) -> bool:
        return not self.is_empty and self.lo - tol <= v <= self.hi + tol

    def hull(self, other: "Interval") -> "Interval":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))


@dataclass(frozen=True)
class AngleSet:
    """Disjoint, sorted union of closed angle intervals in (-pi/2, pi/2)."""

    intervals: tuple[tuple[float, float], ...] = ()

    @classmethod
    def union(cls, sets: Iterable["AngleSet"]) -> "AngleSet":
        spans = sorted(iv for s in sets for iv in s.intervals)
        merged: list[list[float]] = []
        for lo, hi in spans:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return cls(tuple((lo, hi) for lo, hi in merged))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def hull(self) -> Interval:
        if self.is_empty:
            return Interval.empty()
        return Interval(self.intervals[0][0], self.intervals[-1][1])

    def contains(self, angle: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= angle <= hi + tol for lo, hi in self.intervals)

    def contains_many(self, angles: np.ndarray, tol: float = 0.0) -> np.ndarray:
        mask = np.zeros(np.shape(angles), dtype=bool)
        for lo, hi in self.intervals:
            mask |= (angles >= lo - tol) & (angles <= hi + tol)
        return mask


@dataclass(frozen=True)
class ParamPolygon:
    """Convex polygon in (rho, c) space, counterclockwise.  No vertices = infeasible."""

    vertices: tuple[tuple[float, float], ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float).reshape(-1, 2)

    @property
    def area(self) -> float:
        v = self.vertices
        n = len(v)
        if n < 3:
            return 0.0
        s = 0.0
        for i in range(n):
            x0, y0 = v[i]
            x1, y1 = v[(i + 1) % n]
            s += x0 * y1 - x1 * y0
        return 0.5 * s

    @property
    def is_degenerate(self) -> bool:
        return not self.is_empty and self.area < DEGENERATE_AREA

    def centroid(self) -> tuple[float, float]:
        if self.is_empty:
            raise ValueError("empty polygon has no centroid")
        arr = self.as_array()
        return float(arr[:, 0].mean()), float(arr[:, 1].mean())

    def contains(self, rho: float, c: float, tol: float = 1e-9) -> bool:
        v = self.vertices
        n = len(v)
        if n == 0:
            return False
        if n == 1:
            return math.hypot(rho - v[0][0], c - v[0][1]) <= tol
        if n == 2:
            return _dist_to_segment((rho, c), v[0], v[1]) <= tol
        for i in range(n):
            (x0, y0), (x1, y1) = v[i], v[(i + 1) % n]
            ex, ey = x1 - x0, y1 - y0
            cross = ex * (c - y0) - ey * (rho - x0)
            if cross < -tol * math.hypot(ex, ey):
                return False
        return True

    def contains_polygon(self, other: "ParamPolygon", tol: float = 1e-9) -> bool:
        return all(self.contains(r, c, tol) for r, c in other.vertices)

    def clip(self, p: LabeledPoint) -> "ParamPolygon":
        """Intersect with the halfplane consistent with one labeled point."""
        y = p.label
        return ParamPolygon(_clip_halfplane(self.vertices, -y * p.x, -float(y), y * p.z))


def _dist_to_segment(q, a, b) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((q[0] - ax) * dx + (q[1] - ay) * dy) / L2))
    return math.hypot(q[0] - ax - t * dx, q[1] - ay - t * dy)


def _dedup(pts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    for p in pts:
        if not out or abs(p[0] - out[-1][0]) > DEDUP_TOL or abs(p[1] - out[-1][1]) > DEDUP_TOL:
            out.append(p)
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) <= DEDUP_TOL \
            and abs(out[0][1] - out[-1][1]) <= DEDUP_TOL:
        out.pop()
    return out


def _clip_halfplane(verts, a: float, b: float, c: float):
    """Keep the part of a convex polygon where ``a*rho + b*c_ + c >= 0``."""
    if not verts:
        return ()
    vals = [a * r + b * q + c for r, q in verts]
    scale = max(1.0, abs(c), max(abs(a * r) + abs(b * q) for r, q in verts))
    tol = 1e-12 * scale
    if min(vals) >= -tol:
        return tuple(verts)
    if max(vals) < -tol:
        return ()
    out = []
    n = len(verts)
    for i in range(n):
        P, vp = verts[i], vals[i]
        j = (i + 1) % n
        Q, vq = verts[j], vals[j]
        p_in, q_in = vp >= -tol, vq >= -tol
        if p_in:
            out.append(P)
        if p_in != q_in:
            t = min(1.0, max(0.0, vp / (vp - vq)))
            out.append((P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])))
    return tuple(_dedup(out))


def _check_labels(points: Sequence[LabeledPoint]) -> None:
    for p in points:
        if p.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1 for separability, got {p.label} at ({p.x}, {p.z})")


def feasible_polygon(points: Sequence[LabeledPoint], box: ParamBox) -> ParamPolygon:
    """Classifiers ``(rho, c)`` inside ``box`` that label every point correctly (margin 0)."""
    _check_labels(points)
    poly = box.image()
    for p in points:
        poly = poly.clip(p)
        if poly.is_empty:
            break
    return poly


# A classifier keeps positives on the side of its upward normal.  The plain
# frame covers line angles |theta| <= 1.2; the two quarter-turned frames cover
# the steep remainder, each restricted to normals that stay upward.
_SEP_FRAMES = (
    (lambda xy: xy, ParamBox(-1.2, 1.2, -3.0, 3.0)),
    (lambda xy: np.column_stack([-xy[:, 1], xy[:, 0]]), ParamBox(1e-6, 0.5, -3.0, 3.0)),
    (lambda xy: np.column_stack([xy[:, 1], -xy[:, 0]]), ParamBox(-0.5, -1e-6, -3.0, 3.0)),
)


def is_separable(points: Sequence[LabeledPoint]) -> bool:
    """True iff some non-vertical ``z = rho*x + c`` strictly puts +1 above and -1 below."""
    _check_labels(points)
    labels = {p.label for p in points}
    if len(labels) < 2:
        return True
    xy = np.array([(p.x, p.z) for p in points], dtype=float)
    y = np.array([p.label for p in points])
    xy -= xy.mean(axis=0)
    r = np.hypot(xy[:, 0], xy[:, 1]).max()
    if r > 0:
        xy /= r
    for rotate, box in _SEP_FRAMES:
        rotated = rotate(xy)
        pts = [LabeledPoint(float(a), float(b), int(l)) for (a, b), l in zip(rotated, y)]
        poly = feasible_polygon(pts, box)
        if poly.is_empty:
            continue
        rho, c = poly.centroid()
        slack = y * (rotated[:, 1] - rho * rotated[:, 0] - c)
        if slack.min() > 1e-12:
            return True
    return False


def slope_set(poly: ParamPolygon) -> AngleSet:
    if poly.is_empty:
        return AngleSet()
    rhos = [r for r, _ in poly.vertices]
    return AngleSet(((math.atan(min(rhos)), math.atan(max(rhos))),))


def intercept_interval(poly: ParamPolygon) -> Interval:
    if poly.is_empty:
        return Interval.empty()
    cs = [c for _, c in poly.vertices]
    return Interval(min(cs), max(cs))


def _vertex_values(poly: ParamPolygon, x, z) -> np.ndarray:
    """``z - rho*x - c`` at every vertex; shape ``(..., n_vertices)``."""
    v = poly.as_array()
    x = np.asarray(x, dtype=float)[..., None]
    z = np.asarray(z, dtype=float)[..., None]
    return z - v[:, 0] * x - v[:, 1]


def certainty_labels(poly: ParamPolygon, x, z, tau: float = CERTAINTY_TOL) -> np.ndarray:
    """Vectorised :func:`certainty_label` over arrays of positions."""
    if poly.is_empty:
        raise ValueError("certainty is undefined for an empty polygon")
    f = _vertex_values(poly, x, z)
    lo, hi = f.min(axis=-1), f.max(axis=-1)
    out = np.zeros(lo.shape, dtype=int)
    out[(lo >= -tau) & (hi > tau)] = 1
    out[(hi <= tau) & (lo < -tau)] = -1
    return out


def certainty_label(poly: ParamPolygon, p, tau: float = CERTAINTY_TOL) -> int:
    """+1/-1 if every classifier in ``poly`` gives ``p`` that label, else 0."""
    return int(certainty_labels(poly, p[0], p[1], tau))


def certainty_penetration(poly: ParamPolygon, x, z) -> np.ndarray:
    """How far (in f units) a position sits inside a region of certainty; 0 if uncertain."""
    f = _vertex_values(poly, x, z)
    lo, hi = f.min(axis=-1), f.max(axis=-1)
    pen = np.zeros(lo.shape)
    pos = lo >= 0
    neg = hi <= 0
    pen[pos] = lo[pos]
    pen[neg] = -hi[neg]
    return pen


def closest_opposite_pairs(points: Sequence[LabeledPoint], min_separation: float):
    """Two disjoint opposite-label pairs of smallest length.

    Returns ``(pair_a, pair_b)``, each a ``(negative, positive)`` tuple.  The
    second pair's midpoint must be at least ``min_separation`` from the first's.
    """
    neg = [p for p in points if p.label == -1]
    pos = [p for p in points if p.label == 1]
    if len(neg) < 2 or len(pos) < 2:
        raise InsufficientSpread("need at least two points of each label")
    # distances equal to within PAIR_TIE_TOL count as ties, so consecutive
    # full-speed steps do not get ordered by rounding noise
    cands = sorted(
        (round(math.hypot(n.x - q.x, n.z - q.z) / PAIR_TIE_TOL), n.x, n.z, q.x, q.z, i, j)
        for i, n in enumerate(neg) for j, q in enumerate(pos)
    )
    first = cands[0]
    _, _, _, _, _, ia, ja = first
    pair_a = (neg[ia], pos[ja])
    mid_a = ((pair_a[0].x + pair_a[1].x) / 2, (pair_a[0].z + pair_a[1].z) / 2)
    for _, nx, nz, qx, qz, i, j in cands[1:]:
        if i == ia or j == ja:
            continue
        mid = ((nx + qx) / 2, (nz + qz) / 2)
        if math.hypot(mid[0] - mid_a[0], mid[1] - mid_a[1]) >= min_separation:
            return pair_a, (neg[i], pos[j])
    raise InsufficientSpread(
        f"no disjoint opposite-label pair with midpoint separation >= {min_separation}")
