"""Shared strategies and random fixtures for the test suite."""
import math

import numpy as np
from hypothesis import strategies as st

from activesep.geometry import LabeledPoint

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def datasets(draw, min_size=0, max_size=12, separable=None):
    """Labeled points in [-10, 10]^2; ``separable=True`` labels them by a random line."""
    n = draw(st.integers(min_size, max_size))
    xs = [draw(coord) for _ in range(n)]
    zs = [draw(coord) for _ in range(n)]
    if separable:
        rho = draw(st.floats(-1.5, 1.5))
        c = draw(st.floats(-5, 5))
        labels = [1 if z - rho * x - c > 0 else -1 for x, z in zip(xs, zs)]
        # keep points off the line so the labeling is unambiguous
        keep = [abs(z - rho * x - c) > 1e-6 for x, z in zip(xs, zs)]
        xs = [x for x, k in zip(xs, keep) if k]
        zs = [z for z, k in zip(zs, keep) if k]
        labels = [y for y, k in zip(labels, keep) if k]
    else:
        labels = [draw(st.sampled_from((-1, 1))) for _ in range(n)]
    return [LabeledPoint(x, z, y) for x, z, y in zip(xs, zs, labels)]


def random_dataset(rng, n, separable):
    pts = rng.uniform(-10, 10, (n, 2))
    if separable:
        rho, c = rng.uniform(-1, 1), rng.uniform(-5, 5)
        lab = np.where(pts[:, 1] - rho * pts[:, 0] - c > 0, 1, -1)
    else:
        lab = rng.choice([-1, 1], n)
    return [LabeledPoint(float(x), float(z), int(y)) for (x, z), y in zip(pts, lab)]


def brute_force_action(agent, scenario, certain_at, slopes, inside_set):
    """Plain-loop argmax of v^2 - varrho (v^2 + w^2) under the three constraints.

    ``certain_at(x, z)`` returns the certainty label of a landing point and
    ``slopes`` is a list of closed (lo, hi) line-angle intervals. Returns the
    best (v, w) or None if nothing is feasible; ties go to the smallest (v, w).
    """
    ws = scenario.workspace
    best = None
    for v in scenario.v_grid:
        for w in scenario.w_grid:
            th = math.atan2(math.sin(agent.theta + w), math.cos(agent.theta + w))
            x, z = agent.x + v * math.cos(th), agent.z + v * math.sin(th)
            if not (ws.x_min - 1e-12 <= x <= ws.x_max + 1e-12 and ws.z_min - 1e-12 <= z <= ws.z_max + 1e-12):
                continue
            if certain_at(x, z) != 0:
                continue
            d = math.atan(math.tan(th)) if abs(math.cos(th)) > 1e-15 else -math.pi / 2
            member = any(lo - 1e-12 <= d <= hi + 1e-12 for lo, hi in slopes)
            if member != inside_set:
                continue
            J = v * v - scenario.varrho * (v * v + w * w)
            if best is None or J > best[0] + 1e-15:
                best = (J, v, w)
    return None if best is None else (best[1], best[2])


def vertex_certainty(poly, tau=1e-9):
    """Certainty label by direct evaluation at the polygon vertices."""
    def label(x, z):
        f = [z - r * x - c for r, c in poly.vertices]
        if min(f) >= -tau and max(f) > tau:
            return 1
        if max(f) <= tau and min(f) < -tau:
            return -1
        return 0
    return label
