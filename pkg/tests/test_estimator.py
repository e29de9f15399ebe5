import math

import numpy as np
import pytest
from hypothesis import given

from activesep.estimator import (Estimate, bisector_estimate, bisector_from_pairs,
                                 estimation_error, margin_of, max_margin_estimate,
                                 midpoint_line, polygon_center_estimate)
from activesep.geometry import (InsufficientSpread, LabeledPoint, ParamBox, ParamPolygon,
                                feasible_polygon)
from activesep.oracles import grid_margin
from activesep.world import TrueClassifier
from helpers import datasets, random_dataset


def P(x, z, y):
    return LabeledPoint(float(x), float(z), y)


PAIR_A = (P(0, -1, -1), P(0, 1, 1))
PAIR_B = (P(10, 9, -1), P(10, 11, 1))
SYM4 = [P(0, -1, -1), P(0, 1, 1), P(10, 9, -1), P(10, 11, 1)]


# --- bisector -----------------------------------------------------------------------------

def test_bisector_of_symmetric_quadrilateral():
    e = bisector_from_pairs(PAIR_A, PAIR_B)
    assert e.method == "bisector"
    # numeric angle bisection at (5, 5), run once and frozen
    assert e.rho == pytest.approx(0.98020, abs=1e-5)
    assert e.c == pytest.approx(0.09900, abs=1e-5)
    assert 5 - e.rho * 5 - e.c == pytest.approx(0, abs=1e-12)


def test_bisector_passes_through_diagonal_intersection():
    rng = np.random.default_rng(2)
    for _ in range(20):
        q = rng.uniform(-5, 5, (4, 2))
        pa = (P(*q[0], -1), P(*q[1], 1))
        pb = (P(*q[3], -1), P(*q[2], 1))
        e = bisector_from_pairs(pa, pb)
        if e.method != "bisector":
            continue
        # intersection of p1-p3 and p2-p4
        A = np.array([q[2] - q[0], -(q[3] - q[1])]).T
        t = np.linalg.solve(A, q[1] - q[0])
        pm = q[0] + t[0] * (q[2] - q[0])
        assert pm[1] - e.rho * pm[0] - e.c == pytest.approx(0, abs=1e-8)
        # equal angles to the rays towards p1 and p2
        d = np.array([1.0, e.rho]) / math.hypot(1, e.rho)
        u1 = (q[0] - pm) / np.linalg.norm(q[0] - pm)
        u2 = (q[1] - pm) / np.linalg.norm(q[1] - pm)
        assert abs(d @ u1) == pytest.approx(abs(d @ u2), abs=1e-9)


def test_midpoint_line_through_pair_midpoints():
    e = midpoint_line(PAIR_A, PAIR_B)
    assert (e.rho, e.c, e.method) == (pytest.approx(1.0), pytest.approx(0.0), "midpoint_line")


def test_parallel_diagonals_fall_back_to_midpoint_line():
    # p1-p3 runs along (2, 2) and p2-p4 along (4, 4)
    pa = (P(0, 0, -1), P(0, 1, 1))
    pb = (P(4, 5, -1), P(2, 2, 1))
    e = bisector_from_pairs(pa, pb)
    assert e.method == "midpoint_line"


def test_bisector_estimate_needs_spread():
    with pytest.raises(InsufficientSpread):
        bisector_estimate([P(0, 1, 1), P(0, -1, -1), P(1, 1, 1), P(1, -1, -1)], 5.0)


def test_bisector_estimate_on_dataset():
    e = bisector_estimate(SYM4 + [P(20, 40, 1), P(20, -30, -1)], 5.0)
    assert e.rho == pytest.approx(0.98020, abs=1e-5)


# --- max margin -----------------------------------------------------------------------------

def test_max_margin_symmetric_fixture():
    e, m = max_margin_estimate(SYM4)
    assert e.rho == pytest.approx(1.0, abs=1e-9) and e.c == pytest.approx(0.0, abs=1e-9)
    assert m == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_max_margin_two_points():
    e, m = max_margin_estimate([P(0, 1, 1), P(0, -1, -1)])
    assert e.rho == pytest.approx(0.0, abs=1e-12) and e.c == pytest.approx(0.0, abs=1e-12)
    assert m == pytest.approx(1.0)


def test_max_margin_rejects_bad_input():
    with pytest.raises(ValueError):
        max_margin_estimate([P(0, 0, 1), P(1, 1, 1), P(0, 1, -1), P(1, 0, -1)])
    with pytest.raises(ValueError):
        max_margin_estimate([P(0, 0, 1), P(1, 1, 1)])


def test_max_margin_matches_grid_oracle():
    rng = np.random.default_rng(8)
    done = 0
    while done < 10:
        pts = random_dataset(rng, 10, separable=True)
        if len({p.label for p in pts}) < 2:
            continue
        e, m = max_margin_estimate(pts)
        g, _, _ = grid_margin(pts)
        assert m >= g - 1e-4
        assert m - g <= 5e-3
        done += 1


@given(datasets(min_size=2, max_size=10, separable=True))
def test_max_margin_beats_random_feasible_lines(pts):
    if len({p.label for p in pts}) < 2:
        return
    e, m = max_margin_estimate(pts)
    assert all(np.sign(p.z - e.rho * p.x - e.c) == p.label for p in pts)
    poly = feasible_polygon(pts, ParamBox(-1.5, 1.5, -100, 100))
    V = poly.as_array()
    rng = np.random.default_rng(len(pts))
    for _ in range(1000):
        rho, c = rng.dirichlet(np.ones(len(V))) @ V
        assert margin_of(rho, c, pts) <= m + 1e-9


# --- polygon centre ---------------------------------------------------------------------------

def test_polygon_center_of_square():
    e = polygon_center_estimate(ParamPolygon(((0.0, 2.0), (1.0, 2.0), (1.0, 4.0), (0.0, 4.0))))
    assert (e.rho, e.c) == (0.5, 3.0)


def test_polygon_center_of_point():
    e = polygon_center_estimate(ParamPolygon(((0.3, 1.2),)))
    assert (e.rho, e.c) == (0.3, 1.2)


def test_polygon_center_of_empty_polygon():
    with pytest.raises(ValueError):
        polygon_center_estimate(ParamPolygon())


def test_polygon_center_inside_anchor_polygon(anchors):
    poly = feasible_polygon(anchors, ParamBox(-1.2, 1.2, -10, 10))
    e = polygon_center_estimate(poly)
    assert poly.contains(e.rho, e.c)


@given(datasets(min_size=1, max_size=10, separable=True))
def test_polygon_center_classifies_all_points(pts):
    poly = feasible_polygon(pts, ParamBox(-1.5, 1.5, -100, 100))
    if poly.is_empty:
        return
    e = polygon_center_estimate(poly)
    assert poly.contains(e.rho, e.c, tol=1e-7)
    for p in pts:
        f = p.z - e.rho * p.x - e.c
        assert p.label * f >= -1e-7


# --- errors -------------------------------------------------------------------------------------

def test_identical_lines_have_zero_error():
    assert estimation_error(Estimate(0.41, 3.5, "bisector"), TrueClassifier(0.41, 3.5)) == (0, 0)


def test_reported_estimate_error():
    dth, dc = estimation_error(Estimate(0.38, 3.6, "bisector"), TrueClassifier(0.41, 3.5))
    assert dth == pytest.approx(0.0259, abs=1e-4)
    assert math.degrees(dth) == pytest.approx(1.49, abs=0.01)
    assert dc == pytest.approx(0.1)


def test_unit_slope_against_flat_line():
    dth, dc = estimation_error(Estimate(1.0, 0.0, "max_margin"), TrueClassifier(0.0, 0.0))
    assert dth == pytest.approx(math.pi / 4) and dc == 0


def test_estimate_validation():
    with pytest.raises(ValueError):
        Estimate(0.0, 0.0, "ransac")
    with pytest.raises(ValueError):
        Estimate(math.inf, 0.0, "bisector")


# --- convergence surrogate ---------------------------------------------------------------------

@pytest.mark.parametrize("rho,c", [(0.41, 3.5), (-0.8, 1.0), (0.0, -2.0)])
def test_estimators_converge_as_pairs_close_in(rho, c):
    cl = TrueClassifier(rho, c)
    t = np.array([1.0, rho]) / math.hypot(1, rho)
    n = np.array([-rho, 1.0]) / math.hypot(1, rho)
    base_a = np.array([0.0, c])
    base_b = base_a + 12 * t
    errs = []
    for eps in (1.0, 0.1, 0.01, 0.001):
        # each pair straddles the line at distance eps, with a small tangential skew
        a = (P(*(base_a - eps * n + 0.3 * eps * t), -1), P(*(base_a + eps * n), 1))
        b = (P(*(base_b - eps * n), -1), P(*(base_b + eps * n - 0.2 * eps * t), 1))
        data = list(a) + list(b)
        row = []
        for e in (bisector_from_pairs(a, b), midpoint_line(a, b), max_margin_estimate(data)[0],
                  polygon_center_estimate(feasible_polygon(data, ParamBox(-1.4, 1.4, -50, 50)))):
            row.append(max(estimation_error(e, cl)[0], estimation_error(e, cl)[1]))
        errs.append(row)
    errs = np.array(errs)
    assert np.all(errs[-1] < 5e-3)
    assert np.all(errs[-1] <= errs[0] + 1e-12)
    assert np.all(np.diff(errs, axis=0) <= 1e-9)
