import math

import numpy as np
import pytest

from activesep.belief import BeliefState, Hypothesis, initial_belief, map_hypothesis, truth_hypothesis
from activesep.control_det import heading_direction, solve_p1
from activesep.control_stoch import (SccConfig, avoided_slopes, plan_p3, plan_p4, run_scc,
                                     solve_p3, solve_p4)
from activesep.geometry import (AngleSet, LabeledPoint, ParamPolygon, feasible_polygon,
                                slope_set)
from activesep.world import AgentState, Workspace, default_scenario
from helpers import brute_force_action, vertex_certainty

SC = default_scenario(stochastic=True)
ANCHOR_POLY = feasible_polygon(SC.anchors, SC.initial_box)


def rect(r0, r1, c0, c1):
    return ParamPolygon(((r0, c0), (r1, c0), (r1, c1), (r0, c1)))


def two_hypotheses(w_major, poly_major, poly_minor):
    hs = (Hypothesis((1,), (1,), poly_major, math.log(w_major)),
          Hypothesis((-1,), (-1,), poly_minor, math.log(1 - w_major)))
    return BeliefState(hs, 1)


def test_config_validation():
    for kw in ({"weight_floor": 0.6}, {"certainty": "both"}, {"p": 0.4}, {"m": -1}):
        with pytest.raises(ValueError):
            SccConfig(**kw)


def test_single_hypothesis_p3_is_p1():
    b = initial_belief(SC.anchors, SC.initial_box)
    for agent in (SC.start, AgentState(10.0, 7.6, 0.0), AgentState(15.0, 12.0, 2.0)):
        assert solve_p3(agent, b, ANCHOR_POLY, SC) == solve_p1(agent, ANCHOR_POLY, SC)


def test_light_hypotheses_are_not_avoided():
    heavy = rect(math.tan(0.1), math.tan(0.2), 3.0, 4.0)
    light = rect(math.tan(0.5), math.tan(0.6), 3.0, 4.0)
    b = two_hypotheses(0.97, heavy, light)
    s = avoided_slopes(b, 0.05)
    assert s.intervals == (pytest.approx((0.1, 0.2)),)
    both = avoided_slopes(b, 0.03)
    assert both.intervals == (pytest.approx((0.1, 0.2)), pytest.approx((0.5, 0.6)))


def test_map_is_avoided_even_below_the_floor():
    polys = [rect(math.tan(0.1 * k), math.tan(0.1 * k + 0.05), 3.0, 4.0) for k in range(25)]
    hs = tuple(Hypothesis((1,) * k + (-1,), (1,), p, math.log(1 / 25)) for k, p in enumerate(polys))
    b = BeliefState(hs, 1)
    s = avoided_slopes(b, 0.05)
    assert s.intervals == slope_set(map_hypothesis(b).polygon).intervals


def test_p4_heads_along_map_slopes():
    sc = SC.with_overrides(workspace=Workspace(-20, 20, -20, 20))
    heavy = rect(math.tan(0.30), math.tan(0.45), -1.0, 1.0)
    light = rect(math.tan(-0.6), math.tan(-0.5), -1.0, 1.0)
    b = two_hypotheses(0.8, heavy, light)
    a, stage = plan_p4(AgentState(0.0, 0.0, 0.0), b, heavy, sc, SccConfig())
    assert stage == "P4"
    assert 0.30 - 1e-12 <= heading_direction(a.w) <= 0.45 + 1e-12
    assert slope_set(heavy).intervals == (pytest.approx((0.30, 0.45), abs=1e-12),)
    want = brute_force_action(AgentState(0.0, 0.0, 0.0), sc, vertex_certainty(heavy),
                              slope_set(heavy).intervals, True)
    assert (a.v, a.w) == want


def test_p3_and_p4_match_brute_force():
    rng = np.random.default_rng(3)
    heavy = feasible_polygon(list(SC.anchors) + [LabeledPoint(10.0, 7.8, 1)], SC.initial_box)
    light = feasible_polygon(list(SC.anchors) + [LabeledPoint(10.0, 7.8, -1)], SC.initial_box)
    b = two_hypotheses(0.7, heavy, light)
    avoid = AngleSet.union([slope_set(heavy), slope_set(light)]).intervals
    for _ in range(4):
        agent = AgentState(float(rng.uniform(3, 17)), float(rng.uniform(5, 11)),
                           float(rng.uniform(-math.pi, math.pi)))
        a3, s3 = plan_p3(agent, b, ANCHOR_POLY, SC, SccConfig())
        w3 = brute_force_action(agent, SC, vertex_certainty(ANCHOR_POLY), avoid, False)
        if w3 is not None:
            assert s3 == "P3" and (a3.v, a3.w) == w3
        a4, s4 = plan_p4(agent, b, ANCHOR_POLY, SC, SccConfig())
        w4 = brute_force_action(agent, SC, vertex_certainty(ANCHOR_POLY),
                                slope_set(heavy).intervals, True)
        if w4 is not None:
            assert s4 == "P4" and (a4.v, a4.w) == w4


def test_zero_horizon():
    res = run_scc(SC, steps=0)
    assert len(res.records) == 1 and len(res.belief) == 1
    assert res.report.probability == pytest.approx(1.0)


def test_noiseless_scenario_is_refused():
    with pytest.raises(ValueError):
        run_scc(default_scenario())


def test_runs_are_reproducible():
    a, b = run_scc(SC), run_scc(SC)
    assert a.records == b.records
    assert [h.eps for h in a.belief.hypotheses] == [h.eps for h in b.belief.hypotheses]
    assert str(a.report) == str(b.report)


def test_schedule_alternates():
    res = run_scc(SC)
    for j, r in enumerate(res.records[1:]):
        assert r.problem.startswith("P3" if j % 2 == 0 else "P4")


def test_perfect_labels_give_the_noiseless_polygon():
    res = run_scc(SC, SccConfig(p=1.0))
    assert len(res.belief) == 1
    data = list(SC.anchors) + [r.point for r in res.records[1:] if r.observed_label != 0]
    assert res.belief.hypotheses[0].polygon == feasible_polygon(data, SC.initial_box)
    assert all(r.observed_label == r.true_label for r in res.records[1:])


def test_actions_are_argmax_after_the_fact():
    res = run_scc(SC)
    for j, r in enumerate(res.records[1:]):
        b = res.history[j]
        prev = res.records[j].state
        if j % 2 == 0:
            floor = [h for h, w in b.ranked() if w >= 0.05] or [b.ranked()[0][0]]
            slopes = AngleSet.union(slope_set(h.polygon) for h in floor).intervals
            want = brute_force_action(prev, SC, vertex_certainty(ANCHOR_POLY), slopes, False)
        else:
            slopes = slope_set(map_hypothesis(b).polygon).intervals
            want = brute_force_action(prev, SC, vertex_certainty(ANCHOR_POLY), slopes, True)
        if r.problem in ("P3", "P4"):
            assert (r.action.v, r.action.w) == want
        else:
            assert want is None


def test_truth_survives_every_step_over_seeds():
    for seed in range(10):
        res = run_scc(SC.with_overrides(seed=seed))
        k = 0
        for b in res.history[1:]:
            k = len(b.hypotheses[0].eps)
            h = truth_hypothesis(b, res.true_eps[:k])
            assert h is not None
            w = dict(zip((x.eps for x in b.hypotheses), b.weights()))[h.eps]
            assert w > 0
        assert res.truth() is not None


def test_belief_certainty_mode_runs():
    res = run_scc(SC, SccConfig(certainty="belief"))
    assert len(res.records) == 11 and res.truth() is not None


def test_report_text():
    res = run_scc(SC)
    text = str(res.report)
    assert text.startswith("theta* in [") and "with probability" in text
    assert 0 < res.report.probability <= 1
