"""One-step controllers under label noise and the alternating noisy loop.

The stochastic problems keep the objective and workspace constraint of the
noiseless ones. Landing points must be uncertain under the anchor-only
polygon, since noisy labels cannot certify anything beyond the anchors. The
heading constraint comes from the belief: P3 avoids the slope set of every
hypothesis carrying at least ``weight_floor`` posterior, and P4 heads along
the slope set of the most probable hypothesis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .belief import (BeliefState, CredibleSet, belief_update, credible_sets,
                     initial_belief, map_hypothesis, truth_hypothesis)
from .control_det import StepRecord, plan_constrained, polygon_certainty
from .geometry import (AngleSet, Interval, LabeledPoint, ParamPolygon, certainty_labels,
                       certainty_penetration, feasible_polygon, intercept_interval, slope_set)
from .world import Action, AgentState, CounterRng, NoiseField, Scenario, observe, step

CERTAINTY_MODES = ("anchor", "belief")


@dataclass(frozen=True)
class SccConfig:
    """``p`` and ``m`` override the scenario's keep probability and horizon."""

    weight_floor: float = 0.05
    p: Optional[float] = None
    m: Optional[int] = None
    certainty: str = "anchor"

    def __post_init__(self):
        if not 0 <= self.weight_floor < 0.5:
            raise ValueError("weight_floor must lie in [0, 0.5)")
        if self.certainty not in CERTAINTY_MODES:
            raise ValueError(f"certainty must be one of {CERTAINTY_MODES}")
        if self.p is not None and not 0.5 < self.p <= 1:
            raise ValueError("keep probability must lie in (0.5, 1]")
        if self.m is not None and self.m < 0:
            raise ValueError("horizon must be >= 0")


def avoided_slopes(b: BeliefState, weight_floor: float) -> AngleSet:
    """Union of slope sets over hypotheses at or above the floor (MAP always included)."""
    ranked = b.ranked()
    keep = [h for h, w in ranked if w >= weight_floor] or [ranked[0][0]]
    return AngleSet.union(slope_set(h.polygon) for h in keep)


def belief_certainty(b: BeliefState):
    """Uncertain unless every surviving hypothesis certifies the same label."""
    polys = [h.polygon for h in b.hypotheses]

    def test(x, z):
        labels = np.stack([certainty_labels(p, x, z) for p in polys])
        same = np.all(labels == labels[0], axis=0) & (labels[0] != 0)
        pen = np.min(np.stack([certainty_penetration(p, x, z) for p in polys]), axis=0)
        return ~same, np.where(same, pen, 0.0)
    return test


def _certainty(b: BeliefState, anchor_poly: ParamPolygon, cfg: SccConfig):
    if cfg.certainty == "anchor":
        return polygon_certainty(anchor_poly)
    return belief_certainty(b)


def plan_p3(agent: AgentState, b: BeliefState, anchor_poly: ParamPolygon,
            scenario: Scenario, cfg: SccConfig) -> tuple[Action, str]:
    return plan_constrained(agent, scenario, _certainty(b, anchor_poly, cfg),
                            avoided_slopes(b, cfg.weight_floor), False, "P3")


def plan_p4(agent: AgentState, b: BeliefState, anchor_poly: ParamPolygon,
            scenario: Scenario, cfg: SccConfig) -> tuple[Action, str]:
    slopes = slope_set(map_hypothesis(b).polygon)
    return plan_constrained(agent, scenario, _certainty(b, anchor_poly, cfg),
                            slopes, True, "P4")


def solve_p3(agent: AgentState, b: BeliefState, anchor_poly: ParamPolygon,
             scenario: Scenario, cfg: SccConfig = SccConfig()) -> Action:
    """Move far, stay uncertain, cross every plausible slope."""
    return plan_p3(agent, b, anchor_poly, scenario, cfg)[0]


def solve_p4(agent: AgentState, b: BeliefState, anchor_poly: ParamPolygon,
             scenario: Scenario, cfg: SccConfig = SccConfig()) -> Action:
    """Move far, stay uncertain, head along the leading hypothesis's slopes."""
    return plan_p4(agent, b, anchor_poly, scenario, cfg)[0]


@dataclass(frozen=True)
class SccReport:
    theta_interval: Interval
    c_interval: Interval
    probability: float
    eps: str
    hypotheses: int

    def __str__(self) -> str:
        th = self.theta_interval
        ci = self.c_interval
        return (f"theta* in [{math.degrees(th.lo):.2f}, {math.degrees(th.hi):.2f}] deg, "
                f"c* in [{ci.lo:.3f}, {ci.hi:.3f}] m with probability {self.probability:.2f}")


@dataclass
class SccResult:
    records: list[StepRecord]
    belief: BeliefState
    report: SccReport
    anchor_polygon: ParamPolygon
    true_eps: list[int] = field(default_factory=list)
    history: list[BeliefState] = field(default_factory=list)

    @property
    def trajectory(self) -> list[tuple[AgentState, LabeledPoint]]:
        return [(r.state, r.point) for r in self.records]

    @property
    def actions(self) -> list[Action]:
        return [r.action for r in self.records[1:]]

    def credible(self, level: float) -> CredibleSet:
        return credible_sets(self.belief, level)

    def truth(self):
        return truth_hypothesis(self.belief, self.true_eps)


def summarize(b: BeliefState) -> SccReport:
    h = map_hypothesis(b)
    w = dict(zip((x.eps for x in b.hypotheses), b.weights()))[h.eps]
    return SccReport(slope_set(h.polygon).hull(), intercept_interval(h.polygon),
                     float(w), h.eps_string, len(b))


def run_scc(scenario: Scenario, cfg: SccConfig = SccConfig(), steps: Optional[int] = None,
            keep_history: bool = True) -> SccResult:
    """Noisy loop: P3 at even steps, P4 at odd steps, belief updated after each."""
    if scenario.noise is None:
        raise ValueError("run_scc needs a scenario with a noise field")
    nf = scenario.noise
    if cfg.p is not None:
        nf = NoiseField(nf.trusted_centers, nf.radius, cfg.p)
    m = steps if steps is not None else (cfg.m if cfg.m is not None else scenario.horizon)
    rng = CounterRng(scenario.seed)
    anchor_poly = feasible_polygon(scenario.anchors, scenario.initial_box)
    b = initial_belief(scenario.anchors, scenario.initial_box)
    agent = scenario.start
    y0 = scenario.anchors[0].label
    records = [StepRecord(0, agent, None, y0, y0, "start")]
    history = [b] if keep_history else []
    true_eps: list[int] = []
    for j in range(m):
        plan = plan_p3 if j % 2 == 0 else plan_p4
        action, stage = plan(agent, b, anchor_poly, scenario, cfg)
        agent = step(agent, action)
        obs, y = observe(nf, scenario.classifier, agent.pos, rng, step_index=j + 1)
        records.append(StepRecord(j + 1, agent, action, y, obs, stage))
        if obs != 0:
            b = belief_update(b, agent.pos, obs, nf)
            true_eps.append(obs * y)
        if keep_history:
            history.append(b)
    return SccResult(records, b, summarize(b), anchor_poly, true_eps, history)
