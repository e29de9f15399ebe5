"""Greedy one-step controllers over a finite action grid and the noiseless loop.

Both one-step problems maximise ``v^2 - varrho * (v^2 + w^2)`` over the grid
subject to staying in the workspace, landing on a position whose label is
still uncertain, and a constraint on the new heading relative to the set of
candidate classifier slopes: P1 keeps the heading *out* of that set (so the
agent crosses the boundary eventually), P2 keeps it *in* the set.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .geometry import (AngleSet, LabeledPoint, ParamPolygon, certainty_labels,
                       certainty_penetration, feasible_polygon, slope_set)
from .world import Action, AgentState, Scenario, observe, step

log = logging.getLogger(__name__)

BISECTOR_TOL = 0.25
# closed heading sets: absorb the last-ulp disagreement between angle reductions
HEADING_TOL = 1e-12


class ControllerStuck(RuntimeError):
    """No action survives even the last rung of the relaxation ladder."""


@lru_cache(maxsize=16)
def _grid(v_grid: tuple, w_grid: tuple, varrho: float):
    V, W = np.meshgrid(np.asarray(v_grid, float), np.asarray(w_grid, float), indexing="ij")
    V, W = V.ravel(), W.ravel()
    J = V**2 - varrho * (V**2 + W**2)
    return V, W, J


def heading_direction(theta) -> np.ndarray:
    """Direction of travel as a line angle in [-pi/2, pi/2)."""
    return np.mod(np.asarray(theta) + math.pi / 2, math.pi) - math.pi / 2


def _line_angle_diff(a, b) -> np.ndarray:
    d = np.mod(np.asarray(a) - b + math.pi / 2, math.pi) - math.pi / 2
    return np.abs(d)


@dataclass
class Candidates:
    """Every grid action evaluated from one agent state."""

    V: np.ndarray
    W: np.ndarray
    J: np.ndarray
    theta: np.ndarray
    x: np.ndarray
    z: np.ndarray
    inside: np.ndarray

    @property
    def direction(self) -> np.ndarray:
        return heading_direction(self.theta)


def evaluate_grid(agent: AgentState, scenario: Scenario) -> Candidates:
    V, W, J = _grid(tuple(scenario.v_grid), tuple(scenario.w_grid), float(scenario.varrho))
    th = np.mod(agent.theta + W + math.pi, 2 * math.pi) - math.pi
    x = agent.x + V * np.cos(th)
    z = agent.z + V * np.sin(th)
    ws = scenario.workspace
    tol = 1e-12
    inside = ((x >= ws.x_min - tol) & (x <= ws.x_max + tol)
              & (z >= ws.z_min - tol) & (z <= ws.z_max + tol))
    return Candidates(V, W, J, th, x, z, inside)


def heading_mask(cand: Candidates, slopes: AngleSet, inside_set: bool,
                 track_bisector: bool = False) -> np.ndarray:
    d = cand.direction
    member = slopes.contains_many(d, HEADING_TOL)
    mask = member if inside_set else ~member
    if track_bisector and not slopes.is_empty:
        hull = slopes.hull()
        mid = 0.5 * (hull.lo + hull.hi)
        target = mid if inside_set else mid + math.pi / 2
        mask &= _line_angle_diff(d, target) <= BISECTOR_TOL
    return mask


def _argmax(J: np.ndarray, mask: np.ndarray) -> int:
    # grid order is v-major, w ascending: the first maximiser is the
    # lexicographically smallest (v, w)
    idx = np.flatnonzero(mask)
    return int(idx[np.argmax(J[idx])])


def select_action(agent: AgentState, cand: Candidates, uncertain: np.ndarray,
                  penetration: np.ndarray, heading_ok: np.ndarray,
                  slopes: AngleSet, name: str) -> tuple[Action, str]:
    """Constrained argmax with the relaxation ladder.

    Rungs: full constraints; drop the heading constraint; the least-penetrating
    move into a region of certainty; pure rotation towards the direction
    perpendicular to the middle candidate slope.
    """
    full = cand.inside & uncertain & heading_ok
    if full.any():
        i = _argmax(cand.J, full)
        return Action(float(cand.V[i]), float(cand.W[i])), name
    relaxed = cand.inside & uncertain
    if relaxed.any():
        log.info("%s: heading constraint dropped", name)
        i = _argmax(cand.J, relaxed)
        return Action(float(cand.V[i]), float(cand.W[i])), name + "-a"
    moving = cand.inside & (cand.V > 0)
    if moving.any():
        idx = np.flatnonzero(moving)
        # least penetration first, then best objective, then grid order
        order = np.lexsort((idx, -cand.J[idx], penetration[idx]))
        i = int(idx[order[0]])
        log.warning("%s: entering a region of certainty (penetration %.3g)", name, penetration[i])
        return Action(float(cand.V[i]), float(cand.W[i])), name + "-b"
    still = cand.V == 0
    if still.any():
        hull = slopes.hull()
        target = agent.theta if hull.is_empty else 0.5 * (hull.lo + hull.hi) + math.pi / 2
        idx = np.flatnonzero(still)
        err = _line_angle_diff(cand.theta[idx], target)
        i = int(idx[np.lexsort((np.abs(cand.W[idx]), err))[0]])
        log.warning("%s: pure rotation fallback", name)
        return Action(0.0, float(cand.W[i])), name + "-c"
    raise ControllerStuck(f"{name}: no admissible action from ({agent.x:.4g}, {agent.z:.4g})")


def plan_constrained(agent: AgentState, scenario: Scenario,
                     certainty: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]],
                     slopes: AngleSet, inside_set: bool, name: str) -> tuple[Action, str]:
    """Grid argmax given a certainty test and a heading set.

    ``certainty(x, z)`` returns (uncertain mask, penetration) for the landing
    points of every grid action.
    """
    cand = evaluate_grid(agent, scenario)
    uncertain, pen = certainty(cand.x, cand.z)
    ok = heading_mask(cand, slopes, inside_set, scenario.track_bisector)
    return select_action(agent, cand, uncertain, pen, ok, slopes, name)


def polygon_certainty(poly: ParamPolygon):
    if poly.is_empty:
        raise ValueError("version space is empty")

    def test(x, z):
        return certainty_labels(poly, x, z) == 0, certainty_penetration(poly, x, z)
    return test


def plan_step(agent: AgentState, poly: ParamPolygon, scenario: Scenario,
              inside_set: bool, name: str) -> tuple[Action, str]:
    return plan_constrained(agent, scenario, polygon_certainty(poly), slope_set(poly),
                            inside_set, name)


def solve_p1(agent: AgentState, poly: ParamPolygon, scenario: Scenario) -> Action:
    """Move far, stay uncertain, head *across* every candidate slope."""
    return plan_step(agent, poly, scenario, inside_set=False, name="P1")[0]


def solve_p2(agent: AgentState, poly: ParamPolygon, scenario: Scenario) -> Action:
    """Move far, stay uncertain, head *along* some candidate slope."""
    return plan_step(agent, poly, scenario, inside_set=True, name="P2")[0]


@dataclass
class StepRecord:
    step: int
    state: AgentState
    action: Optional[Action]
    true_label: int
    observed_label: int
    problem: str

    @property
    def point(self) -> LabeledPoint:
        return LabeledPoint(self.state.x, self.state.z, self.true_label)


@dataclass
class CfcResult:
    records: list[StepRecord]
    polygon: ParamPolygon
    dataset: list[LabeledPoint]
    polygons: list[ParamPolygon] = field(default_factory=list)
    flips: int = 0

    @property
    def trajectory(self) -> list[tuple[AgentState, LabeledPoint]]:
        return [(r.state, r.point) for r in self.records]

    @property
    def anchor_polygon(self) -> ParamPolygon:
        return self.polygons[0]


def run_cfc(scenario: Scenario, steps: Optional[int] = None) -> CfcResult:
    """Noiseless control loop: P1 until a label flip, then one P2 step, repeat."""
    if scenario.noise is not None:
        raise ValueError("run_cfc needs a noiseless scenario; use run_scc")
    m = scenario.horizon if steps is None else steps
    agent = scenario.start
    start_label = scenario.anchors[0].label
    dataset = list(scenario.anchors)
    poly = feasible_polygon(dataset, scenario.initial_box)
    polygons = [poly]
    records = [StepRecord(0, agent, None, start_label, start_label, "start")]

    j, label, counter, flips = 0, start_label, 0, 0
    while j <= m - 1:
        if counter % 2 == 0:
            action, stage = plan_step(agent, poly, scenario, inside_set=False, name="P1")
        else:
            action, stage = plan_step(agent, poly, scenario, inside_set=True, name="P2")
        agent = step(agent, action)
        j += 1
        obs, y = observe(None, scenario.classifier, agent.pos)
        records.append(StepRecord(j, agent, action, y, obs, stage))
        if obs != 0:
            pt = LabeledPoint(agent.x, agent.z, obs)
            dataset.append(pt)
            poly = poly.clip(pt)
        polygons.append(poly)
        if counter % 2 == 0:
            if obs * label == -1:
                label = obs
                counter += 1
                flips += 1
        else:
            counter += 1
    return CfcResult(records, poly, dataset, polygons, flips)
