"""Active boundary learning for a unicycle agent.

The agent samples labels of a linearly separable field, keeps the set of
lines consistent with what it has seen, and steers so that each new label
shrinks that set. ``run_cfc`` is the noiseless loop, ``run_scc`` the noisy
one with a discrete posterior over label-flip sequences.
"""
from .belief import BeliefCollapse, BeliefState, credible_sets, map_hypothesis
from .control_det import CfcResult, ControllerStuck, run_cfc, solve_p1, solve_p2
from .control_stoch import SccConfig, SccResult, run_scc, solve_p3, solve_p4
from .estimator import (Estimate, bisector_estimate, estimation_error, max_margin_estimate,
                        polygon_center_estimate)
from .geometry import (AngleSet, Interval, LabeledPoint, ParamBox, ParamPolygon,
                       certainty_label, feasible_polygon, intercept_interval, is_separable,
                       slope_set)
from .world import (Action, AgentState, NoiseField, Scenario, ScenarioError, TrueClassifier,
                    load_scenario, random_scenario, default_scenario, step)

__version__ = "0.1.0"

__all__ = [
    "Action", "AgentState", "AngleSet", "BeliefCollapse", "BeliefState", "CfcResult",
    "ControllerStuck", "Estimate", "Interval", "LabeledPoint", "NoiseField", "ParamBox",
    "ParamPolygon", "Scenario", "ScenarioError", "SccConfig", "SccResult", "TrueClassifier",
    "bisector_estimate", "certainty_label", "credible_sets", "estimation_error",
    "feasible_polygon", "intercept_interval", "is_separable", "load_scenario", "map_hypothesis",
    "max_margin_estimate", "polygon_center_estimate", "random_scenario", "run_cfc", "run_scc",
    "default_scenario", "slope_set", "solve_p1", "solve_p2", "solve_p3", "solve_p4", "step",
]
