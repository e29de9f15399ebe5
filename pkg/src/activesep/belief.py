"""Discrete posterior over noise-sign sequences.

Each hypothesis fixes a sign eps = +/-1 for every noisy observation, which
turns the observed labels into implied true labels. A sequence is valid only
while its implied labels stay linearly separable together with the anchors,
i.e. while its parameter polygon is nonempty. Under a deterministic policy
and deterministic dynamics the posterior weight of a valid sequence is just
the normalised product of per-step noise factors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .geometry import (AngleSet, Interval, LabeledPoint, ParamBox, ParamPolygon,
                       feasible_polygon, intercept_interval, slope_set)
from .world import NoiseField

NORMALIZATION_TOL = 1e-9


class BeliefCollapse(RuntimeError):
    """Every hypothesis was pruned; the true labels cannot be represented."""

    def __init__(self, msg: str, dump: str = ""):
        super().__init__(msg if not dump else f"{msg}\n{dump}")
        self.dump = dump


@dataclass(frozen=True)
class Hypothesis:
    eps: tuple[int, ...]
    implied_labels: tuple[int, ...]
    polygon: ParamPolygon
    log_weight: float = 0.0

    @property
    def raw_weight(self) -> float:
        return math.exp(self.log_weight)

    @property
    def eps_string(self) -> str:
        return "".join("+" if e > 0 else "-" for e in self.eps)

    def order_key(self) -> tuple[int, ...]:
        # +1 sorts before -1: fewer assumed flips come first
        return tuple(-e for e in self.eps)


@dataclass(frozen=True)
class BeliefState:
    hypotheses: tuple[Hypothesis, ...]
    step: int = 0
    positions: tuple[tuple[float, float], ...] = ()
    observed: tuple[int, ...] = ()

    @property
    def log_normalizer(self) -> float:
        lw = np.array([h.log_weight for h in self.hypotheses])
        top = lw.max()
        return float(top + np.log(np.exp(lw - top).sum()))

    @property
    def normalizer(self) -> float:
        return math.exp(self.log_normalizer)

    def weights(self) -> np.ndarray:
        lw = np.array([h.log_weight for h in self.hypotheses])
        w = np.exp(lw - lw.max())
        return w / w.sum()

    def __len__(self) -> int:
        return len(self.hypotheses)

    def ranked(self) -> list[tuple[Hypothesis, float]]:
        """Hypotheses by descending weight, ties by the eps order."""
        pairs = list(zip(self.hypotheses, self.weights()))
        pairs.sort(key=lambda hw: (-hw[1], hw[0].order_key()))
        return pairs


def initial_belief(anchors: Sequence[LabeledPoint], box: ParamBox) -> BeliefState:
    """A single empty sequence carrying the anchor polygon, probability 1."""
    return BeliefState((Hypothesis((), (), feasible_polygon(anchors, box), 0.0),), 0)


def _factors(trusted: bool, keep_prob: float) -> list[tuple[int, float]]:
    if trusted or keep_prob >= 1.0:
        return [(1, 0.0)]
    return [(1, math.log(keep_prob)), (-1, math.log1p(-keep_prob))]


def belief_update(b: BeliefState, pos, observed: int, nf: NoiseField) -> BeliefState:
    """Branch every hypothesis on the sign of the new observation."""
    if observed not in (-1, 1):
        raise ValueError("observed label must be -1 or +1")
    x, z = float(pos[0]), float(pos[1])
    factors = _factors(nf.trusted((x, z)), nf.keep_prob)
    children = []
    for h in b.hypotheses:
        for eps, lf in factors:
            y = observed * eps
            poly = h.polygon.clip(LabeledPoint(x, z, y))
            if poly.is_empty:
                continue
            children.append(Hypothesis(h.eps + (eps,), h.implied_labels + (y,),
                                       poly, h.log_weight + lf))
    if not children:
        raise BeliefCollapse(f"all hypotheses pruned at step {b.step + 1}",
                             dump=_diagnostic(b, (x, z), observed))
    # renormalise in log space so weights never underflow
    lw = np.array([c.log_weight for c in children])
    top = lw.max()
    lz = top + math.log(float(np.exp(lw - top).sum()))
    children = tuple(Hypothesis(c.eps, c.implied_labels, c.polygon, c.log_weight - lz)
                     for c in children)
    return BeliefState(children, b.step + 1, b.positions + ((x, z),), b.observed + (observed,))


def _diagnostic(b: BeliefState, pos, observed: int) -> str:
    lines = [f"new observation {observed:+d} at ({pos[0]:.6g}, {pos[1]:.6g})"]
    for (x, z), y in zip(b.positions, b.observed):
        lines.append(f"  past ({x:.6g}, {z:.6g}) observed {y:+d}")
    for h, w in b.ranked()[:10]:
        lines.append(f"  eps {h.eps_string or '-'} weight {w:.4g} vertices {len(h.polygon.vertices)}")
    return "\n".join(lines)


def map_hypothesis(b: BeliefState) -> Hypothesis:
    if not b.hypotheses:
        raise ValueError("empty belief")
    return b.ranked()[0][0]


@dataclass(frozen=True)
class CredibleSet:
    slopes: AngleSet
    intercepts: Interval
    attained: float
    members: tuple[Hypothesis, ...] = field(default=(), compare=False)

    def __iter__(self):
        # unpacks as (slopes, intercepts, attained)
        return iter((self.slopes, self.intercepts, self.attained))

    def covers(self, rho: float, c: float, tol: float = 1e-9) -> bool:
        """Projected coverage: arctan(rho) in the slope union and c in the intercept hull."""
        return self.slopes.contains(math.atan(rho), tol) and self.intercepts.contains(c, tol)

    def covers_jointly(self, rho: float, c: float, tol: float = 1e-9) -> bool:
        """Coverage by the union of member polygons themselves."""
        return any(h.polygon.contains(rho, c, tol) for h in self.members)


def credible_sets(b: BeliefState, level: float) -> CredibleSet:
    """Smallest top-weight prefix whose cumulative posterior reaches ``level``."""
    if not 0 < level <= 1:
        raise ValueError("level must lie in (0, 1]")
    members, total = [], 0.0
    for h, w in b.ranked():
        members.append(h)
        total += float(w)
        if total >= level - NORMALIZATION_TOL:
            break
    slopes = AngleSet.union(slope_set(h.polygon) for h in members)
    icpt = Interval.empty()
    for h in members:
        icpt = icpt.hull(intercept_interval(h.polygon))
    return CredibleSet(slopes, icpt, min(total, 1.0), tuple(members))


def truth_hypothesis(b: BeliefState, true_eps: Sequence[int]) -> Optional[Hypothesis]:
    key = tuple(true_eps)
    for h in b.hypotheses:
        if h.eps == key:
            return h
    return None


BELIEF_COLUMNS = ("step", "hypothesis_id", "eps_string", "weight",
                  "theta_lo_deg", "theta_hi_deg", "c_lo", "c_hi")


def belief_rows(b: BeliefState) -> Iterable[tuple]:
    """One row per hypothesis in rank order, angles in degrees."""
    for k, (h, w) in enumerate(b.ranked()):
        hull = slope_set(h.polygon).hull()
        ci = intercept_interval(h.polygon)
        yield (b.step, k, h.eps_string, float(w), math.degrees(hull.lo),
               math.degrees(hull.hi), ci.lo, ci.hi)
