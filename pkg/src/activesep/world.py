"""Ground truth and agent physics: classifier, label oracle, noise field, unicycle."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np
import yaml

from .geometry import LabeledPoint, ParamBox

log = logging.getLogger(__name__)

ON_LINE_TOL = 1e-12
ANCHOR_LABELS = (-1, 1, 1, -1)


class ScenarioError(ValueError):
    """Scenario failed validation."""


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2 * math.pi)
    if a <= 0:
        a += 2 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class TrueClassifier:
    rho_star: float
    c_star: float

    def __post_init__(self):
        if not (math.isfinite(self.rho_star) and math.isfinite(self.c_star)):
            raise ScenarioError("classifier parameters must be finite")
        if abs(math.atan(self.rho_star)) >= math.pi / 2 - 1e-6:
            raise ScenarioError("classifier is (numerically) vertical")

    @property
    def theta_star(self) -> float:
        return math.atan(self.rho_star)


@dataclass(frozen=True)
class NoiseField:
    """Union of trusted balls; outside them a label survives with probability ``keep_prob``."""

    trusted_centers: tuple[tuple[float, float], ...]
    radius: float
    keep_prob: float

    def __post_init__(self):
        if self.radius < 0:
            raise ScenarioError("noise radius must be >= 0")
        if not 0.5 < self.keep_prob <= 1.0:
            raise ScenarioError("keep probability must lie in (0.5, 1]")

    def trusted(self, p) -> bool:
        return any(math.hypot(p[0] - cx, p[1] - cz) <= self.radius
                   for cx, cz in self.trusted_centers)


@dataclass(frozen=True)
class AgentState:
    x: float
    z: float
    theta: float

    @property
    def pos(self) -> tuple[float, float]:
        return (self.x, self.z)


@dataclass(frozen=True)
class Action:
    v: float
    w: float


@dataclass(frozen=True)
class Workspace:
    x_min: float
    x_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.z_min < self.z_max):
            raise ScenarioError("workspace bounds are inverted")

    def contains(self, p, tol: float = 1e-12) -> bool:
        return (self.x_min - tol <= p[0] <= self.x_max + tol
                and self.z_min - tol <= p[1] <= self.z_max + tol)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.x_max - self.x_min, self.z_max - self.z_min)


class CounterRng:
    """Philox stream keyed by the scenario seed and indexed by step.

    Each observation consumes one uniform draw from the block at its own
    step index, so a draw never depends on how many draws came before it.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & (2**64 - 1)

    def uniform(self, step: int) -> float:
        bitgen = np.random.Philox(key=self.seed, counter=[int(step), 0, 0, 0])
        return float(np.random.Generator(bitgen).random())


def step(s: AgentState, a: Action) -> AgentState:
    """Unicycle update: heading turns first, then the agent translates along it."""
    th = wrap_angle(s.theta + a.w)
    return AgentState(s.x + a.v * math.cos(th), s.z + a.v * math.sin(th), th)


def true_label(cl: TrueClassifier, p) -> int:
    f = p[1] - cl.rho_star * p[0] - cl.c_star
    if abs(f) < ON_LINE_TOL:
        return 0
    return 1 if f > 0 else -1


def observe(nf: Optional[NoiseField], cl: TrueClassifier, p, rng: Optional[CounterRng] = None,
            step_index: int = 0) -> tuple[int, int]:
    """Return ``(observed, true)`` labels at ``p``."""
    y = true_label(cl, p)
    if y == 0:
        log.warning("position (%.6g, %.6g) lies on the true classifier; sample dropped", *p)
        return 0, 0
    if nf is None or nf.trusted(p):
        return y, y
    if rng is None:
        raise ValueError("a noisy observation needs an rng")
    eps = 1 if rng.uniform(step_index) < nf.keep_prob else -1
    return y * eps, y


def default_v_grid() -> tuple[float, ...]:
    return tuple(round(0.1 * k, 10) for k in range(21))


def default_w_grid() -> tuple[float, ...]:
    return tuple(round(0.01 * k, 10) for k in range(-157, 158))


@dataclass(frozen=True)
class Scenario:
    workspace: Workspace
    classifier: TrueClassifier
    anchors: tuple[LabeledPoint, ...]
    noise: Optional[NoiseField] = None
    v_grid: tuple[float, ...] = field(default_factory=default_v_grid)
    w_grid: tuple[float, ...] = field(default_factory=default_w_grid)
    varrho: float = 0.1
    horizon: int = 10
    seed: int = 0
    initial_box: ParamBox = ParamBox(-1.2, 1.2, -10.0, 10.0)
    initial_heading: Optional[float] = None
    min_separation: Optional[float] = None
    track_bisector: bool = False

    def __post_init__(self):
        validate(self)

    @property
    def start(self) -> AgentState:
        p1, p2 = self.anchors[0], self.anchors[1]
        th = self.initial_heading
        if th is None:
            th = math.atan2(p2.z - p1.z, p2.x - p1.x)
        return AgentState(p1.x, p1.z, wrap_angle(th))

    @property
    def separation(self) -> float:
        if self.min_separation is not None:
            return self.min_separation
        return 0.1 * self.workspace.diagonal

    @property
    def stochastic(self) -> bool:
        return self.noise is not None

    def with_overrides(self, **kw) -> "Scenario":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["anchors"] = [list(a) for a in self.anchors]
        if self.noise is not None:
            d["noise"]["trusted_centers"] = [list(c) for c in self.noise.trusted_centers]
        d["v_grid"] = list(self.v_grid)
        d["w_grid"] = list(self.w_grid)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=float)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def validate(sc: Scenario) -> None:
    if len(sc.anchors) != 4:
        raise ScenarioError("exactly four anchors are required")
    labels = tuple(a.label for a in sc.anchors)
    if labels != ANCHOR_LABELS:
        raise ScenarioError(f"anchor labels must be {ANCHOR_LABELS}, got {labels}")
    for i, a in enumerate(sc.anchors, 1):
        y = true_label(sc.classifier, (a.x, a.z))
        if y != a.label:
            raise ScenarioError(f"anchor p{i}=({a.x}, {a.z}) is labeled {a.label} "
                                f"but the classifier gives {y}")
        if not sc.workspace.contains((a.x, a.z)):
            raise ScenarioError(f"anchor p{i} lies outside the workspace")
    if not sc.initial_box.contains(sc.classifier.rho_star, sc.classifier.c_star):
        raise ScenarioError("initial parameter box excludes the true classifier")
    if sc.varrho < 0:
        raise ScenarioError("control weight must be >= 0")
    if sc.horizon < 0:
        raise ScenarioError("horizon must be >= 0")
    if not sc.v_grid or not sc.w_grid:
        raise ScenarioError("action grids must be nonempty")
    if list(sc.v_grid) != sorted(sc.v_grid) or list(sc.w_grid) != sorted(sc.w_grid):
        raise ScenarioError("action grids must be sorted")


def default_scenario(stochastic: bool = False, **overrides) -> Scenario:
    """20 m x 20 m unicycle example with rho* = 0.41, c* = 3.5.

    Anchor coordinates are a fixture: any four points with the right labels
    far from the line would do.
    """
    anchors = (LabeledPoint(2.0, 2.0, -1), LabeledPoint(2.0, 10.0, 1),
               LabeledPoint(18.0, 16.0, 1), LabeledPoint(18.0, 4.0, -1))
    noise = None
    if stochastic:
        noise = NoiseField(tuple((a.x, a.z) for a in anchors), 1.0, 0.7)
    kw: dict[str, Any] = dict(
        workspace=Workspace(0.0, 20.0, 0.0, 20.0),
        classifier=TrueClassifier(0.41, 3.5),
        anchors=anchors,
        noise=noise,
        horizon=10,
    )
    kw.update(overrides)
    return Scenario(**kw)


# --- scenario files -------------------------------------------------------

_DEG = re.compile(r"^\s*([-+0-9.eE]+)\s*deg\s*$")


def _angle(v) -> float:
    if isinstance(v, str):
        m = _DEG.match(v)
        if m:
            return math.radians(float(m.group(1)))
        return float(v)
    return float(v)


def _range_grid(spec, angle: bool) -> tuple[float, ...]:
    conv = _angle if angle else float
    if isinstance(spec, Mapping):
        start, stop, stp = conv(spec["start"]), conv(spec["stop"]), conv(spec["step"])
        n = int(math.floor((stop - start) / stp + 1e-9)) + 1
        return tuple(round(start + k * stp, 10) for k in range(n))
    return tuple(conv(v) for v in spec)


def scenario_from_dict(d: Mapping[str, Any]) -> Scenario:
    try:
        ws = d["workspace"]
        workspace = Workspace(float(ws["x_min"]), float(ws["x_max"]),
                              float(ws["z_min"]), float(ws["z_max"]))
        cl = d["classifier"]
        classifier = TrueClassifier(float(cl["rho_star"]), float(cl["c_star"]))
        anchors = tuple(LabeledPoint(float(a[0]), float(a[1]), int(a[2])) for a in d["anchors"])
        noise = None
        if d.get("noise"):
            nd = d["noise"]
            noise = NoiseField(tuple((float(c[0]), float(c[1])) for c in nd["trusted_centers"]),
                               float(nd["radius"]), float(nd["keep_prob"]))
        kw: dict[str, Any] = dict(workspace=workspace, classifier=classifier,
                                  anchors=anchors, noise=noise)
        if "v_grid" in d:
            kw["v_grid"] = _range_grid(d["v_grid"], angle=False)
        if "w_grid" in d:
            kw["w_grid"] = _range_grid(d["w_grid"], angle=True)
        for key, conv in (("varrho", float), ("horizon", int), ("seed", int),
                          ("min_separation", float), ("track_bisector", bool)):
            if d.get(key) is not None:
                kw[key] = conv(d[key])
        if d.get("initial_heading") is not None:
            kw["initial_heading"] = _angle(d["initial_heading"])
        if "initial_box" in d:
            b = d["initial_box"]
            kw["initial_box"] = ParamBox(_angle(b["theta_min"]), _angle(b["theta_max"]),
                                         float(b["c_min"]), float(b["c_max"]))
    except (KeyError, TypeError, IndexError) as exc:
        raise ScenarioError(f"malformed scenario: {exc!r}") from exc
    return Scenario(**kw)


def load_scenario(path) -> Scenario:
    with open(Path(path)) as fh:
        d = yaml.safe_load(fh)
    if not isinstance(d, Mapping):
        raise ScenarioError("scenario file must hold a mapping")
    return scenario_from_dict(d)


def dump_scenario(sc: Scenario, path) -> None:
    d = sc.to_dict()
    with open(Path(path), "w") as fh:
        yaml.safe_dump(d, fh, sort_keys=False)


def random_scenario(rng: np.random.Generator, horizon: int = 10, offset: float = 3.0,
                    noise_keep: Optional[float] = None, seed: int = 0,
                    half_width: float = 10.0) -> Scenario:
    """Random classifier with rho* in [-1, 1], c* in [-5, 5].

    Anchors sit 3 m either side of the line inside the central 18 m square;
    the workspace is a square of the given half width centred at the origin.
    """
    ws = Workspace(-half_width, half_width, -half_width, half_width)
    while True:
        rho = float(rng.uniform(-1, 1))
        c = float(rng.uniform(-5, 5))
        # chord of the line inside the workspace, shrunk away from the edges
        xs = np.linspace(-9, 9, 721)
        zs = rho * xs + c
        inside = np.abs(zs) <= 9
        if inside.sum() < 2:
            continue
        xa, xb = xs[inside][0], xs[inside][-1]
        if math.hypot(xb - xa, rho * (xb - xa)) < 8:
            continue
        norm = np.array([-rho, 1.0]) / math.hypot(rho, 1.0)
        pts = []
        for t, lab in ((0.1, -1), (0.1, 1), (0.9, 1), (0.9, -1)):
            x0 = xa + t * (xb - xa)
            base = np.array([x0, rho * x0 + c])
            q = base + lab * offset * norm
            pts.append(LabeledPoint(float(q[0]), float(q[1]), lab))
        if all(ws.contains((p.x, p.z)) for p in pts):
            break
    noise = None
    if noise_keep is not None:
        noise = NoiseField(tuple((p.x, p.z) for p in pts), 1.0, noise_keep)
    return Scenario(workspace=ws, classifier=TrueClassifier(rho, c), anchors=tuple(pts),
                    noise=noise, horizon=horizon, seed=seed,
                    initial_box=ParamBox(-1.3, 1.3, -20.0, 20.0))
