"""Run outputs: trajectory and belief CSVs, the text report, an SVG sketch, coverage tables."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .belief import BELIEF_COLUMNS, BeliefState, belief_rows, credible_sets, map_hypothesis
from .control_det import CfcResult, StepRecord, run_cfc
from .control_stoch import SccConfig, SccResult, run_scc
from .estimator import (Estimate, bisector_estimate, estimation_error, max_margin_estimate,
                        midpoint_line, polygon_center_estimate)
from .geometry import (InsufficientSpread, LabeledPoint, closest_opposite_pairs,
                       feasible_polygon, intercept_interval, slope_set)
from .world import Scenario

TRAJECTORY_COLUMNS = ("step", "x", "z", "theta_rad", "v", "w",
                      "true_label", "observed_label", "problem_solved")
COVERAGE_COLUMNS = ("run", "seed", "hypotheses", "attained", "theta_lo_deg", "theta_hi_deg",
                    "c_lo", "c_hi", "covered", "covered_joint", "truth_survived")
TABLE_LEVELS = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def trajectory_rows(records: Sequence[StepRecord]):
    for r in records:
        v = r.action.v if r.action is not None else 0.0
        w = r.action.w if r.action is not None else 0.0
        yield (r.step, r.state.x, r.state.z, r.state.theta, float(v), float(w),
               r.true_label, r.observed_label, r.problem)


def write_trajectory(records: Sequence[StepRecord], path) -> None:
    _write_csv(Path(path), TRAJECTORY_COLUMNS, trajectory_rows(records))


def write_belief(history: Sequence[BeliefState], path) -> None:
    rows = (row for b in history for row in belief_rows(b))
    _write_csv(Path(path), BELIEF_COLUMNS, rows)


def read_trajectory(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- estimates ------------------------------------------------------------

@dataclass
class EstimateLine:
    method: str
    estimate: Optional[Estimate]
    dtheta: float = math.nan
    dc: float = math.nan
    note: str = ""


def estimate_all(dataset: Sequence[LabeledPoint], poly, scenario: Scenario) -> list[EstimateLine]:
    """Every estimator on one dataset; failures are recorded, not raised."""
    out = []

    def add(method, fn):
        try:
            e = fn()
        except (InsufficientSpread, ValueError) as exc:
            out.append(EstimateLine(method, None, note=str(exc)))
            return
        dth, dc = estimation_error(e, scenario.classifier)
        out.append(EstimateLine(e.method, e, dth, dc))

    add("bisector", lambda: bisector_estimate(dataset, scenario.separation))
    add("midpoint_line", lambda: midpoint_line(*closest_opposite_pairs(dataset, scenario.separation)))
    add("max_margin", lambda: max_margin_estimate(dataset)[0])
    add("polygon_center", lambda: polygon_center_estimate(poly))
    return out


@dataclass
class RunReport:
    scenario_hash: str
    mode: str
    steps: int
    estimates: list[EstimateLine]
    anchors: tuple[LabeledPoint, ...]
    theta_interval: tuple[float, float]
    c_interval: tuple[float, float]
    probability: Optional[float] = None
    hypotheses: Optional[int] = None
    map_eps: str = ""
    stages: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def lines(self) -> list[str]:
        th, ci = self.theta_interval, self.c_interval
        out = [f"scenario: {self.scenario_hash}",
               f"mode: {self.mode}",
               f"steps: {self.steps}"]
        for k, a in enumerate(self.anchors, 1):
            out.append(f"anchor_p{k}: {a.x!r} {a.z!r} {a.label:+d}")
        label = "map_" if self.mode == "stoch" else ""
        out.append(f"{label}theta_interval_deg: {math.degrees(th[0]):.4f} {math.degrees(th[1]):.4f}")
        out.append(f"{label}c_interval_m: {ci[0]:.4f} {ci[1]:.4f}")
        if self.mode == "stoch":
            out.append(f"map_probability: {self.probability:.4f}")
            out.append(f"map_eps: {self.map_eps or '-'}")
            out.append(f"hypotheses: {self.hypotheses}")
        for e in self.estimates:
            if e.estimate is None:
                out.append(f"estimate_{e.method}: unavailable ({e.note})")
                continue
            out.append(f"estimate_{e.method}: theta_deg {math.degrees(e.estimate.theta):.4f} "
                       f"c {e.estimate.c:.4f} dtheta_deg {math.degrees(e.dtheta):.4f} dc {e.dc:.4f}"
                       + ("" if e.method == e.estimate.method else f" (fell back to {e.estimate.method})"))
        stages = " ".join(f"{k}={v}" for k, v in sorted(self.stages.items()))
        out.append(f"problems: {stages}")
        out.append(f"wall_time_s: {self.wall_time:.3f}")
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _stage_counts(records: Sequence[StepRecord]) -> dict:
    counts: dict[str, int] = {}
    for r in records[1:]:
        counts[r.problem] = counts.get(r.problem, 0) + 1
    return counts


def report_cfc(scenario: Scenario, res: CfcResult, wall: float) -> RunReport:
    th = slope_set(res.polygon).hull()
    ci = intercept_interval(res.polygon)
    return RunReport(scenario.digest(), "det", len(res.records) - 1,
                     estimate_all(res.dataset, res.polygon, scenario), scenario.anchors,
                     (th.lo, th.hi), (ci.lo, ci.hi), stages=_stage_counts(res.records),
                     wall_time=wall)


def map_dataset(scenario: Scenario, res: SccResult) -> list[LabeledPoint]:
    """Anchors plus visited points carrying the MAP hypothesis's implied labels."""
    h = map_hypothesis(res.belief)
    pts = [r.state for r in res.records[1:] if r.observed_label != 0]
    return list(scenario.anchors) + [LabeledPoint(s.x, s.z, y)
                                     for s, y in zip(pts, h.implied_labels)]


def report_scc(scenario: Scenario, res: SccResult, wall: float) -> RunReport:
    h = map_hypothesis(res.belief)
    rep = res.report
    return RunReport(scenario.digest(), "stoch", len(res.records) - 1,
                     estimate_all(map_dataset(scenario, res), h.polygon, scenario),
                     scenario.anchors,
                     (rep.theta_interval.lo, rep.theta_interval.hi),
                     (rep.c_interval.lo, rep.c_interval.hi), rep.probability,
                     rep.hypotheses, rep.eps, _stage_counts(res.records), wall)


# --- SVG ------------------------------------------------------------------

def render_svg(scenario: Scenario, records: Sequence[StepRecord],
               estimates: Sequence[EstimateLine] = (), band_polys=(), size: int = 600) -> str:
    """Static top-down sketch: workspace, anchors, path, true line, estimates, band."""
    ws = scenario.workspace
    pad = 30
    sx = (size - 2 * pad) / (ws.x_max - ws.x_min)
    sz = (size - 2 * pad) / (ws.z_max - ws.z_min)
    s = min(sx, sz)

    def px(x, z):
        return pad + (x - ws.x_min) * s, size - pad - (z - ws.z_min) * s

    def line_pts(rho, c):
        xs = np.array([ws.x_min, ws.x_max])
        return [px(x, rho * x + c) for x in xs]

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             '<defs><clipPath id="ws">'
             f'<rect x="{pad}" y="{pad}" width="{(ws.x_max - ws.x_min) * s:.2f}" '
             f'height="{(ws.z_max - ws.z_min) * s:.2f}"/></clipPath></defs>',
             f'<rect x="{pad}" y="{pad}" width="{(ws.x_max - ws.x_min) * s:.2f}" '
             f'height="{(ws.z_max - ws.z_min) * s:.2f}" fill="white" stroke="black"/>',
             '<g clip-path="url(#ws)">']
    for poly in band_polys:
        V = poly.as_array()
        xs = np.linspace(ws.x_min, ws.x_max, 64)
        vals = V[:, 0][:, None] * xs[None, :] + V[:, 1][:, None]
        lo, hi = vals.min(axis=0), vals.max(axis=0)
        ring = [px(x, z) for x, z in zip(xs, hi)] + [px(x, z) for x, z in zip(xs[::-1], lo[::-1])]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in ring)
        parts.append(f'<polygon points="{pts}" fill="#9ecae1" fill-opacity="0.35" stroke="none"/>')
    (x0, y0), (x1, y1) = line_pts(scenario.classifier.rho_star, scenario.classifier.c_star)
    parts.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
                 'stroke="black" stroke-dasharray="6,4"/>')
    colors = {"bisector": "#d62728", "midpoint_line": "#ff7f0e",
              "max_margin": "#2ca02c", "polygon_center": "#9467bd"}
    for e in estimates:
        if e.estimate is None:
            continue
        (x0, y0), (x1, y1) = line_pts(e.estimate.rho, e.estimate.c)
        parts.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
                     f'stroke="{colors.get(e.method, "gray")}" stroke-width="1.2"/>')
    path = " ".join("{:.2f},{:.2f}".format(*px(r.state.x, r.state.z)) for r in records)
    parts.append(f'<polyline points="{path}" fill="none" stroke="#555" stroke-width="1"/>')
    for r in records[1:]:
        cx, cy = px(r.state.x, r.state.z)
        fill = "#1f77b4" if r.observed_label > 0 else "#d62728" if r.observed_label < 0 else "gray"
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="{fill}"/>')
    parts.append("</g>")
    for a in scenario.anchors:
        cx, cy = px(a.x, a.z)
        fill = "#1f77b4" if a.label > 0 else "#d62728"
        parts.append(f'<rect x="{cx - 5:.2f}" y="{cy - 5:.2f}" width="10" height="10" '
                     f'fill="{fill}" stroke="black"/>')
    legend = [("true", "black")] + [(e.method, colors.get(e.method, "gray"))
                                    for e in estimates if e.estimate is not None]
    for k, (name, col) in enumerate(legend):
        parts.append(f'<text x="{pad + 100 * k}" y="18" font-size="11" fill="{col}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --- whole runs -------------------------------------------------------------

def execute(scenario: Scenario, mode: str, out_dir, steps: Optional[int] = None,
            cfg: SccConfig = SccConfig(), svg: bool = True) -> RunReport:
    """Run one experiment and write its artifacts into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if mode == "det":
        res = run_cfc(scenario, steps)
        rep = report_cfc(scenario, res, 0.0)
        write_trajectory(res.records, out / "trajectory.csv")
        records, band = res.records, [res.polygon]
    elif mode == "stoch":
        sres = run_scc(scenario, cfg, steps)
        rep = report_scc(scenario, sres, 0.0)
        write_trajectory(sres.records, out / "trajectory.csv")
        write_belief(sres.history, out / "belief.csv")
        records = sres.records
        band = [h.polygon for h in credible_sets(sres.belief, 0.8).members]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    rep.wall_time = time.perf_counter() - t0
    (out / "report.txt").write_text(rep.text())
    if svg:
        (out / "plot.svg").write_text(render_svg(scenario, records, rep.estimates, band))
    return rep


@dataclass
class CoverageRun:
    run: int
    seed: int
    hypotheses: int
    attained: float
    theta: tuple[float, float]
    c: tuple[float, float]
    covered: bool
    covered_joint: bool
    truth_survived: bool
    by_level: dict = field(default_factory=dict)

    def row(self):
        return (self.run, self.seed, self.hypotheses, self.attained,
                math.degrees(self.theta[0]), math.degrees(self.theta[1]),
                self.c[0], self.c[1], int(self.covered), int(self.covered_joint),
                int(self.truth_survived))


@dataclass
class Calibration:
    level: float
    runs: list[CoverageRun]

    @property
    def coverage(self) -> float:
        return float(np.mean([r.covered for r in self.runs])) if self.runs else math.nan

    @property
    def joint_coverage(self) -> float:
        return float(np.mean([r.covered_joint for r in self.runs])) if self.runs else math.nan

    def table(self) -> list[tuple[float, float, float, float]]:
        """(level, projected coverage, joint coverage, mean attained) per level."""
        rows = []
        for lv in sorted(set(TABLE_LEVELS) | {self.level}):
            vals = np.array([r.by_level[lv] for r in self.runs], float)
            rows.append((lv, float(vals[:, 0].mean()), float(vals[:, 1].mean()),
                         float(vals[:, 2].mean())))
        return rows

    def table_text(self) -> str:
        lines = ["level  coverage  joint_coverage  mean_attained"]
        for lv, cov, joint, att in self.table():
            lines.append(f"{lv:5.2f}  {cov:8.3f}  {joint:14.3f}  {att:13.3f}")
        return "\n".join(lines) + "\n"


def calibrate(scenario: Scenario, runs: int, level: float, cfg: SccConfig = SccConfig(),
              steps: Optional[int] = None, seed0: Optional[int] = None) -> Calibration:
    """Replicate the noisy loop over consecutive seeds and check credible-set coverage."""
    if scenario.noise is None:
        raise ValueError("calibration needs a scenario with a noise field")
    base = scenario.seed if seed0 is None else seed0
    rho, c = scenario.classifier.rho_star, scenario.classifier.c_star
    out = []
    for k in range(runs):
        sc = scenario.with_overrides(seed=base + k)
        res = run_scc(sc, cfg, steps, keep_history=False)
        by_level = {}
        for lv in sorted(set(TABLE_LEVELS) | {level}):
            cs = credible_sets(res.belief, lv)
            by_level[lv] = (cs.covers(rho, c), cs.covers_jointly(rho, c), cs.attained)
        cs = credible_sets(res.belief, level)
        th = cs.slopes.hull()
        out.append(CoverageRun(k, base + k, len(res.belief), cs.attained, (th.lo, th.hi),
                               (cs.intercepts.lo, cs.intercepts.hi), cs.covers(rho, c),
                               cs.covers_jointly(rho, c), res.truth() is not None, by_level))
    return Calibration(level, out)


def write_coverage(cal: Calibration, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "coverage.csv", COVERAGE_COLUMNS, (r.row() for r in cal.runs))
    _write_csv(out / "coverage_table.csv", ("level", "coverage", "joint_coverage", "mean_attained"),
               cal.table())
