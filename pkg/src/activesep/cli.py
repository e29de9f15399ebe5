"""Command line: run one experiment, calibrate credible sets, or query an oracle.

Exit codes: 0 success, 2 invalid input, 3 controller stuck or belief collapse.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import yaml

from .artifacts import calibrate, execute, write_coverage
from .belief import BeliefCollapse
from .control_det import ControllerStuck
from .control_stoch import SccConfig
from .estimator import max_margin_estimate
from .geometry import LabeledPoint, ParamBox, is_separable
from .oracles import grid_margin, grid_projection, grid_separable
from .world import Scenario, ScenarioError, load_scenario, scenario_from_dict

log = logging.getLogger("activesep")

EXIT_OK, EXIT_INVALID, EXIT_STUCK = 0, 2, 3
SCC_KEYS = ("weight_floor", "certainty")


def parse_overrides(items: Sequence[str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in items:
        if "=" not in item:
            raise ScenarioError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        out[key.strip()] = yaml.safe_load(raw)
    return out


def _set_dotted(d: dict, key: str, value) -> None:
    parts = key.split(".")
    node = d
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ScenarioError(f"override {key!r} does not name a nested field")
        node = node[p]
    node[parts[-1]] = value


def build_scenario(path, overrides: dict[str, Any], seed: Optional[int],
                   steps: Optional[int]) -> tuple[Scenario, SccConfig]:
    with open(path) as fh:
        d = yaml.safe_load(fh)
    if not isinstance(d, dict):
        raise ScenarioError("scenario file must hold a mapping")
    scc = dict(d.pop("scc", None) or {})
    for key, value in overrides.items():
        if key.startswith("scc."):
            scc[key[4:]] = value
        else:
            _set_dotted(d, key, value)
    if seed is not None:
        d["seed"] = seed
    if steps is not None:
        d["horizon"] = steps
    unknown = set(scc) - set(SCC_KEYS)
    if unknown:
        raise ScenarioError(f"unknown scc settings {sorted(unknown)}")
    return scenario_from_dict(d), SccConfig(**scc)


def read_dataset(path) -> list[LabeledPoint]:
    """CSV with header x,z,label (or a YAML list of [x, z, label])."""
    p = Path(path)
    text = p.read_text()
    try:
        if p.suffix.lower() in (".yaml", ".yml"):
            rows = yaml.safe_load(text) or []
            pts = [LabeledPoint(float(r[0]), float(r[1]), int(r[2])) for r in rows]
        else:
            pts = [LabeledPoint(float(r["x"]), float(r["z"]), int(r["label"]))
                   for r in csv.DictReader(text.splitlines())]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed dataset {p}: {exc!r}") from None
    if any(q.label not in (-1, 1) for q in pts):
        raise ScenarioError("dataset labels must be -1 or +1")
    return pts


def cmd_run(args) -> int:
    sc, cfg = build_scenario(args.scenario, parse_overrides(args.override), args.seed, args.steps)
    mode = args.mode or ("stoch" if sc.noise is not None else "det")
    if mode == "stoch" and sc.noise is None:
        raise ScenarioError("stochastic mode needs a noise section in the scenario")
    if mode == "det" and sc.noise is not None:
        log.info("deterministic mode: ignoring the noise field")
        sc = sc.with_overrides(noise=None)
    rep = execute(sc, mode, args.out, cfg=cfg, svg=not args.no_svg)
    sys.stdout.write(rep.text())
    return EXIT_OK


def cmd_calibrate(args) -> int:
    sc, cfg = build_scenario(args.scenario, parse_overrides(args.override), args.seed, args.steps)
    if sc.noise is None:
        raise ScenarioError("calibration needs a noise section in the scenario")
    if not 0 < args.level <= 1:
        raise ScenarioError("level must lie in (0, 1]")
    if args.runs < 1:
        raise ScenarioError("runs must be >= 1")
    cal = calibrate(sc, args.runs, args.level, cfg)
    write_coverage(cal, args.out)
    print(f"runs: {len(cal.runs)}")
    print(f"level: {cal.level}")
    print(f"coverage: {cal.coverage:.4f}")
    print(f"joint_coverage: {cal.joint_coverage:.4f}")
    print(f"truth_survived: {sum(r.truth_survived for r in cal.runs)}/{len(cal.runs)}")
    sys.stdout.write(cal.table_text())
    return EXIT_OK


def cmd_oracle(args) -> int:
    pts = read_dataset(args.dataset)
    if args.which == "separability-grid":
        ok = grid_separable(pts)
        print("separable" if ok else "non-separable")
        print(f"exact: {'separable' if is_separable(pts) else 'non-separable'}")
    elif args.which == "polygon-project":
        box = ParamBox(*args.box)
        g = grid_projection(pts, box)
        if g.inner is None:
            print("no feasible grid point")
        else:
            i = g.inner
            print(f"theta in [{math.degrees(i.theta_lo):.4f}, {math.degrees(i.theta_hi):.4f}] deg")
            print(f"c in [{i.c_lo:.4f}, {i.c_hi:.4f}]")
            print(f"grid points: {i.cells}")
    elif args.which == "margin-grid":
        if not is_separable(pts) or len({q.label for q in pts}) < 2:
            raise ScenarioError("margin needs a separable dataset with both labels")
        m, rho, c = grid_margin(pts)
        exact, em = max_margin_estimate(pts)
        print(f"margin {m:.4f} at rho {rho:.4f} c {c:.4f}")
        print(f"exact margin {em:.6f} at rho {exact.rho:.6f} c {exact.c:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="activesep", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario YAML file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--steps", type=int, default=None, help="horizon m")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set a scenario field, dotted for nested ones (scc.* for the noisy controller)")

    r = sub.add_parser("run", help="run one experiment")
    common(r)
    r.add_argument("--mode", choices=("det", "stoch"), default=None)
    r.add_argument("--no-svg", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("calibrate", help="coverage of credible sets over seeded replicates")
    common(c)
    c.add_argument("--runs", type=int, default=200)
    c.add_argument("--level", type=float, default=0.8)
    c.set_defaults(func=cmd_calibrate)

    o = sub.add_parser("oracle", help="brute-force reference computations on a dataset")
    o.add_argument("which", choices=("separability-grid", "polygon-project", "margin-grid"))
    o.add_argument("dataset", help="CSV with columns x,z,label")
    o.add_argument("--box", type=float, nargs=4, default=(-1.2, 1.2, -10.0, 10.0),
                   metavar=("THETA_MIN", "THETA_MAX", "C_MIN", "C_MAX"))
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ControllerStuck, BeliefCollapse) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STUCK
    except (ScenarioError, ValueError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
