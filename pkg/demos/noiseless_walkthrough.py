"""Walk through one noiseless run step by step.

Shows how each label shrinks the set of consistent lines and how the agent
alternates between crossing the boundary and travelling along it.

    python3 demos/noiseless_walkthrough.py
"""
import logging
import math

from activesep import (bisector_estimate, default_scenario, estimation_error, intercept_interval,
                       max_margin_estimate, run_cfc, slope_set)

logging.basicConfig(level=logging.ERROR)

sc = default_scenario()
print(f"true line: z = {sc.classifier.rho_star} x + {sc.classifier.c_star}  "
      f"(theta* = {math.degrees(math.atan(sc.classifier.rho_star)):.2f} deg)")
res = run_cfc(sc, steps=20)

print(f"\n{'step':>4} {'problem':>8} {'x':>7} {'z':>7} {'label':>5}  slope set (deg)      intercepts (m)")
for k, r in enumerate(res.records):
    poly = res.polygons[k]
    h, ci = slope_set(poly).hull(), intercept_interval(poly)
    print(f"{r.step:>4} {r.problem:>8} {r.state.x:7.2f} {r.state.z:7.2f} {r.observed_label:>+5d}  "
          f"[{math.degrees(h.lo):6.2f}, {math.degrees(h.hi):6.2f}]   [{ci.lo:5.2f}, {ci.hi:5.2f}]")

print(f"\nlabel flips: {res.flips}")
for name, e in (("bisector", bisector_estimate(res.dataset, sc.separation)),
                ("max margin", max_margin_estimate(res.dataset)[0])):
    dth, dc = estimation_error(e, sc.classifier)
    print(f"{name:>10}: theta {math.degrees(math.atan(e.rho)):6.2f} deg, c {e.c:5.2f} m "
          f"(errors {math.degrees(dth):.2f} deg, {dc:.2f} m)")
