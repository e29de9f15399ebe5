"""Follow the posterior over label-flip hypotheses through one noisy run,
then check how often the 80% credible set covers the truth over many seeds.

    python3 demos/noisy_belief.py
"""
import logging
import math

from activesep import credible_sets, default_scenario, run_scc

logging.basicConfig(level=logging.ERROR)

sc = default_scenario(stochastic=True)
res = run_scc(sc)

print("step  observed  true  hypotheses  MAP weight  MAP flips")
for r, b in zip(res.records[1:], res.history[1:]):
    top, w = b.ranked()[0]
    print(f"{r.step:>4}  {r.observed_label:>+8d}  {r.true_label:>+4d}  {len(b):>10}  {w:10.3f}  "
          f"{top.eps_string}")

print(f"\nresult: {res.report}")
cs = res.credible(0.8)
print(f"80% credible set: {len(cs.members)} hypotheses, attained {cs.attained:.3f}, "
      f"covers truth: {cs.covers(sc.classifier.rho_star, sc.classifier.c_star)}")

hits = 0
for seed in range(50):
    r = run_scc(sc.with_overrides(seed=seed), keep_history=False)
    hits += credible_sets(r.belief, 0.8).covers(sc.classifier.rho_star, sc.classifier.c_star)
print(f"coverage of the 80% set over 50 seeds: {hits / 50:.2f}")
