"""
Small vector instances against the exact optimum
================================================

With at most ten live vectors the optimum is computed exactly.  Using the
exact solver as the offline repacker (gamma = 1, c_off = 0), cost stays under
the combined bound at every event.
"""

# %%
from fractions import Fraction

from packshift.framework import combined_bound
from packshift.harness import ExperimentConfig, run_experiment

cfg = ExperimentConfig(
    "vector", d=2, epsilon="1/4", seed=7, check=True, offline="exact-vector", oracle="vector-exact",
    generator={"kind": "churn", "n": 80, "p": 0.4, "max_live": 10, "problem": "vector", "d": 2},
)
report = run_experiment(cfg)

# %%
worst = Fraction(0)
for r in report.rows:
    bound = combined_bound(1, 4, Fraction(1, 4), 1, 0, r.opt)
    worst = max(worst, r.cost / bound)
print("largest cost / combined bound:", worst, f"({float(worst):.3f})")
print("claim monitor held at every mid-phase event:",
      all(r.claim_ok for r in report.rows if not r.phase_end))
