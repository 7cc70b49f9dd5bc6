"""
Repacking with bounded migration
================================

The combined algorithm places items online and repacks from scratch once the
volume changed since the last repack exceeds eps times the volume back then.
This script runs churn traces and reads the report.
"""

# %%
from fractions import Fraction

import numpy as np

from packshift.harness import ExperimentConfig, export, run_experiment

# %%
rows = []
for eps in ("1/2", "1/4", "1/10", "1/50"):
    cfg = ExperimentConfig("bin2d", epsilon=eps, seed=3, check=True,
                           generator={"kind": "churn", "n": 1000, "p": 0.3})
    report = run_experiment(cfg)
    s = report.summary
    rows.append((eps, s["phase_ends"], float(Fraction(s["max_migration_factor"])),
                 float(Fraction(report.certified["migration_factor_bound"]))))
for r in rows:
    print("eps %-5s repacks %4d  max migration factor %6.2f  bound %5.1f" % r)

# %% [markdown]
# Smaller eps repacks more often and is allowed a larger migration factor
# (1/eps + 1).  The observed factor stays below that bound.

# %%
cfg = ExperimentConfig("strip2d", epsilon="1/10", seed=5, check=True,
                       generator={"kind": "churn", "n": 400, "p": 0.3})
report = run_experiment(cfg)
cost = np.array([float(r.cost) for r in report.rows])
lb = np.array([float(r.lb) for r in report.rows])
ok = lb > 0
print("cost / lower bound: median %.2f, max %.2f" % (np.median(cost[ok] / lb[ok]), (cost[ok] / lb[ok]).max()))
print("violations:", report.summary["violations"])

# %% [markdown]
# Reports export to CSV (one row per event) or JSON with all rationals kept
# exact as "p/q" strings.

# %%
print(export(report, "csv").decode().splitlines()[:3])
