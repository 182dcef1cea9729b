"""
Budget sweep: final loss against T
==================================

A short version of the full comparison (three seeds instead of twenty). The
files it writes are plot-ready CSV.
"""

import sys
import tempfile

from melsched.config import ExperimentConfig
from melsched.experiment import emit_report, run_sweep

cfg = ExperimentConfig()
report = run_sweep(cfg, seeds=[0, 1, 2])

out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="melsched-")
emit_report(report, out)
print(open(f"{out}/loss_vs_T.txt").read())
print("files in", out)

for T in report.budgets:
    wins = sum(d <= 0 for d in report.deltas(T))
    print(f"T={T:g}: HA at or below HU in {wins}/3 seeds")
