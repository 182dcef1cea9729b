"""
One simulated training run
==========================

Logistic regression on a synthetic non-iid task. Time is charged from the cost
model, so the run is deterministic and fast.
"""

from melsched.config import ExperimentConfig
from melsched.orchestrator import run_training

cfg = ExperimentConfig()
task = cfg.task(seed=0)

for policy in ("HA", "HU"):
    _, report = run_training(cfg.profiles(), task, cfg.training_config(T=300.0, policy=policy, seed=0))
    print(f"\n{policy}: {report.rounds} rounds, {report.total_time:.1f} s used, "
          f"loss {report.initial_loss:.4f} -> {report.final_loss:.4f}, accuracy {report.accuracy:.3f}")
    for log in report.logs:
        print(f"  g={log.g:2d} tau={log.tau:3d} L={log.L:8.2f} t={log.max_time_s:6.2f}s "
              f"beta={log.beta:.3f} delta={log.delta:.4f} loss={log.global_loss:.4f}")
