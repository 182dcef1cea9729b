"""
Planning one budget: tau, L and the batch split
===============================================

For the default 20-learner fleet and a 300 s budget we compare the
heterogeneity-aware plan against the even split.
"""

import numpy as np

from melsched.bounds import ConvergenceParams
from melsched.config import ExperimentConfig
from melsched.orchestrator import auto_tau_max, fleet_from_profiles
from melsched.scheduler import l_of_tau, l_of_tau_hu, objective, plan_schedule

cfg = ExperimentConfig()
fleet = fleet_from_profiles(cfg.profiles(), cfg.mode, d=54_000, T=300.0)
params = ConvergenceParams(eta=0.01, beta=1.0, delta=0.05, b0=0.0075)
tau_max = auto_tau_max(fleet)
print("tau_max (three even-split cycles fit):", tau_max)

# The objective over the search range. Its minimum is the planned tau.
taus = np.arange(1, tau_max + 1)
O = objective(fleet, params, taus)
print("argmin of O over the range:", int(taus[np.argmin(O)]))

for policy in ("HA", "HU"):
    s = plan_schedule(fleet, params, tau_max, policy)
    print(f"\n{policy}: tau={s.tau} L={s.total_updates:.2f} cycles={s.global_cycles:.2f}")
    times = fleet.learner_times(s.batches, s.tau, s.total_updates)
    print("  batches :", s.batches[:6], "...")
    print(f"  finish  : min {times.min():.2f} s, max {times.max():.2f} s")

# The even split wastes time on fast learners, so it affords fewer updates.
print("\nL at tau=10, HA vs HU:", round(l_of_tau(fleet, 10), 2), round(l_of_tau_hu(fleet, 10), 2))
