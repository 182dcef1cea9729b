"""
Link budget of a single edge learner
====================================

How far a learner sits from the orchestrator sets its link rate, and the rate
sets how long each model and data exchange takes.
"""

import numpy as np

from melsched.costs import LearnerProfile, cost_coefficients
from melsched.wireless import ChannelSpec, link_rate, pathloss_db, snr

# The default channel: 5 MHz, 23 dBm transmit power, -174 dBm/Hz noise, 500 m.
channel = ChannelSpec()
print(f"path loss at 500 m : {pathloss_db(500.0):.3f} dB")
print(f"SNR                : {snr(channel):.2f}")
print(f"rate               : {link_rate(channel) / 1e6:.3f} Mbit/s")

# Sweep the distance. The rate falls off roughly logarithmically with SNR.
for d in np.geomspace(50, 2000, 7):
    ch = ChannelSpec(distance_m=float(d))
    print(f"{d:8.1f} m  snr={snr(ch):10.2f}  rate={link_rate(ch) / 1e6:7.3f} Mbit/s")

# The cost coefficients turn a profile into seconds per sample (c2, c1) and
# seconds per exchange (c0).
for cpu in (2.4e9, 1.2e9):
    c = cost_coefficients(LearnerProfile(0, cpu, channel))
    print(f"f={cpu / 1e9:.1f} GHz  c2={c.c2:.3e}  c1={c.c1:.3e}  c0={c.c0:.3f}")
