"""Static wireless link model: path loss and Shannon link rate.

All powers are converted to linear watts before use. The attenuation model is
``128 + 37.1 log10(R_km)`` dB and the noise power is ``N0 * W``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

PATHLOSS_INTERCEPT_DB = 128.0
PATHLOSS_SLOPE_DB = 37.1


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    if watt <= 0:
        raise ValueError(f"power must be positive, got {watt!r}")
    return 10.0 * math.log10(watt) + 30.0


def pathloss_db(distance_m: float) -> float:
    """Attenuation in dB at ``distance_m`` meters (distance taken in km inside the log)."""
    if not distance_m > 0:
        raise ValueError(f"distance must be positive, got {distance_m!r}")
    return PATHLOSS_INTERCEPT_DB + PATHLOSS_SLOPE_DB * math.log10(distance_m / 1000.0)


def pathloss_gain(distance_m: float) -> float:
    """Linear channel power gain ``10**(-PL/10)``."""
    return 10.0 ** (-pathloss_db(distance_m) / 10.0)


@dataclass(frozen=True)
class ChannelSpec:
    """One learner's link to the orchestrator.

    ``pathloss_gain`` overrides the distance-derived gain when given.
    """

    bandwidth_hz: float = 5e6
    tx_power_dbm: float = 23.0
    noise_psd_dbm_hz: float = -174.0
    distance_m: float = 500.0
    pathloss_gain: Optional[float] = None

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError(f"bandwidth_hz must be positive, got {self.bandwidth_hz!r}")
        if not self.distance_m > 0:
            raise ValueError(f"distance_m must be positive, got {self.distance_m!r}")
        if self.pathloss_gain is not None and not 0 < self.pathloss_gain <= 1:
            raise ValueError(f"pathloss_gain must lie in (0, 1], got {self.pathloss_gain!r}")
        if not math.isfinite(self.tx_power_dbm) or not math.isfinite(self.noise_psd_dbm_hz):
            raise ValueError("tx_power_dbm and noise_psd_dbm_hz must be finite")

    @property
    def gain(self) -> float:
        if self.pathloss_gain is not None:
            return self.pathloss_gain
        return pathloss_gain(self.distance_m)

    @property
    def tx_power_w(self) -> float:
        return dbm_to_watt(self.tx_power_dbm)

    @property
    def noise_power_w(self) -> float:
        return dbm_to_watt(self.noise_psd_dbm_hz) * self.bandwidth_hz


def snr(spec: ChannelSpec) -> float:
    return spec.tx_power_w * spec.gain / spec.noise_power_w


def link_rate(spec: ChannelSpec) -> float:
    """Achievable rate in bit/s, ``W log2(1 + P h / (N0 W))``."""
    return spec.bandwidth_hz * math.log2(1.0 + snr(spec))
