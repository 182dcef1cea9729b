"""Per-learner send, compute and receive times and their linear coefficients.

A learner holding ``d_k`` samples that runs ``L`` local updates aggregated every
``tau`` steps consumes

    L * (c2 * d_k + (c1 * d_k + c0) / tau)

seconds, where ``c2`` is compute time per sample per iteration, ``c1`` the
per-sample communication time per global cycle and ``c0`` the fixed model
exchange time per cycle.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .wireless import ChannelSpec, link_rate


class OffloadMode(str, enum.Enum):
    """OL ships data and model to each learner; FL ships the model only."""

    OL = "OL"
    FL = "FL"


@dataclass(frozen=True)
class ModelSpec:
    # Defaults approximate a 784-300-124-60-10 dense net; they are arbitrary
    # placeholders, not measured values.
    features: int = 784
    data_precision_bits: float = 8.0
    model_precision_bits: float = 32.0
    size_fixed: float = 280_934.0
    size_per_sample: float = 0.0
    complexity_cycles: float = 1.7e6

    def __post_init__(self):
        for name in ("features", "data_precision_bits", "model_precision_bits", "size_fixed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.size_per_sample < 0:
            raise ValueError(f"size_per_sample must be >= 0, got {self.size_per_sample!r}")
        if not self.complexity_cycles >= 1:
            raise ValueError(f"complexity_cycles must be >= 1, got {self.complexity_cycles!r}")

    @property
    def sample_bits(self) -> float:
        return self.features * self.data_precision_bits

    def model_bits(self, d_k) -> float:
        return self.model_precision_bits * (d_k * self.size_per_sample + self.size_fixed)


@dataclass(frozen=True)
class LearnerProfile:
    id: int
    cpu_hz: float
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    model: ModelSpec = field(default_factory=ModelSpec)

    def __post_init__(self):
        if not self.cpu_hz > 0:
            raise ValueError(f"cpu_hz must be positive, got {self.cpu_hz!r}")

    @property
    def rate(self) -> float:
        return link_rate(self.channel)


@dataclass(frozen=True)
class CostCoefficients:
    c2: float
    c1: float
    c0: float

    def __post_init__(self):
        if not (self.c2 > 0 and self.c0 > 0 and self.c1 >= 0):
            raise ValueError(f"invalid coefficients c2={self.c2!r} c1={self.c1!r} c0={self.c0!r}")

    @property
    def a(self) -> float:
        return self.c1 / self.c2

    @property
    def b(self) -> float:
        return self.c0 / self.c2


def time_send(profile: LearnerProfile, d_k, mode=OffloadMode.OL):
    if d_k < 0:
        raise ValueError(f"d_k must be >= 0, got {d_k!r}")
    bits = profile.model.model_bits(d_k)
    if OffloadMode(mode) is OffloadMode.OL:
        bits = d_k * profile.model.sample_bits + bits
    return bits / profile.rate


def time_compute(profile: LearnerProfile, d_k):
    """Seconds for one local iteration over ``d_k`` samples."""
    if d_k < 0:
        raise ValueError(f"d_k must be >= 0, got {d_k!r}")
    return d_k * profile.model.complexity_cycles / profile.cpu_hz


def time_receive(profile: LearnerProfile, d_k):
    if d_k < 0:
        raise ValueError(f"d_k must be >= 0, got {d_k!r}")
    return profile.model.model_bits(d_k) / profile.rate


def total_time(profile: LearnerProfile, d_k, tau, L, mode=OffloadMode.OL):
    """Wall time for ``L`` local updates with an aggregation every ``tau`` steps."""
    if not tau >= 1:
        raise ValueError(f"tau must be >= 1, got {tau!r}")
    comm = time_send(profile, d_k, mode) + time_receive(profile, d_k)
    return L * (time_compute(profile, d_k) + comm / tau)


def cycle_time(profile: LearnerProfile, d_k, tau, mode=OffloadMode.OL):
    """Time of a single global cycle: ``tau`` local steps plus one exchange."""
    return total_time(profile, d_k, tau, tau, mode)


def cost_coefficients(profile: LearnerProfile, mode=OffloadMode.OL) -> CostCoefficients:
    m = profile.model
    rate = profile.rate
    c1_bits = 2.0 * m.model_precision_bits * m.size_per_sample
    if OffloadMode(mode) is OffloadMode.OL:
        c1_bits += m.sample_bits
    return CostCoefficients(
        c2=m.complexity_cycles / profile.cpu_hz,
        c1=c1_bits / rate,
        c0=2.0 * m.model_precision_bits * m.size_fixed / rate,
    )
