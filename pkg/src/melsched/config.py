"""Experiment configuration: schema, defaults and loaders.

Two file formats are accepted. A JSON document (nested objects are flattened
with dots), or flat ``key = value`` lines where ``#`` starts a comment and
values are JSON literals or bare words::

    fleet.K = 20
    channel.distance_m = [450, 500, 550]
    opt.tau_max = auto
    mode = "FL"

Defaults follow the reference setup: 5 MHz links at 23 dBm, -174 dBm/Hz noise,
500 m distance, learners alternating between 2.4 and 1.2 GHz, 54000 samples,
784 features, eta = 0.01 and b0 = 0.0075.
"""
from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np

from .costs import LearnerProfile, ModelSpec, OffloadMode
from .errors import ConfigError
from .learners import KINDS, SyntheticTask
from .orchestrator import DELTA_ESTIMATORS, TrainingConfig
from .scheduler import POLICIES
from .wireless import ChannelSpec


def _num(v, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{key}: expected a finite number, got {v!r}")
    return float(v)


def _float(cond=None, what=""):
    def parse(v, key):
        x = _num(v, key)
        if cond is not None and not cond(x):
            raise ConfigError(f"{key}: {what}, got {v!r}")
        return x
    return parse


def _int(lo=None):
    def parse(v, key):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
            raise ConfigError(f"{key}: expected an integer, got {v!r}")
        if lo is not None and v < lo:
            raise ConfigError(f"{key}: must be >= {lo}, got {v!r}")
        return int(v)
    return parse


def _bool(v, key):
    if not isinstance(v, bool):
        raise ConfigError(f"{key}: expected true or false, got {v!r}")
    return v


def _choice(options):
    def parse(v, key):
        if v not in options:
            raise ConfigError(f"{key}: expected one of {list(options)}, got {v!r}")
        return v
    return parse


def _optional(inner):
    def parse(v, key):
        return None if v is None else inner(v, key)
    return parse


def _list(inner, allow_scalar=False, nonempty=True):
    def parse(v, key):
        if allow_scalar and not isinstance(v, list):
            return inner(v, key)
        if not isinstance(v, list) or (nonempty and not v):
            raise ConfigError(f"{key}: expected a non-empty list, got {v!r}")
        return [inner(x, key) for x in v]
    return parse


def _tau_max(v, key):
    if v == "auto":
        return v
    return _int(1)(v, key)


def _seeds(v, key):
    if isinstance(v, list):
        return [_int(0)(x, key) for x in v]
    return list(range(_int(1)(v, key)))


def _path(v, key):
    if not isinstance(v, str) or not v:
        raise ConfigError(f"{key}: expected a path string, got {v!r}")
    return v


_pos = _float(lambda x: x > 0, "must be positive")

# key -> (default, parser)
SCHEMA: Dict[str, tuple] = {
    "fleet.K": (20, _int(1)),
    "fleet.cpu_hz_set": ([2.4e9, 1.2e9], _list(_pos)),
    "fleet.distance_jitter": (0.2, _float(lambda x: 0 <= x < 1, "must lie in [0, 1)")),
    "fleet.seed": (0, _int(0)),
    "channel.bandwidth_hz": (5e6, _pos),
    "channel.tx_power_dbm": (23.0, _float()),
    "channel.noise_psd_dbm_hz": (-174.0, _float()),
    "channel.distance_m": (500.0, _list(_pos, allow_scalar=True)),
    "channel.gain_override": (None, _optional(_list(_float(lambda x: 0 < x <= 1, "must lie in (0, 1]")))),
    "channel.resample_per_round": (False, _bool),
    "model.features": (784, _int(1)),
    "model.data_precision_bits": (8.0, _pos),
    "model.model_precision_bits": (32.0, _pos),
    "model.size_fixed": (280_934.0, _pos),
    "model.size_per_sample": (0.0, _float(lambda x: x >= 0, "must be >= 0")),
    "model.complexity_cycles": (1.7e6, _float(lambda x: x >= 1, "must be >= 1")),
    "mode": ("OL", _choice(("OL", "FL"))),
    "bounds.eta": (0.01, _pos),
    "bounds.b0": (0.0075, _pos),
    "bounds.beta_override": (None, _optional(_pos)),
    "bounds.delta_override": (None, _optional(_float(lambda x: x >= 0, "must be >= 0"))),
    "bounds.delta_estimator": ("gradient", _choice(DELTA_ESTIMATORS)),
    "bounds.beta_init": (1.0, _pos),
    "bounds.delta_init": (0.0, _float(lambda x: x >= 0, "must be >= 0")),
    "opt.tau_max": ("auto", _tau_max),
    "opt.tau_hard_cap": (10_000, _int(1)),
    "opt.policy": ("HA", _choice(POLICIES)),
    "task.kind": ("logistic", _choice(KINDS)),
    "task.dim": (20, _int(1)),
    "task.heterogeneity": (1.0, _float(lambda x: x >= 0, "must be >= 0")),
    "task.seed": (0, _int(0)),
    "task.total_samples": (54_000, _int(1)),
    "task.test_samples": (2000, _int(1)),
    "task.fl_pool_factor": (2.0, _float(lambda x: x >= 1, "must be >= 1")),
    "task.minibatch_size": (0, _int(0)),
    "experiment.budgets": ([300.0, 400.0, 500.0, 600.0], _list(_pos)),
    "experiment.policies": (["HA", "HU"], _list(_choice(POLICIES))),
    "experiment.seeds": (20, _seeds),
    "experiment.out_dir": ("results", _path),
}

_BARE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-/]*$")


def _parse_flat(text: str, source: str) -> Dict[str, tuple]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            if value in ("True", "False"):
                parsed = value == "True"
            elif _BARE.match(value):
                parsed = value
            else:
                raise ConfigError(f"{source}:{lineno}: cannot parse value for {key!r}: {value!r}") from None
        out[key] = (parsed, lineno)
    return out


def _flatten(doc, prefix=""):
    out = {}
    for k, v in doc.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, name + "."))
        else:
            out[name] = v
    return out


def _parse_json(text: str, source: str) -> Dict[str, tuple]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top-level JSON value must be an object")
    return {k: (v, None) for k, v in _flatten(doc).items()}


class ExperimentConfig:
    """Fully resolved configuration.

    Item access records which keys were read so that tests can verify every
    schema key is actually used somewhere.
    """

    def __init__(self, values: Optional[Dict[str, Any]] = None):
        raw = {k: (v, None) for k, v in (values or {}).items()}
        self._values = resolve(raw, "<dict>")
        self.touched = set()

    @classmethod
    def _from_resolved(cls, resolved):
        obj = cls.__new__(cls)
        obj._values = resolved
        obj.touched = set()
        return obj

    def __getitem__(self, key):
        self.touched.add(key)
        return self._values[key]

    def as_dict(self) -> Dict[str, Any]:
        return dict(self._values)

    def replace(self, **updates) -> "ExperimentConfig":
        """Copy with dotted keys given as ``fleet__K=4`` style keyword arguments."""
        values = self.as_dict()
        values.update({k.replace("__", "."): v for k, v in updates.items()})
        return ExperimentConfig(values)

    # -- builders ------------------------------------------------------------

    @property
    def mode(self) -> OffloadMode:
        return OffloadMode(self["mode"])

    def model_spec(self) -> ModelSpec:
        return ModelSpec(
            features=self["model.features"],
            data_precision_bits=self["model.data_precision_bits"],
            model_precision_bits=self["model.model_precision_bits"],
            size_fixed=self["model.size_fixed"],
            size_per_sample=self["model.size_per_sample"],
            complexity_cycles=self["model.complexity_cycles"],
        )

    def _distances(self, rng) -> list:
        K = self["fleet.K"]
        base = self["channel.distance_m"]
        jitter = self["fleet.distance_jitter"]
        if isinstance(base, list):
            if len(base) != K:
                raise ConfigError(f"channel.distance_m: expected {K} entries, got {len(base)}")
            return list(base)
        return [base * float(u) for u in rng.uniform(1 - jitter, 1 + jitter, size=K)]

    def profiles(self, distances=None) -> list:
        K = self["fleet.K"]
        cpus = self["fleet.cpu_hz_set"]
        gains = self["channel.gain_override"]
        if gains is not None and len(gains) != K:
            raise ConfigError(f"channel.gain_override: expected {K} entries, got {len(gains)}")
        if distances is None:
            distances = self._distances(np.random.default_rng(self["fleet.seed"]))
        model = self.model_spec()
        out = []
        for k in range(K):
            channel = ChannelSpec(
                bandwidth_hz=self["channel.bandwidth_hz"],
                tx_power_dbm=self["channel.tx_power_dbm"],
                noise_psd_dbm_hz=self["channel.noise_psd_dbm_hz"],
                distance_m=distances[k],
                pathloss_gain=None if gains is None else gains[k],
            )
            out.append(LearnerProfile(k, cpus[k % len(cpus)], channel, model))
        return out

    def refresh(self) -> Optional[Callable]:
        """Per-round link redraw when ``channel.resample_per_round`` is set."""
        if not self["channel.resample_per_round"]:
            return None

        def redraw(profiles, rng, g):
            return self.profiles(self._distances(rng))
        return redraw

    def task(self, seed=None) -> SyntheticTask:
        return SyntheticTask(
            kind=self["task.kind"],
            dim=self["task.dim"],
            K=self["fleet.K"],
            total_samples=self["task.total_samples"],
            heterogeneity=self["task.heterogeneity"],
            seed=self["task.seed"] if seed is None else seed,
            mode=self.mode,
            test_samples=self["task.test_samples"],
            fl_pool_factor=self["task.fl_pool_factor"],
        )

    def training_config(self, T=None, policy=None, seed=None) -> TrainingConfig:
        return TrainingConfig(
            T=self["experiment.budgets"][0] if T is None else T,
            policy=self["opt.policy"] if policy is None else policy,
            mode=self.mode,
            eta=self["bounds.eta"],
            b0=self["bounds.b0"],
            beta_override=self["bounds.beta_override"],
            delta_override=self["bounds.delta_override"],
            delta_estimator=self["bounds.delta_estimator"],
            beta_init=self["bounds.beta_init"],
            delta_init=self["bounds.delta_init"],
            tau_max=self["opt.tau_max"],
            tau_hard_cap=self["opt.tau_hard_cap"],
            seed=self["task.seed"] if seed is None else seed,
            minibatch=self["task.minibatch_size"],
        )


def resolve(raw: Dict[str, tuple], source: str) -> Dict[str, Any]:
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"{source}: unknown config keys: {', '.join(unknown)}")
    out = {}
    for key, (default, parse) in SCHEMA.items():
        if key in raw:
            value, lineno = raw[key]
            where = f" (line {lineno})" if lineno is not None else ""
            try:
                out[key] = parse(value, key)
            except ConfigError as exc:
                raise ConfigError(f"{source}{where}: {exc}") from None
        else:
            out[key] = parse(default, key)
    K = out["fleet.K"]
    if out["task.total_samples"] < K:
        raise ConfigError(f"{source}: task.total_samples must be >= fleet.K ({K})")
    return out


def load_config(path=None) -> ExperimentConfig:
    """Read a config file; ``None`` or an empty file gives the defaults."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    text = path.read_text()
    source = str(path)
    raw = _parse_json(text, source) if text.lstrip().startswith("{") else _parse_flat(text, source)
    return ExperimentConfig._from_resolved(resolve(raw, source))


def schema_doc() -> str:
    """One ``key = default`` line per schema entry."""
    return "\n".join(f"{k} = {json.dumps(v[0])}" for k, v in SCHEMA.items())
