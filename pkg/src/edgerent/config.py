"""Experiment configuration: JSON file <-> dataclasses, strict about keys.

Defaults reproduce the reference setting (5 SBSs, 2 GHz VMs rented in
{0, 2, 4, 6}, w(f) = f, lambda_max(f) = 150 f, 1 MB / 1e9-cycle tasks, B = 8,
T = 2700 three-hour slots, alpha = 1, D = 2). Cloud parameters and d_max are
not part of that setting and default to v = 1e8 bit/s, h = 0.05 s,
f0 = 2e10 Hz, d_max = 10 s.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from . import __version__
from .harness.synthetic import DemandProfile, SyntheticModel, default_profiles
from .model import CloudConfig, EdgeSystem, SbsConfig, TaskProfile

MODES = ("synthetic", "trace")
KNOWN_POLICIES = ("oracle", "coerr", "coerr-doubling", "cucb", "linucb", "random")


class ConfigError(ValueError):
    pass


@dataclass
class SbsSpec:
    rental_set: list = field(default_factory=lambda: [0, 2, 4, 6])
    price_per_unit: float = 1.0
    cap_per_unit: float = 150.0
    prices: Optional[list] = None  # explicit w(f) per level, overrides price_per_unit
    caps: Optional[list] = None  # explicit lambda_max(f) per level
    rate: float = 5e6
    hz_per_unit: float = 2e9

    def build(self, n: int) -> SbsConfig:
        levels = sorted(float(f) for f in self.rental_set)
        prices = self.prices if self.prices is not None else [self.price_per_unit * f for f in levels]
        caps = self.caps if self.caps is not None else [self.cap_per_unit * f for f in levels]
        return SbsConfig(n, tuple(levels), tuple(prices), tuple(caps), self.rate, self.hz_per_unit)


@dataclass
class CloudSpec:
    f0: float = 2e10
    r0: float = 2e6
    v: float = 1e8
    h: float = 0.05


@dataclass
class TaskSpec:
    s: float = 8e6  # 1 MB
    c: float = 1e9
    d_max: float = 10.0


@dataclass
class SyntheticSpec:
    noise_std: float = 40.0
    level_std: float = 0.03
    holder_L: Optional[float] = None
    profiles: Optional[list] = None  # [{base, amplitude, peak, level_slope}, ...]
    level_centers: Optional[list] = None
    time_jitter: bool = True  # time-of-day context drawn uniformly inside the slot


@dataclass
class LinUcbSpec:
    alpha: float = 1.0
    ridge: float = 1.0


@dataclass
class ExperimentConfig:
    mode: str = "synthetic"
    trace: Optional[str] = None
    sites: Optional[list] = None
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    n_sbs: int = 5
    sbs: Union[SbsSpec, list] = field(default_factory=SbsSpec)
    cloud: CloudSpec = field(default_factory=CloudSpec)
    task: TaskSpec = field(default_factory=TaskSpec)
    budget: float = 8.0
    horizon: Optional[int] = 2700
    slot_seconds: float = 10800.0
    alpha: float = 1.0
    dim: int = 2
    lambda_max: float = 900.0
    policies: list = field(default_factory=lambda: ["oracle", "coerr", "cucb", "linucb", "random"])
    solver: str = "bb"
    delta: Optional[float] = None
    seed: int = 0
    replications: int = 1
    jobs: int = 1
    out: str = "results"
    linucb: LinUcbSpec = field(default_factory=LinUcbSpec)
    doubling_t1: int = 100
    arm_cap: int = 10_000_000

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "trace" and not self.trace:
            raise ConfigError("trace mode needs a 'trace' path")
        if self.mode == "synthetic" and not self.horizon:
            raise ConfigError("synthetic mode needs a horizon")
        if self.n_sbs < 1 or self.budget < 0 or self.slot_seconds <= 0 or self.dim < 1:
            raise ConfigError("need n_sbs >= 1, budget >= 0, slot_seconds > 0, dim >= 1")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if isinstance(self.sbs, list) and len(self.sbs) != self.n_sbs:
            raise ConfigError(f"'sbs' lists {len(self.sbs)} entries but n_sbs = {self.n_sbs}")
        if self.solver not in ("bb", "dp", "bruteforce", "greedy"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.delta is not None and self.delta < 1:
            raise ConfigError("delta must be >= 1")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        for p in self.policies:
            policy_kind(p)
        if len(set(self.policies)) != len(self.policies):
            raise ConfigError("duplicate policy names")
        if self.replications < 1 or self.jobs < 1:
            raise ConfigError("replications and jobs must be >= 1")
        try:
            self.edge_system()
            if self.mode == "synthetic":
                self.synthetic_model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def sbs_specs(self) -> list[SbsSpec]:
        return list(self.sbs) if isinstance(self.sbs, list) else [self.sbs] * self.n_sbs

    def edge_system(self) -> EdgeSystem:
        sbss = tuple(spec.build(n) for n, spec in enumerate(self.sbs_specs()))
        return EdgeSystem(sbss, CloudConfig(**dataclasses.asdict(self.cloud)),
                          TaskProfile(**dataclasses.asdict(self.task)), self.budget)

    def synthetic_model(self) -> SyntheticModel:
        spec = self.synthetic
        profiles, centers = default_profiles(self.n_sbs)
        if spec.profiles is not None:
            profiles = tuple(DemandProfile(**p) for p in spec.profiles)
        if spec.level_centers is not None:
            centers = tuple(float(c) for c in spec.level_centers)
        if len(profiles) != self.n_sbs or len(centers) != self.n_sbs:
            raise ConfigError("synthetic profiles/level_centers must have n_sbs entries")
        return SyntheticModel(profiles, centers, lam_max=self.lambda_max, noise_std=spec.noise_std,
                              level_std=spec.level_std, dim=self.dim, alpha=self.alpha,
                              holder_L=spec.holder_L, time_jitter=spec.time_jitter)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def comment(self, seed: int, series_digest: str = "") -> str:
        parts = [f"edgerent {__version__}", f"seed={seed}", f"config_sha256={self.digest()[:16]}"]
        if series_digest:
            parts.append(f"series_sha256={series_digest[:16]}")
        return " ".join(parts)


def policy_kind(name: str) -> str:
    if name in KNOWN_POLICIES:
        return name
    if name.startswith("coerr-or"):
        try:
            float(name[len("coerr-or"):])
        except ValueError:
            raise ConfigError(f"bad COERR-ORX policy name {name!r}") from None
        return "coerr-orx"
    raise ConfigError(f"unknown policy {name!r}; known: {KNOWN_POLICIES + ('coerr-orX',)}")


_NESTED = {"synthetic": SyntheticSpec, "cloud": CloudSpec, "task": TaskSpec, "linucb": LinUcbSpec}


def _build(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    for key, cls in _NESTED.items():
        if key in data:
            data[key] = _build(cls, data[key], key)
    if "sbs" in data:
        sbs = data["sbs"]
        data["sbs"] = ([_build(SbsSpec, s, f"sbs[{i}]") for i, s in enumerate(sbs)]
                       if isinstance(sbs, list) else _build(SbsSpec, sbs, "sbs"))
    cfg = _build(ExperimentConfig, data, "config")
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)


def dump_config(cfg: ExperimentConfig, path=None) -> str:
    text = json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
