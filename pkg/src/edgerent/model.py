"""Physical and economic model of the edge rental system.

Delays are in seconds, sizes in bits, rates in bits/s and processor speeds in
Hz. Rental levels are expressed in whatever unit the SBS rents in (VMs in the
reference setting); ``SbsConfig.hz_per_unit`` converts a level to Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TaskProfile:
    s: float  # input size, bits
    c: float  # CPU cycles per task
    d_max: float  # per-task delay cap, seconds

    def __post_init__(self):
        if self.s < 0 or self.c < 0 or self.d_max <= 0:
            raise ValueError("task profile requires s >= 0, c >= 0, d_max > 0")


@dataclass(frozen=True)
class CloudConfig:
    f0: float  # per-task cloud capacity, Hz
    r0: float  # MBS uplink rate, bits/s
    v: float  # backbone rate, bits/s
    h: float  # round-trip time, seconds

    def __post_init__(self):
        if min(self.f0, self.r0, self.v, self.h) <= 0:
            raise ValueError("cloud parameters must all be positive")


@dataclass(frozen=True)
class ChannelParams:
    W: float
    P: float
    H: float
    I_inter: float = 0.0
    I_intra: float = 0.0
    noise: float = 1.0

    def __post_init__(self):
        if self.W <= 0 or self.noise <= 0:
            raise ValueError("bandwidth and noise power must be positive")
        if min(self.P, self.H, self.I_inter, self.I_intra) < 0:
            raise ValueError("powers and gains must be non-negative")


@dataclass(frozen=True)
class SbsConfig:
    """One small-cell base station and its rental menu.

    ``prices`` and ``caps`` are aligned with ``rental_set`` and give the rental
    cost w_n(f) and the admission cap lambda_max(f) for each level.
    """

    id: int
    rental_set: tuple[float, ...]
    prices: tuple[float, ...]
    caps: tuple[float, ...]
    rate: float  # expected uplink rate r_n, bits/s
    hz_per_unit: float = 1.0
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        levels = tuple(float(f) for f in self.rental_set)
        object.__setattr__(self, "rental_set", levels)
        object.__setattr__(self, "prices", tuple(float(w) for w in self.prices))
        object.__setattr__(self, "caps", tuple(float(c) for c in self.caps))
        if 0.0 not in levels:
            raise ValueError(f"SBS {self.id}: rental set must contain 0")
        if len(levels) < 2:
            raise ValueError(f"SBS {self.id}: rental set needs at least one nonzero level")
        if list(levels) != sorted(set(levels)) or levels[0] < 0:
            raise ValueError(f"SBS {self.id}: rental set must be sorted, distinct, non-negative")
        if len(self.prices) != len(levels) or len(self.caps) != len(levels):
            raise ValueError(f"SBS {self.id}: prices/caps must align with rental set")
        if self.prices[0] != 0.0 or self.caps[0] != 0.0:
            raise ValueError(f"SBS {self.id}: renting nothing must cost 0 and serve 0")
        if any(b < a for a, b in zip(self.prices, self.prices[1:])):
            raise ValueError(f"SBS {self.id}: prices must be non-decreasing")
        if any(b < a for a, b in zip(self.caps, self.caps[1:])):
            raise ValueError(f"SBS {self.id}: caps must be non-decreasing")
        if self.rate <= 0 or self.hz_per_unit <= 0:
            raise ValueError(f"SBS {self.id}: rate and hz_per_unit must be positive")
        object.__setattr__(self, "_index", {f: k for k, f in enumerate(levels)})

    @classmethod
    def linear(cls, id, rental_set, price_per_unit=1.0, cap_per_unit=150.0,
               rate=5e6, hz_per_unit=1.0):
        """Menu with w(f) = price_per_unit*f and lambda_max(f) = cap_per_unit*f."""
        levels = tuple(sorted(float(f) for f in rental_set))
        return cls(id, levels, tuple(price_per_unit * f for f in levels),
                   tuple(cap_per_unit * f for f in levels), rate, hz_per_unit)

    @property
    def f_min(self) -> float:
        return self.rental_set[1] if len(self.rental_set) > 1 else 0.0

    @property
    def f_max(self) -> float:
        return self.rental_set[-1]

    def level_index(self, f: float) -> int:
        try:
            return self._index[float(f)]
        except KeyError:
            raise ValueError(f"SBS {self.id}: {f} is not in rental set {self.rental_set}") from None

    def price(self, f: float) -> float:
        return self.prices[self.level_index(f)]

    def cap(self, f: float) -> float:
        return self.caps[self.level_index(f)]

    def restricted(self, levels: Sequence[float]) -> "SbsConfig":
        keep = sorted({0.0, *map(float, levels)})
        idx = [self.level_index(f) for f in keep]
        return SbsConfig(self.id, tuple(keep), tuple(self.prices[i] for i in idx),
                         tuple(self.caps[i] for i in idx), self.rate, self.hz_per_unit)


def uplink_rate(ch: ChannelParams) -> float:
    """Shannon rate W*log2(1 + P*H / (I_inter + I_intra + noise))."""
    sinr = ch.P * ch.H / (ch.I_inter + ch.I_intra + ch.noise)
    return ch.W * math.log2(1.0 + sinr)


def edge_delay(tp: TaskProfile, sbs: SbsConfig, f: float) -> float:
    if f <= 0:
        raise ValueError("no capacity rented")
    return min(tp.s / sbs.rate + tp.c / (f * sbs.hz_per_unit), tp.d_max)


def cloud_delay(tp: TaskProfile, cloud: CloudConfig) -> float:
    raw = tp.s / cloud.r0 + tp.s / cloud.v + tp.c / cloud.f0 + cloud.h
    return min(raw, tp.d_max)


def delay_reduction(f: float, d0: float, dn: float) -> float:
    # negative values are kept: a slow edge simply contributes negative utility
    return d0 - dn if f > 0 else 0.0


def sbs_utility(lam: float, f: float, delta: float, sbs: SbsConfig) -> float:
    if f == 0:
        return 0.0
    return min(lam, sbs.cap(f)) * delta


@dataclass(frozen=True)
class EdgeSystem:
    """All static inputs of one rental problem: SBSs, cloud, task and budget."""

    sbss: tuple[SbsConfig, ...]
    cloud: CloudConfig
    task: TaskProfile
    budget: float
    _gain: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sbss", tuple(self.sbss))
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        d0 = cloud_delay(self.task, self.cloud)
        gains = []
        for sbs in self.sbss:
            row = [0.0] + [delay_reduction(f, d0, edge_delay(self.task, sbs, f))
                           for f in sbs.rental_set[1:]]
            gains.append(tuple(row))
        object.__setattr__(self, "_gain", tuple(gains))

    @property
    def n(self) -> int:
        return len(self.sbss)

    def delay_gain(self, n: int, f: float) -> float:
        """Per-task delay reduction Delta_n(f)."""
        return self._gain[n][self.sbss[n].level_index(f)]

    def gain_table(self, n: int) -> tuple[float, ...]:
        return self._gain[n]

    def spend(self, decision: Sequence[float]) -> float:
        return math.fsum(s.price(f) for s, f in zip(self.sbss, decision))

    @property
    def w_min(self) -> float:
        """Cheapest nonzero rental price over all SBSs."""
        return min(s.prices[1] for s in self.sbss if len(s.prices) > 1)

    @property
    def lam_cap(self) -> float:
        return max(s.caps[-1] for s in self.sbss)

    def with_budget(self, budget: float) -> "EdgeSystem":
        return EdgeSystem(self.sbss, self.cloud, self.task, budget)

    def restricted(self, levels: Sequence[float]) -> "EdgeSystem":
        return EdgeSystem(tuple(s.restricted(levels) for s in self.sbss),
                          self.cloud, self.task, self.budget)


def total_utility(decision: Sequence[float], demand: Sequence[float], system: EdgeSystem) -> float:
    if len(decision) != system.n or len(demand) != system.n:
        raise ValueError(f"dimension mismatch: decision {len(decision)}, demand {len(demand)}, "
                         f"N={system.n}")
    total = 0.0
    for n, (f, lam) in enumerate(zip(decision, demand)):
        if f:
            sbs = system.sbss[n]
            total += sbs_utility(float(lam), f, system.delay_gain(n, f), sbs)
    return float(total)


def check_feasible(decision: Sequence[float], sbss: Sequence[SbsConfig], budget: float) -> bool:
    if len(decision) != len(sbss):
        return False
    cost = []
    for sbs, f in zip(sbss, decision):
        if float(f) not in sbs.rental_set:
            return False
        cost.append(sbs.price(f))
    return math.fsum(cost) <= budget


def reference_system(n_sbs: int = 5, budget: float = 8.0, rental_set=(0, 2, 4, 6)) -> EdgeSystem:
    """Reference setting: 2 GHz VMs, w(f)=f, lambda_max(f)=150 f, 1 MB tasks."""
    sbss = tuple(SbsConfig.linear(n, rental_set, 1.0, 150.0, rate=5e6, hz_per_unit=2e9)
                 for n in range(n_sbs))
    cloud = CloudConfig(f0=2e10, r0=2e6, v=1e8, h=0.05)
    task = TaskProfile(s=8e6, c=1e9, d_max=10.0)
    return EdgeSystem(sbss, cloud, task, budget)


def as_levels(decision) -> tuple[float, ...]:
    return tuple(float(f) for f in np.asarray(decision, dtype=float).ravel())
