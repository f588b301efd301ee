"""Synthetic context-dependent demand with a declared Hölder constant.

Each SBS has a mean demand surface over (time of day, daily activity level):

    mu(x) = lam_max * (base + amplitude * cos(2 pi (x_1 - peak)) + level_slope * (x_2 - 0.5))

clipped to [0, lam_max]. Time of day is a uniform instant inside each slot,
so every time cell is visited equally often. The activity level is redrawn
once per day around an SBS-specific center, so an SBS spends most days in a
single band of x_2, as a daily report would.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .trace import DAY_SECONDS, SlotSeries


@dataclass(frozen=True)
class DemandProfile:
    base: float
    amplitude: float
    peak: float
    level_slope: float

    def lipschitz(self, lam_max: float, dim: int) -> float:
        g1 = 2 * math.pi * abs(self.amplitude)
        g2 = abs(self.level_slope) if dim > 1 else 0.0
        return lam_max * math.hypot(g1, g2)


# Reference SBS mix: three quiet sites and two busy ones that can use 6 VMs.
# The busiest site sits last, where the lowest-index tie rule of pure
# exploration skips it; it gets explored by exploitation instead.
DEFAULT_PROFILES = (
    DemandProfile(0.20, 0.06, 0.45, 0.20),
    DemandProfile(0.42, 0.10, 0.65, 0.30),
    DemandProfile(0.26, 0.08, 0.90, 0.20),
    DemandProfile(0.50, 0.12, 0.10, 0.30),
    DemandProfile(0.62, 0.12, 0.30, 0.30),
)
DEFAULT_LEVEL_CENTERS = (0.1, 0.5, 0.3, 0.7, 0.9)


def default_profiles(n_sbs: int) -> tuple[tuple[DemandProfile, ...], tuple[float, ...]]:
    """Cycle the reference mix, shifting each extra lap's peak hour."""
    profiles, centers = [], []
    for n in range(n_sbs):
        lap, k = divmod(n, len(DEFAULT_PROFILES))
        p = DEFAULT_PROFILES[k]
        profiles.append(DemandProfile(p.base, p.amplitude, (p.peak + 0.37 * lap) % 1.0, p.level_slope))
        centers.append(DEFAULT_LEVEL_CENTERS[(k + lap) % len(DEFAULT_LEVEL_CENTERS)])
    return tuple(profiles), tuple(centers)


@dataclass(frozen=True)
class SyntheticModel:
    profiles: tuple[DemandProfile, ...]
    level_centers: tuple[float, ...]
    lam_max: float = 900.0
    noise_std: float = 40.0
    level_std: float = 0.03
    dim: int = 2
    alpha: float = 1.0
    holder_L: Optional[float] = None  # None: use the analytic Lipschitz bound
    time_jitter: bool = True
    _arrays: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.profiles) != len(self.level_centers):
            raise ValueError("one level center per profile")
        if self.dim not in (1, 2):
            raise ValueError("synthetic contexts support dim 1 or 2")
        if self.lam_max <= 0 or self.noise_std < 0 or self.level_std < 0:
            raise ValueError("lam_max > 0 and non-negative noise required")
        if self.holder_L is None:
            L = max(p.lipschitz(self.lam_max, self.dim) for p in self.profiles)
            object.__setattr__(self, "holder_L", L)
        arr = np.array([[p.base, p.amplitude, p.peak, p.level_slope] for p in self.profiles])
        object.__setattr__(self, "_arrays", tuple(arr.T))

    @classmethod
    def default(cls, n_sbs: int, **kw) -> "SyntheticModel":
        profiles, centers = default_profiles(n_sbs)
        return cls(profiles, centers, **kw)

    @property
    def n(self) -> int:
        return len(self.profiles)

    def mean(self, contexts: np.ndarray) -> np.ndarray:
        """Expected demand per SBS for contexts shaped (N, dim)."""
        x = np.asarray(contexts, dtype=float)
        base, amp, peak, slope = self._arrays
        frac = base + amp * np.cos(2 * np.pi * (x[:, 0] - peak))
        if self.dim > 1:
            frac = frac + slope * (x[:, 1] - 0.5)
        return np.clip(self.lam_max * frac, 0.0, self.lam_max)

    def mean_one(self, n: int, x: Sequence[float]) -> float:
        ctx = np.zeros((self.n, self.dim))
        ctx[n] = x
        return float(self.mean(ctx)[n])


def synthesize(model: SyntheticModel, contexts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One realized demand vector: normal noise around the mean, clipped to [0, lam_max]."""
    mu = model.mean(contexts)
    if model.noise_std == 0:
        return mu
    return np.clip(rng.normal(mu, model.noise_std), 0.0, model.lam_max)


def synthetic_contexts(model: SyntheticModel, horizon: int, slot_seconds: float,
                       rng: np.random.Generator) -> np.ndarray:
    starts = np.arange(horizon) * slot_seconds
    ctx = np.zeros((horizon, model.n, model.dim))
    # time of day: a uniform instant inside the slot, or the slot start
    offset = rng.random(horizon) * slot_seconds if model.time_jitter else np.zeros(horizon)
    ctx[:, :, 0] = (((starts + offset) % DAY_SECONDS) / DAY_SECONDS)[:, None]
    if model.dim > 1:
        day = (starts // DAY_SECONDS).astype(np.int64)
        n_days = int(day[-1]) + 1 if horizon else 0
        centers = np.asarray(model.level_centers)
        levels = np.clip(centers + model.level_std * rng.standard_normal((n_days, model.n)), 0.0, 1.0)
        ctx[:, :, 1] = levels[day]
    return ctx


def generate_series(model: SyntheticModel, horizon: int, slot_seconds: float = 10800.0,
                    seed=0) -> SlotSeries:
    """Contexts and realized demands for every slot, drawn up front.

    All policies in a run replay this one series (common random numbers).
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    ctx_rng, dem_rng = (np.random.default_rng(s) for s in seed.spawn(2))
    ctx = synthetic_contexts(model, horizon, slot_seconds, ctx_rng)
    demand = np.empty((horizon, model.n))
    for t in range(horizon):
        demand[t] = synthesize(model, ctx[t], dem_rng)
    return SlotSeries(demand, ctx, slot_seconds)


@dataclass
class HolderReport:
    passed: bool
    worst_ratio: float  # max |mu(x)-mu(x')| / (L ||x-x'||^alpha) seen
    worst_pair: Optional[tuple] = None  # (sbs, x, x')

    def __str__(self):
        status = "ok" if self.passed else "VIOLATED"
        msg = f"Hölder check {status}: worst ratio {self.worst_ratio:.4f}"
        if not self.passed and self.worst_pair is not None:
            n, x, y = self.worst_pair
            msg += f" at SBS {n}, x={np.round(x, 4).tolist()}, x'={np.round(y, 4).tolist()}"
        return msg


def check_holder(mean_fn: Callable[[int, np.ndarray], float], n_sbs: int, dim: int, L: float,
                 alpha: float, n_pairs: int = 2000, tol: float = 1.0, seed=0) -> HolderReport:
    """Sample context pairs and test |mu(x)-mu(x')| <= tol * L * ||x-x'||^alpha."""
    if L <= 0 or alpha <= 0:
        raise ValueError("Hölder constants must be positive")
    rng = np.random.default_rng(seed)
    worst, pair = 0.0, None
    for n in range(n_sbs):
        xs = rng.random((n_pairs, dim))
        # half the pairs are close together, where Hölder violations hide
        ys = np.where(np.arange(n_pairs)[:, None] % 2 == 0, rng.random((n_pairs, dim)),
                      np.clip(xs + rng.normal(0, 0.01, (n_pairs, dim)), 0, 1))
        for x, y in zip(xs, ys):
            dist = float(np.linalg.norm(x - y))
            if dist == 0:
                continue
            ratio = abs(mean_fn(n, x) - mean_fn(n, y)) / (L * dist ** alpha)
            if ratio > worst:
                worst, pair = ratio, (n, x, y)
    return HolderReport(worst <= tol, worst, pair)


def check_model_holder(model: SyntheticModel, n_pairs: int = 2000, tol: float = 1.0, seed=0) -> HolderReport:
    return check_holder(model.mean_one, model.n, model.dim, model.holder_L, model.alpha,
                        n_pairs, tol, seed)
