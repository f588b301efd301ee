"""Regret series and the leading-order regret bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


def _utilities(records):
    oracle = np.fromiter((r.oracle_utility for r in records), float)
    policy = np.fromiter((r.utility for r in records), float)
    return oracle, policy


def regret_series(records: Sequence) -> np.ndarray:
    """Cumulative sum of (oracle utility - policy utility) per slot."""
    oracle, policy = _utilities(records)
    return np.cumsum(oracle - policy)


def delta_regret_series(records: Sequence, delta: float) -> np.ndarray:
    """Cumulative sum of (oracle utility / delta - policy utility)."""
    if not delta >= 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    oracle, policy = _utilities(records)
    return np.cumsum(oracle / delta - policy)


@dataclass(frozen=True)
class RegretBound:
    exponent: float
    constant: float
    value: float

    def curve(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.constant * t ** self.exponent * np.log(t)


def regret_bound(T: int, alpha: float, dim: int, n_sbs: int, budget: float, lam_max: float,
                 d_max: float, w_min: float, delta: float = 1.0) -> RegretBound:
    """Leading order 2^D N B lam_max d_max / (delta w_min) * T^((2a+D)/(3a+D)) ln T."""
    if min(T, alpha, dim, n_sbs, budget, lam_max, d_max, w_min) <= 0:
        raise ValueError("bound constants must be positive")
    exponent = (2 * alpha + dim) / (3 * alpha + dim)
    constant = 2 ** dim * n_sbs * budget * lam_max * d_max / (delta * w_min)
    return RegretBound(exponent, constant, constant * T ** exponent * math.log(T))


def slope(series: np.ndarray, start: int, stop: int) -> float:
    """Average per-slot increase of a cumulative series between 1-based slots."""
    return float(series[stop - 1] - series[start - 1]) / (stop - start)
