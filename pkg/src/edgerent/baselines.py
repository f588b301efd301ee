"""Benchmark policies: Oracle, CUCB, LinUCB, Random and COERR-ORX."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .coerr import Coerr, CoerrParams
from .kcg import build_kcg, get_solver
from .model import EdgeSystem
from .policy import Decision, Policy


def oracle_decide(mu: Sequence[float], system: EdgeSystem, solver: str = "bb") -> Decision:
    """Best rental decision when the expected demands ``mu`` are known."""
    inst = build_kcg(mu, system)
    return get_solver(solver)(inst).decision(inst)


class OraclePolicy(Policy):
    name = "oracle"

    def __init__(self, system: EdgeSystem, mean_fn: Callable[[int, np.ndarray], Sequence[float]],
                 solver: str = "bb"):
        self.system, self.mean_fn, self.solver = system, mean_fn, solver

    def decide(self, t, contexts):
        return oracle_decide(self.mean_fn(t, contexts), self.system, self.solver), "-"


@dataclass
class ArmTable:
    """All feasible rental vectors in product order (SBS 0 varies slowest)."""

    arms: list[Decision]
    spend: np.ndarray
    pulls: np.ndarray = field(init=False)
    means: np.ndarray = field(init=False)

    def __post_init__(self):
        self.pulls = np.zeros(len(self.arms), dtype=np.int64)
        self.means = np.zeros(len(self.arms))

    def __len__(self):
        return len(self.arms)

    def fresh(self) -> "ArmTable":
        return ArmTable(self.arms, self.spend)

    def update(self, k: int, reward: float) -> None:
        self.pulls[k] += 1
        self.means[k] += (reward - self.means[k]) / self.pulls[k]


def enumerate_arms(system: EdgeSystem, cap: int = 10_000_000) -> ArmTable:
    product = math.prod(len(s.rental_set) for s in system.sbss)
    if product > cap:
        raise ValueError(f"arm space {product} exceeds cap {cap}")
    B = system.budget
    # cheapest possible spend of the remaining SBSs is 0, so prune on spend alone
    arms: list[Decision] = []
    spends: list[float] = []
    levels = [s.rental_set for s in system.sbss]
    prices = [s.prices for s in system.sbss]
    cur: list[float] = []

    def walk(n: int, spent: float):
        if n == system.n:
            arms.append(tuple(cur))
            spends.append(spent)
            return
        for f, w in zip(levels[n], prices[n]):
            if spent + w > B:
                break  # prices are non-decreasing
            cur.append(f)
            walk(n + 1, spent + w)
            cur.pop()

    walk(0, 0.0)
    return ArmTable(arms, np.asarray(spends))


def reward_bound(system: EdgeSystem) -> float:
    """(B / w_min) * lambda_max * d_max: scales utilities into [0, 1] for UCB indices."""
    return max(system.budget / system.w_min, 1.0) * system.lam_cap * system.task.d_max


def ucb_index(mean: float, pulls: int, t: float) -> float:
    return mean + math.sqrt(2.0 * math.log(t) / pulls)


class CucbPolicy(Policy):
    """UCB1 over the enumerated arm table, one sweep of every arm first."""

    name = "cucb"

    def __init__(self, table: ArmTable, scale: float):
        self.table = table.fresh()
        self.scale = scale
        self._last: Optional[int] = None

    def select(self, t: int) -> int:
        tab = self.table
        unplayed = np.flatnonzero(tab.pulls == 0)
        if unplayed.size:
            return int(unplayed[0])
        idx = tab.means + np.sqrt(2.0 * math.log(t) / tab.pulls)
        return int(np.argmax(idx))  # first maximum = lowest index

    def decide(self, t, contexts):
        self._last = self.select(t)
        return self.table.arms[self._last], "-"

    def observe(self, t, decision, demand, utility):
        self.table.update(self._last, utility / self.scale)


class LinUcbPolicy(Policy):
    """Disjoint LinUCB: one ridge model per arm on the stacked SBS contexts."""

    name = "linucb"

    def __init__(self, table: ArmTable, dim: int, alpha: float = 1.0, ridge: float = 1.0,
                 scale: float = 1.0):
        K = len(table)
        self.table = table.fresh()
        self.alpha, self.scale = alpha, scale
        self.A_inv = np.repeat(np.eye(dim)[None] / ridge, K, axis=0)
        self.b = np.zeros((K, dim))
        self._last: Optional[tuple[int, np.ndarray]] = None

    def indices(self, x: np.ndarray) -> np.ndarray:
        theta = np.einsum("kij,kj->ki", self.A_inv, self.b)
        Ax = self.A_inv @ x
        width = np.sqrt(np.maximum(Ax @ x, 0.0))
        return theta @ x + self.alpha * width

    def decide(self, t, contexts):
        x = np.asarray(contexts, dtype=float).ravel()
        k = int(np.argmax(self.indices(x)))
        self._last = (k, x)
        return self.table.arms[k], "-"

    def observe(self, t, decision, demand, utility):
        k, x = self._last
        r = utility / self.scale
        Ai = self.A_inv[k]
        Ax = Ai @ x
        self.A_inv[k] = Ai - np.outer(Ax, Ax) / (1.0 + x @ Ax)  # Sherman-Morrison
        self.b[k] += r * x
        self.table.update(k, r)


class RandomPolicy(Policy):
    name = "random"

    def __init__(self, table: ArmTable, rng: np.random.Generator):
        self.table, self.rng = table, rng

    def decide(self, t, contexts):
        return self.table.arms[int(self.rng.integers(len(self.table)))], "-"


def coerr_orx(system: EdgeSystem, X: float, params: CoerrParams, solver: str = "bb") -> Coerr:
    """COERR restricted to renting either nothing or exactly X at each SBS."""
    for s in system.sbss:
        if float(X) == 0 or float(X) not in s.rental_set:
            raise ValueError(f"X={X} is not a nonzero level of SBS {s.id}")
    return Coerr(system.restricted([X]), params, solver, name=f"coerr-or{X:g}")
