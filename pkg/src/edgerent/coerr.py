"""Context-aware online edge resource rental (COERR)."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .estimators import EstimatorBank, Partition, mle_estimate, partition_point, record
from .kcg import build_kcg, get_solver
from .model import EdgeSystem
from .policy import Decision, Policy

EXPLORE, SEMI, EXPLOIT = "explore", "semi-explore", "exploit"


@dataclass(frozen=True)
class CoerrParams:
    horizon: int
    alpha: float
    dim: int
    h: int
    z: float  # exponent of t in K(t)


def _ceil_root(T: int, e: float) -> int:
    """Smallest integer h >= 1 with h**e >= T."""
    h = max(1, math.ceil(T ** (1.0 / e)))
    exact = float(e).is_integer()
    e_int = int(e) if exact else e

    def reaches(k):
        return k ** e_int >= T

    while h > 1 and reaches(h - 1):
        h -= 1
    while not reaches(h):
        h += 1
    return h


def design_parameters(T: int, alpha: float, D: int) -> CoerrParams:
    """h_T = ceil(T^(1/(3a+D))) and z = 2a/(3a+D)."""
    if T < 1 or alpha <= 0 or D < 1:
        raise ValueError("need T >= 1, alpha > 0, D >= 1")
    e = 3 * alpha + D
    return CoerrParams(int(T), float(alpha), int(D), _ceil_root(int(T), e), 2 * alpha / e)


def control_K(t: int, params: CoerrParams) -> float:
    """Exploration threshold K(t) = t^z ln t."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return t ** params.z * math.log(t)


def doubling_horizon(j: int, T1: int) -> int:
    if j < 1 or T1 < 1:
        raise ValueError("need j >= 1 and T1 >= 1")
    return 2 ** (j - 1) * T1


def explore_select(under: Sequence[int], system: EdgeSystem) -> list[int]:
    """Cheapest-first pick of under-explored SBSs at f_min while within budget.

    Ties on price go to the lower SBS index.
    """
    order = sorted(under, key=lambda n: (system.sbss[n].prices[1], n))
    chosen, spent = [], 0.0
    for n in order:
        cost = system.sbss[n].prices[1]
        if spent + cost > system.budget:
            break
        chosen.append(n)
        spent += cost
    return chosen


class Coerr(Policy):
    """COERR with MLE cell estimates and the ``C = 0`` under-explored rule.

    An SBS is under-explored when its current cell has fewer than K(t)
    observations or none at all; K(1) = 0 would otherwise let slot 1 exploit
    without any estimate.
    """

    name = "coerr"

    def __init__(self, system: EdgeSystem, params: CoerrParams, solver: str = "bb",
                 name: Optional[str] = None):
        self.system = system
        self.params = params
        self.partition = Partition(params.h, params.dim)
        self.bank = EstimatorBank(system.n)
        self.solve = get_solver(solver)
        self.solver_name = solver
        self.t = 1
        self.phase_log: list[str] = []
        # (n, cell) -> rentals made while n was under-explored at that cell
        self.exploration_rentals: Counter = Counter()
        self.under_log: list[tuple[int, ...]] = []
        self._pending: Optional[tuple[int, list, list]] = None
        if name:
            self.name = name

    def cells_for(self, contexts: np.ndarray) -> list[tuple[int, ...]]:
        return [partition_point(x, self.partition) for x in contexts]

    def under_explored(self, cells: Sequence[tuple[int, ...]], t: int) -> list[int]:
        k = control_K(t, self.params)
        out = []
        for n, cell in enumerate(cells):
            c = self.bank.count(n, cell)
            if c == 0 or c < k:
                out.append(n)
        return out

    def decide(self, t: int, contexts: np.ndarray) -> tuple[Decision, str]:
        if t != self.t:
            raise RuntimeError(f"COERR expected slot {self.t}, got {t}")
        sys_ = self.system
        cells = self.cells_for(contexts)
        under = self.under_explored(cells, t)
        if under and sum(sys_.sbss[n].prices[1] for n in under) >= sys_.budget:
            picked = set(explore_select(under, sys_))
            decision = tuple(sys_.sbss[n].f_min if n in picked else 0.0 for n in range(sys_.n))
            phase = EXPLORE
        else:
            estimates = []
            for n, cell in enumerate(cells):
                st = self.bank.get(n, cell)
                estimates.append(mle_estimate(st) if st is not None and st.count else 0.0)
            forced = {n: sys_.sbss[n].f_min for n in under}
            inst = build_kcg(estimates, sys_, forced)
            decision = self.solve(inst).decision(inst)
            phase = SEMI if under else EXPLOIT
        self.under_log.append(tuple(under))
        self._pending = (t, cells, under)
        self.phase_log.append(phase)
        return decision, phase

    def observe(self, t: int, decision: Decision, demand: Sequence[float], utility: float = 0.0) -> None:
        if self._pending is None or self._pending[0] != t:
            raise RuntimeError(f"observe({t}) without matching decide")
        _, cells, under = self._pending
        under = set(under)
        for n, f in enumerate(decision):
            if f > 0:
                if n in under:
                    self.exploration_rentals[(n, cells[n])] += 1
                record(self.bank, n, cells[n], float(demand[n]))
        self._pending = None
        self.t += 1


class DoublingCoerr(Policy):
    """COERR for an unknown horizon: restart with fresh state every phase,
    phase j lasting 2^(j-1) * T1 slots with parameters designed for that length.
    """

    name = "coerr-doubling"

    def __init__(self, system: EdgeSystem, T1: int, alpha: float, dim: int, solver: str = "bb"):
        self.system, self.T1, self.alpha, self.dim, self.solver = system, T1, alpha, dim, solver
        self.phase_index = 0
        self.phase_start = 1
        self.inner: Optional[Coerr] = None
        self.phase_log: list[str] = []

    def _roll(self, t: int) -> None:
        if self.inner is None or t >= self.phase_start + doubling_horizon(self.phase_index, self.T1):
            if self.inner is not None:
                self.phase_start += doubling_horizon(self.phase_index, self.T1)
            self.phase_index += 1
            length = doubling_horizon(self.phase_index, self.T1)
            self.inner = Coerr(self.system, design_parameters(length, self.alpha, self.dim), self.solver)

    def decide(self, t: int, contexts: np.ndarray) -> tuple[Decision, str]:
        self._roll(t)
        decision, phase = self.inner.decide(t - self.phase_start + 1, contexts)
        self.phase_log.append(phase)
        return decision, phase

    def observe(self, t: int, decision: Decision, demand: Sequence[float], utility: float = 0.0) -> None:
        self.inner.observe(t - self.phase_start + 1, decision, demand, utility)
