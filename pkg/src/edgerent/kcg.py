"""Knapsack with a conflict graph for the per-slot rental subproblem.

Every (SBS, nonzero capacity) pair is an item; items of the same SBS conflict
with each other, so the conflict graph is a disjoint union of cliques and the
problem is a multiple-choice knapsack.

All solvers rank candidate selections with the same key: larger value first
(value is the exactly rounded ``math.fsum`` of the chosen item values), then
fewer items, then the lexicographically smallest sorted id tuple. Exact solvers
therefore return identical selections, not just identical values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .model import EdgeSystem


class KcgError(ValueError):
    pass


@dataclass(frozen=True)
class KcgItem:
    id: int
    group: int
    capacity: float
    weight: float
    value: float

    def __post_init__(self):
        if self.weight < 0:
            raise KcgError(f"item {self.id}: negative weight")


@dataclass(frozen=True)
class KcgInstance:
    items: tuple[KcgItem, ...]
    budget: float
    forced: frozenset = frozenset()  # item ids that must be selected
    n_groups: int = 0
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "forced", frozenset(self.forced))
        by_id = {it.id: it for it in items}
        if len(by_id) != len(items):
            raise KcgError("duplicate item ids")
        object.__setattr__(self, "_by_id", by_id)
        n_groups = max([self.n_groups] + [it.group + 1 for it in items])
        object.__setattr__(self, "n_groups", n_groups)
        if self.budget < 0:
            raise KcgError("budget must be non-negative")
        seen = set()
        for k in self.forced:
            if k not in by_id:
                raise KcgError(f"forced item {k} not in instance")
            g = by_id[k].group
            if g in seen:
                raise KcgError(f"two forced items in group {g}")
            seen.add(g)
        if math.fsum(by_id[k].weight for k in self.forced) > self.budget:
            raise KcgError("infeasible exploration: forced items exceed budget")

    def item(self, k: int) -> KcgItem:
        return self._by_id[k]

    def groups(self) -> list[list[KcgItem]]:
        out: list[list[KcgItem]] = [[] for _ in range(self.n_groups)]
        for it in self.items:
            out[it.group].append(it)
        return out

    def forced_by_group(self) -> dict[int, KcgItem]:
        return {self._by_id[k].group: self._by_id[k] for k in self.forced}

    def value_of(self, ids: Iterable[int]) -> float:
        return math.fsum(self._by_id[k].value for k in ids)

    def weight_of(self, ids: Iterable[int]) -> float:
        return math.fsum(self._by_id[k].weight for k in ids)

    def is_feasible(self, ids: Sequence[int]) -> bool:
        groups = [self._by_id[k].group for k in ids]
        return (len(set(groups)) == len(groups)
                and self.forced <= set(ids)
                and self.weight_of(ids) <= self.budget)


@dataclass(frozen=True)
class KcgSolution:
    chosen: tuple[int, ...]
    value: float
    weight: float
    exact: bool
    delta: Optional[float] = 1.0  # None: approximation ratio not measured

    def decision(self, inst: KcgInstance) -> tuple[float, ...]:
        levels = [0.0] * inst.n_groups
        for k in self.chosen:
            it = inst.item(k)
            levels[it.group] = it.capacity
        return tuple(levels)


def _key(inst: KcgInstance, ids: Sequence[int]):
    ids = tuple(sorted(ids))
    return (-inst.value_of(ids), len(ids), ids)


def _solution(inst: KcgInstance, ids, exact=True, delta=1.0) -> KcgSolution:
    ids = tuple(sorted(ids))
    return KcgSolution(ids, inst.value_of(ids), inst.weight_of(ids), exact, delta)


def build_kcg(estimates: Sequence[float], system: EdgeSystem,
              forced: Optional[Mapping[int, float]] = None) -> KcgInstance:
    """Items for every (SBS, nonzero level); value = min(estimate, cap) * Delta.

    ``forced`` maps SBS index -> level that must be rented.
    """
    if len(estimates) != system.n:
        raise KcgError(f"expected {system.n} estimates, got {len(estimates)}")
    items = []
    forced_ids = []
    forced = dict(forced or {})
    k = 0
    for n, (sbs, lam) in enumerate(zip(system.sbss, estimates)):
        lam = float(lam)
        if not math.isfinite(lam) or lam < 0:
            raise KcgError(f"SBS {n}: estimate must be finite and >= 0, got {lam}")
        gains = system.gain_table(n)
        for i in range(1, len(sbs.rental_set)):
            f = sbs.rental_set[i]
            items.append(KcgItem(k, n, f, sbs.prices[i], min(lam, sbs.caps[i]) * gains[i]))
            if n in forced and float(forced[n]) == f:
                forced_ids.append(k)
            k += 1
    for n, f in forced.items():
        if not any(items[i].group == n and items[i].capacity == float(f) for i in forced_ids):
            raise KcgError(f"forced level {f} not offered by SBS {n}")
    return KcgInstance(tuple(items), system.budget, frozenset(forced_ids), system.n)


def solve_brute_force(inst: KcgInstance, max_items: int = 20) -> KcgSolution:
    """Exhaustive enumeration of per-group choices; the correctness oracle."""
    if len(inst.items) > max_items:
        raise KcgError(f"too large for brute force: {len(inst.items)} items > {max_items}")
    forced = inst.forced_by_group()
    options = []
    for g, grp in enumerate(inst.groups()):
        if g in forced:
            options.append([forced[g].id])
        else:
            options.append([None] + [it.id for it in grp])
    best_key, best = None, ()
    for combo in itertools.product(*options):
        ids = [k for k in combo if k is not None]
        if inst.weight_of(ids) > inst.budget:
            continue
        key = _key(inst, ids)
        if best_key is None or key < best_key:
            best_key, best = key, ids
    return _solution(inst, best)


def solve_exact_dp(inst: KcgInstance, quantum: float = 1.0) -> KcgSolution:
    """Pseudo-polynomial DP over (group, residual budget); O(items * B/quantum)."""
    scaled = {}
    for it in inst.items:
        q = it.weight / quantum
        if abs(q - round(q)) > 1e-9:
            raise KcgError("DP requires integral weights")
        scaled[it.id] = int(round(q))
    cap = int(math.floor(inst.budget / quantum + 1e-9))
    forced = inst.forced_by_group()
    groups = inst.groups()
    # best[b]: key/ids of the best selection over groups processed so far using
    # at most b budget units; filled back to front so ids stay comparable.
    best: list = [((-0.0, 0, ()), ())] * (cap + 1)
    for g in range(len(groups) - 1, -1, -1):
        choices = [forced[g]] if g in forced else groups[g]
        nxt = []
        for b in range(cap + 1):
            cands = [] if g in forced or best[b] is None else [best[b]]
            for it in choices:
                wb = scaled[it.id]
                if wb <= b and best[b - wb] is not None:
                    ids = tuple(sorted(best[b - wb][1] + (it.id,)))
                    cands.append((_key(inst, ids), ids))
            nxt.append(min(cands) if cands else None)
        best = nxt
    if best[cap] is None:
        raise KcgError("infeasible exploration: forced items exceed budget")
    return _solution(inst, best[cap][1])


def solve_branch_and_bound(inst: KcgInstance) -> KcgSolution:
    """Depth-first branch and bound over per-group choices.

    The bound for the unassigned groups is the smaller of (a) the sum of each
    group's best positive value and (b) the fractional knapsack over all their
    positive-value items with conflicts dropped.
    """
    forced = inst.forced_by_group()
    groups = inst.groups()
    G = len(groups)
    options = []
    for g in range(G):
        if g in forced:
            options.append([forced[g]])
        else:
            # non-positive items never improve the key, so they are not branched on
            opts = sorted((it for it in groups[g] if it.value > 0), key=lambda it: (-it.value, it.id))
            options.append(opts)
    suffix_best = [0.0] * (G + 1)
    for g in range(G - 1, -1, -1):
        top = max([0.0] + [it.value for it in options[g]]) if g not in forced else forced[g].value
        suffix_best[g] = suffix_best[g + 1] + top
    free = sorted((it for g in range(G) if g not in forced for it in options[g]),
                  key=lambda it: (-(it.value / it.weight) if it.weight > 0 else -math.inf, it.id))
    forced_after = [0.0] * (G + 1)
    for g in range(G - 1, -1, -1):
        forced_after[g] = forced_after[g + 1] + (forced[g].weight if g in forced else 0.0)

    def bound(g: int, room: float) -> float:
        ub_groups = suffix_best[g]
        room -= forced_after[g]
        ub_frac = math.fsum(forced[h].value for h in forced if h >= g)
        for it in free:
            if it.group < g:
                continue
            if it.weight <= room:
                ub_frac += it.value
                room -= it.weight
            else:
                ub_frac += it.value * (room / it.weight)
                break
        return min(ub_groups, ub_frac)

    best_key = None
    best_ids: tuple = ()
    chosen: list[int] = []
    chosen_w: list[float] = []

    def visit(g: int, value: float, room: float):
        nonlocal best_key, best_ids
        if g == G:
            key = _key(inst, chosen)
            if best_key is None or key < best_key:
                best_key, best_ids = key, tuple(chosen)
            return
        if best_key is not None:
            incumbent = -best_key[0]
            if value + bound(g, room) < incumbent - 1e-9 * max(1.0, abs(incumbent)):
                return
        for it in options[g]:
            # same exact feasibility rule as the other solvers
            later = [forced[h].weight for h in forced if h > g]
            if math.fsum([*chosen_w, it.weight, *later]) <= inst.budget:
                chosen.append(it.id)
                chosen_w.append(it.weight)
                visit(g + 1, value + it.value, room - it.weight)
                chosen.pop()
                chosen_w.pop()
        if g not in forced:
            visit(g + 1, value, room)

    visit(0, 0.0, inst.budget)
    if best_key is None:
        raise KcgError("infeasible exploration: forced items exceed budget")
    return _solution(inst, best_ids)


def measured_ratio(optimum: float, value: float) -> float:
    """Smallest delta with delta*value >= optimum (inf if none exists)."""
    if value >= optimum:
        return 1.0
    if value > 0:
        return optimum / value
    return math.inf


def solve_greedy(inst: KcgInstance, reference: Optional[KcgSolution] = None) -> KcgSolution:
    """Density-ordered greedy with in-group upgrades.

    Forced items go in first. Remaining positive-value items are scanned once
    in decreasing value/weight order; an item is taken if its group is empty
    and it fits, or replaces the group's current pick if it is strictly more
    valuable and the swap still fits. If ``reference`` (an exact solution of
    the same instance) is given, the measured ratio is stored in ``delta``.
    """
    picks: dict[int, KcgItem] = dict(inst.forced_by_group())
    locked = set(picks)
    spent = math.fsum(it.weight for it in picks.values())
    cands = sorted((it for it in inst.items if it.value > 0 and it.group not in locked),
                   key=lambda it: (-(it.value / it.weight) if it.weight > 0 else -math.inf, it.id))
    for it in cands:
        cur = picks.get(it.group)
        if cur is None:
            if spent + it.weight <= inst.budget:
                picks[it.group] = it
                spent += it.weight
        elif it.value > cur.value and spent - cur.weight + it.weight <= inst.budget:
            picks[it.group] = it
            spent += it.weight - cur.weight
    sol = _solution(inst, [it.id for it in picks.values()], exact=False, delta=None)
    if reference is not None:
        sol = KcgSolution(sol.chosen, sol.value, sol.weight, False,
                          measured_ratio(reference.value, sol.value))
    return sol


SOLVERS: dict[str, Callable[[KcgInstance], KcgSolution]] = {
    "bb": solve_branch_and_bound,
    "dp": solve_exact_dp,
    "bruteforce": solve_brute_force,
    "greedy": solve_greedy,
}


def get_solver(name: str) -> Callable[[KcgInstance], KcgSolution]:
    try:
        return SOLVERS[name]
    except KeyError:
        raise KcgError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None


def read_instance_csv(path, budget: float, forced: Iterable[int] = ()) -> KcgInstance:
    """Rows ``id,group,weight,value`` (header optional); capacity is set to the weight."""
    import csv

    items = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip().lower() == "id":
                continue
            try:
                k, g, w, v = row[:4]
                items.append(KcgItem(int(k), int(g), float(w), float(w), float(v)))
            except (ValueError, TypeError) as exc:
                raise KcgError(f"{path}:{lineno}: bad row {row!r} ({exc})") from None
    return KcgInstance(tuple(items), budget, frozenset(forced))
