"""Self-check suites behind ``edgerent validate``.

Each suite returns a list of :class:`Check` rows; the CLI prints them as a
pass/fail matrix and exits nonzero on any failure.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .baselines import enumerate_arms
from .coerr import design_parameters
from .estimators import hoeffding_tail
from .harness.synthetic import SyntheticModel, check_model_holder
from .kcg import (KcgInstance, KcgItem, KcgSolution, solve_branch_and_bound, solve_brute_force,
                  solve_exact_dp, solve_greedy)
from .model import reference_system


@dataclass
class Check:
    suite: str
    case: str
    passed: bool
    detail: str = ""


def random_instance(rng: np.random.Generator, max_items: int = 12) -> KcgInstance:
    """Random multiple-choice instance: integer weights 1-6, values 0-100, budget 0-15."""
    n_items = int(rng.integers(1, max_items + 1))
    n_groups = int(rng.integers(1, n_items + 1))
    groups = rng.integers(0, n_groups, n_items)
    weights = rng.integers(1, 7, n_items)
    values = rng.integers(0, 101, n_items)
    budget = int(rng.integers(0, 16))
    items = [KcgItem(k, int(g), float(w), float(w), float(v))
             for k, (g, w, v) in enumerate(zip(groups, weights, values))]
    forced, spent = [], 0
    for g in map(int, rng.permutation(n_groups)):
        members = [it for it in items if it.group == g]
        if not members or rng.random() >= 0.3:
            continue
        it = members[int(rng.integers(len(members)))]
        if spent + it.weight <= budget:
            forced.append(it.id)
            spent += it.weight
    return KcgInstance(tuple(items), float(budget), frozenset(forced), n_groups)


EXACT_SOLVERS: dict[str, Callable[[KcgInstance], KcgSolution]] = {
    "bb": solve_branch_and_bound,
    "dp": solve_exact_dp,
}


def kcg_suite(n_instances: int = 1000, seed: int = 0,
              solvers: Optional[Mapping[str, Callable]] = None) -> tuple[list[Check], float]:
    """Exact solvers against brute force, and greedy's measured ratio.

    Returns the checks and the worst measured greedy ratio.
    """
    solvers = dict(EXACT_SOLVERS if solvers is None else solvers)
    rng = np.random.default_rng(seed)
    bad = {name: [] for name in solvers}
    infeasible, greedy_bad, worst = [], [], 1.0
    for i in range(n_instances):
        inst = random_instance(rng)
        ref = solve_brute_force(inst)
        for name, solve in solvers.items():
            sol = solve(inst)
            if not inst.is_feasible(sol.chosen):
                infeasible.append((name, i))
            if sol.value != ref.value:
                bad[name].append(i)
        g = solve_greedy(inst, ref)
        if not inst.is_feasible(g.chosen):
            infeasible.append(("greedy", i))
        worst = max(worst, g.delta)
        if not g.delta * g.value >= ref.value - 1e-9 * max(1.0, ref.value):
            greedy_bad.append(i)
    out = [Check("kcg", f"{name} == brute force", not idx,
                 f"{n_instances - len(idx)}/{n_instances} equal" + (f", first miss #{idx[0]}" if idx else ""))
           for name, idx in bad.items()]
    out.append(Check("kcg", "all solutions feasible", not infeasible,
                     f"{len(infeasible)} infeasible" if infeasible else "ok"))
    out.append(Check("kcg", "greedy delta*value >= optimum", not greedy_bad and math.isfinite(worst),
                     f"worst measured delta {worst:.4f}"))
    return out, worst


def pac_suite(trials: int = 10_000, seed: int = 0, lam_max: float = 300.0) -> list[Check]:
    """Monte-Carlo violation frequency of |mean - mu| > eps against the tail bound.

    Demands are i.i.d. from two bounded laws on [0, lam_max]: uniform, and the
    symmetric two-point law, which has the largest variance allowed.
    """
    rng = np.random.default_rng(seed)
    laws = {
        "uniform": (lambda size: rng.random(size) * lam_max, lam_max / 2),
        "two-point": (lambda size: (rng.random(size) < 0.5) * lam_max, lam_max / 2),
    }
    out = []
    for law, (draw, mu) in laws.items():
        for count in (10, 50, 200):
            samples = draw((trials, count))
            means = samples.mean(axis=1)
            for eps in (15.0, 30.0):
                freq = float(np.mean(np.abs(means - mu) > eps))
                bound = min(1.0, 2 * hoeffding_tail(eps, count, lam_max))
                slack = 3 * math.sqrt(bound * (1 - bound) / trials)
                out.append(Check("pac", f"{law} C={count} eps={eps:g}", freq <= bound + slack,
                                 f"freq {freq:.4f} <= {bound:.4f} + {slack:.4f}"))
    return out


def holder_suite(n_sbs: int = 5, seed: int = 0) -> list[Check]:
    model = SyntheticModel.default(n_sbs)
    rep = check_model_holder(model, seed=seed)
    return [Check("holder", f"default model L={model.holder_L:.1f}", rep.passed, str(rep))]


REFERENCE_ARMS = {5: 121, 8: 487, 10: 991}
REFERENCE_CELLS = {5: 125, 8: 200, 10: 250}


def count_arms_brute(n_sbs: int, levels=(0, 2, 4, 6), budget: float = 8.0) -> int:
    return sum(1 for combo in itertools.product(levels, repeat=n_sbs) if sum(combo) <= budget)


def sizes_suite(T: int = 2700) -> list[Check]:
    params = design_parameters(T, 1.0, 2)
    out = []
    for n, expected in REFERENCE_ARMS.items():
        got = len(enumerate_arms(reference_system(n)))
        brute = count_arms_brute(n)
        out.append(Check("sizes", f"arms N={n}", got == expected == brute,
                         f"enumerated {got}, brute force {brute}, expected {expected}"))
        cells = n * params.h ** params.dim
        out.append(Check("sizes", f"cells N={n}", cells == REFERENCE_CELLS[n], f"{cells} = {n}*{params.h}^{params.dim}"))
    return out


SUITES = ("kcg", "pac", "holder", "sizes")


def run_all(seed: int = 0, suites=SUITES) -> list[Check]:
    checks: list[Check] = []
    for name in suites:
        t0 = time.perf_counter()
        if name == "kcg":
            rows, _ = kcg_suite(seed=seed)
        elif name == "pac":
            rows = pac_suite(seed=seed)
        elif name == "holder":
            rows = holder_suite(seed=seed)
        elif name == "sizes":
            rows = sizes_suite()
        else:
            raise ValueError(f"unknown suite {name!r}")
        dt = time.perf_counter() - t0
        for r in rows:
            r.detail = f"{r.detail} [{dt:.1f}s suite]" if r is rows[-1] else r.detail
        checks.extend(rows)
    return checks


def format_matrix(checks: list[Check]) -> str:
    w = max(len(f"{c.suite}/{c.case}") for c in checks)
    lines = [f"{'check':<{w}}  result  detail"]
    for c in checks:
        lines.append(f"{c.suite + '/' + c.case:<{w}}  {'PASS' if c.passed else 'FAIL':<6}  {c.detail}")
    n_ok = sum(c.passed for c in checks)
    lines.append(f"{n_ok}/{len(checks)} checks passed")
    return "\n".join(lines)
