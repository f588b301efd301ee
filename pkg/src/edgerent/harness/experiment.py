"""Experiment engine: replay one slot series through every configured policy."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..baselines import (ArmTable, CucbPolicy, LinUcbPolicy, OraclePolicy, RandomPolicy,
                         coerr_orx, enumerate_arms, oracle_decide, reward_bound)
from ..coerr import Coerr, CoerrParams, DoublingCoerr, design_parameters
from ..config import ExperimentConfig, policy_kind
from ..estimators import Partition, cell_means, partition_point
from ..kcg import build_kcg, solve_branch_and_bound, solve_greedy
from ..model import EdgeSystem, check_feasible, total_utility
from ..policy import Decision, Policy
from .synthetic import generate_series
from .trace import SlotSeries, trace_series

log = logging.getLogger(__name__)

RESULT_HEADER = ["slot", "policy", "phase", "spend", "utility", "oracle_utility",
                 "cum_regret", "cum_delta_regret", "decision"]


class ExperimentError(RuntimeError):
    pass


@dataclass
class SlotRecord:
    slot: int
    policy: str
    phase: str
    spend: float
    utility: float
    oracle_utility: float
    cum_regret: float
    cum_delta_regret: float
    decision: Decision

    def row(self) -> list:
        return [self.slot, self.policy, self.phase, repr(self.spend), repr(self.utility),
                repr(self.oracle_utility), repr(self.cum_regret), repr(self.cum_delta_regret),
                "|".join(f"{f:g}" for f in self.decision)]


@dataclass
class ExperimentResult:
    records: dict[str, list[SlotRecord]]
    policies: dict[str, Policy]
    series: SlotSeries
    params: CoerrParams
    delta: float
    n_arms: int
    seed: tuple
    oracle_decisions: list = field(default_factory=list)

    @property
    def series_digest(self) -> str:
        return self.series.digest()

    def final_utility(self, policy: str) -> float:
        return math.fsum(r.utility for r in self.records[policy])

    def final_oracle_utility(self) -> float:
        first = next(iter(self.records.values()))
        return math.fsum(r.oracle_utility for r in first)

    def final_regret(self, policy: str) -> float:
        return self.records[policy][-1].cum_regret


def replication_seeds(seed: int, replication: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    series_seq, policy_seq = np.random.SeedSequence([seed, replication]).spawn(2)
    return series_seq, policy_seq


def build_series(cfg: ExperimentConfig, replication: int = 0):
    """The slot series and the true-mean function the oracle uses.

    Synthetic: exact means of the generator. Trace: hindsight cell means of the
    whole trace under the COERR partition.
    """
    series_seq, _ = replication_seeds(cfg.seed, replication)
    if cfg.mode == "synthetic":
        model = cfg.synthetic_model()
        series = generate_series(model, cfg.horizon, cfg.slot_seconds, series_seq)
        return series, (lambda t, contexts: model.mean(contexts))
    series, _, site_map = trace_series(cfg.trace, cfg.slot_seconds, cfg.sites, cfg.dim)
    if len(site_map) != cfg.n_sbs:
        raise ExperimentError(f"trace has {len(site_map)} sites but n_sbs = {cfg.n_sbs}")
    if cfg.horizon:
        series = series.head(cfg.horizon)
    clipped = series.demand > cfg.lambda_max
    if clipped.any():
        log.warning("clipping %.2f%% of slot demands to lambda_max=%g", 100 * clipped.mean(), cfg.lambda_max)
        series = SlotSeries(np.minimum(series.demand, cfg.lambda_max), series.contexts, series.slot_seconds)
    params = design_parameters(series.horizon, cfg.alpha, cfg.dim)
    part = Partition(params.h, params.dim)
    means = cell_means(series.demand, series.contexts, part)

    def mean_fn(t, contexts):
        return [means[n][partition_point(x, part)] for n, x in enumerate(contexts)]

    return series, mean_fn


def make_policy(name: str, cfg: ExperimentConfig, system: EdgeSystem, params: CoerrParams,
                table: Optional[ArmTable], mean_fn, rng: np.random.Generator) -> Policy:
    kind = policy_kind(name)
    if kind == "oracle":
        return OraclePolicy(system, mean_fn, "bb")
    if kind == "coerr":
        return Coerr(system, params, cfg.solver)
    if kind == "coerr-doubling":
        return DoublingCoerr(system, cfg.doubling_t1, cfg.alpha, cfg.dim, cfg.solver)
    if kind == "coerr-orx":
        return coerr_orx(system, float(name[len("coerr-or"):]), params, cfg.solver)
    scale = reward_bound(system)
    if kind == "cucb":
        return CucbPolicy(table, scale)
    if kind == "linucb":
        return LinUcbPolicy(table, system.n * cfg.dim, cfg.linucb.alpha, cfg.linucb.ridge, scale)
    return RandomPolicy(table, rng)


def measure_delta(system: EdgeSystem, mus: Sequence[Sequence[float]]) -> float:
    """Worst greedy/optimal ratio over the run's oracle subproblems."""
    worst = 1.0
    for mu in mus:
        inst = build_kcg(mu, system)
        worst = max(worst, solve_greedy(inst, solve_branch_and_bound(inst)).delta)
    return worst


def run_experiment(cfg: ExperimentConfig, replication: int = 0,
                   series: Optional[SlotSeries] = None, mean_fn=None) -> ExperimentResult:
    """Run every configured policy over one shared series.

    Each slot's regret is measured against the oracle decision (exact solver,
    true means) evaluated on the same realized demand.
    """
    system = cfg.edge_system()
    if series is None:
        series, mean_fn = build_series(cfg, replication)
    T = series.horizon
    params = design_parameters(T, cfg.alpha, cfg.dim)
    _, policy_seq = replication_seeds(cfg.seed, replication)
    rngs = [np.random.default_rng(s) for s in policy_seq.spawn(len(cfg.policies))]

    needs_table = any(policy_kind(p) in ("cucb", "linucb", "random") for p in cfg.policies)
    table = enumerate_arms(system, cfg.arm_cap) if needs_table else None

    mus = [np.asarray(mean_fn(t + 1, series.contexts[t]), dtype=float) for t in range(T)]
    oracle_dec = [oracle_decide(mu, system, "bb") for mu in mus]
    oracle_util = [total_utility(d, series.demand[t], system) for t, d in enumerate(oracle_dec)]
    if cfg.delta is not None:
        delta = cfg.delta
    elif cfg.solver == "greedy":
        delta = measure_delta(system, mus)
    else:
        delta = 1.0

    records: dict[str, list[SlotRecord]] = {}
    policies: dict[str, Policy] = {}
    for name, rng in zip(cfg.policies, rngs):
        pol = make_policy(name, cfg, system, params, table, mean_fn, rng)
        policies[name] = pol
        recs = []
        cum = cum_d = 0.0
        for t in range(1, T + 1):
            ctx, lam = series.contexts[t - 1], series.demand[t - 1]
            try:
                if policy_kind(name) == "oracle":
                    decision, phase = oracle_dec[t - 1], "-"
                else:
                    decision, phase = pol.decide(t, ctx)
            except Exception as exc:
                raise ExperimentError(f"policy {name} failed at slot {t}: {exc}") from exc
            if not check_feasible(decision, system.sbss, system.budget):
                raise ExperimentError(f"policy {name} emitted infeasible decision {decision} at slot {t}")
            u = total_utility(decision, lam, system)
            pol.observe(t, decision, lam, u)
            ou = oracle_util[t - 1]
            cum += ou - u
            cum_d += ou / delta - u
            recs.append(SlotRecord(t, name, phase, float(system.spend(decision)), u, ou, cum, cum_d,
                                   tuple(float(f) for f in decision)))
        records[name] = recs
    return ExperimentResult(records, policies, series, params, delta,
                            len(table) if table is not None else 0,
                            (cfg.seed, replication), oracle_dec)


def write_records(path, result: ExperimentResult, comment: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        w = csv.writer(fh)
        w.writerow(RESULT_HEADER)
        for recs in result.records.values():
            for r in recs:
                w.writerow(r.row())


def write_phase_log(path, policy: Policy, records: Sequence[SlotRecord], comment: str) -> None:
    """Per-slot phase and decision of one policy: slot,phase,f_1..f_N,spend."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        w = csv.writer(fh)
        n = len(records[0].decision) if records else 0
        w.writerow(["slot", "phase", *[f"f_{i + 1}" for i in range(n)], "spend"])
        for r in records:
            w.writerow([r.slot, r.phase, *[f"{f:g}" for f in r.decision], repr(r.spend)])
