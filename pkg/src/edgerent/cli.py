"""Command-line entry point: ``edgerent {run,sweep,solve-kcg,validate,snapshot-estimator,convert-gwa}``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .baselines import enumerate_arms
from .coerr import Coerr, design_parameters
from .config import ConfigError, ExperimentConfig, SbsSpec, config_from_dict, load_config
from .harness.experiment import (ExperimentError, build_series, run_experiment, write_phase_log,
                                 write_records)
from .harness.trace import TraceFormatError, convert_gwa
from .kcg import KcgError, get_solver, read_instance_csv
from .model import total_utility
from .validate import SUITES, format_matrix, run_all

log = logging.getLogger("edgerent")

SUMMARY_HEADER = ["replication", "policy", "final_utility", "final_regret", "final_delta_regret"]
SWEEP_HEADER = ["axis", "value", "replication", "policy", "final_utility", "final_regret",
                "n_arms", "n_cells"]


class UsageError(Exception):
    pass


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig().validate()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "policies", None):
        changes["policies"] = [p.strip() for p in args.policies.split(",") if p.strip()]
    if getattr(args, "solver", None):
        changes["solver"] = args.solver
    if getattr(args, "out", None):
        changes["out"] = args.out
    if getattr(args, "horizon", None) is not None:
        changes["horizon"] = args.horizon
    if getattr(args, "replications", None) is not None:
        changes["replications"] = args.replications
    if getattr(args, "jobs", None) is not None:
        changes["jobs"] = args.jobs
    if changes:
        cfg = config_from_dict({**cfg.to_dict(), **changes})
    if cfg.mode == "trace" and not os.path.isfile(cfg.trace):
        raise UsageError(f"trace file not found: {cfg.trace}")
    return cfg


def _run_one(cfg: ExperimentConfig, rep: int, stem: str) -> list[list]:
    """One replication: write its result file(s) and return its summary rows."""
    res = run_experiment(cfg, rep)
    comment = cfg.comment(cfg.seed, res.series_digest) + f" replication={rep}"
    out = Path(cfg.out)
    write_records(out / f"{stem}_rep{rep}.csv", res, comment)
    for name, pol in res.policies.items():
        if isinstance(pol, Coerr):
            write_phase_log(out / f"{stem}_rep{rep}_{name}_phases.csv", pol, res.records[name], comment)
    return [[rep, name, repr(res.final_utility(name)), repr(recs[-1].cum_regret),
             repr(recs[-1].cum_delta_regret)]
            for name, recs in res.records.items()]


def _run_all_reps(cfg: ExperimentConfig, stem: str) -> list[list]:
    reps = range(cfg.replications)
    if cfg.jobs > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            parts = list(pool.map(_run_one, [cfg] * len(reps), reps, [stem] * len(reps)))
    else:
        parts = [_run_one(cfg, r, stem) for r in reps]
    return [row for part in parts for row in part]


def _write_csv(path, comment: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_run(args) -> int:
    cfg = _config(args)
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    rows = _run_all_reps(cfg, "results")
    _write_csv(Path(cfg.out) / "summary.csv", cfg.comment(cfg.seed), SUMMARY_HEADER, rows)
    print(f"{'rep':>3}  {'policy':<16} {'final utility':>16} {'final regret':>16}")
    for rep, name, u, reg, _ in rows:
        print(f"{rep:>3}  {name:<16} {float(u):>16.1f} {float(reg):>16.1f}")
    print(f"results in {cfg.out}")
    return 0


def parse_axis_values(axis: str, text: str) -> list:
    """``4,8,12`` for scalar axes; ``0,2;0,2,4`` (semicolon-separated sets) for rental_set."""
    try:
        if axis == "rental_set":
            return [[float(v) for v in part.split(",")] for part in text.split(";") if part.strip()]
        if axis == "n_sbs":
            return [int(v) for v in text.split(",")]
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse values {text!r} for axis {axis}") from None


def _sweep_point(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "budget":
        return cfg.replace(budget=value)
    if axis == "n_sbs":
        if isinstance(cfg.sbs, list):
            raise UsageError("n_sbs sweep needs a single 'sbs' template, not a per-SBS list")
        return config_from_dict({**cfg.to_dict(), "n_sbs": value,
                                 "synthetic": {**cfg.to_dict()["synthetic"], "profiles": None,
                                               "level_centers": None}})
    specs = [SbsSpec(**{**s.__dict__, "rental_set": value, "prices": None, "caps": None})
             for s in cfg.sbs_specs()]
    return cfg.replace(sbs=specs if isinstance(cfg.sbs, list) else specs[0])


def cmd_sweep(args) -> int:
    cfg = _config(args)
    values = parse_axis_values(args.axis, args.values)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        point = _sweep_point(cfg, args.axis, value).validate()
        tag = "-".join(f"{v:g}" for v in value) if isinstance(value, list) else f"{value:g}"
        system = point.edge_system()
        n_arms = len(enumerate_arms(system, point.arm_cap))
        p = design_parameters(point.horizon, point.alpha, point.dim)
        n_cells = point.n_sbs * p.h ** p.dim
        label = "|".join(f"{v:g}" for v in value) if isinstance(value, list) else f"{value:g}"
        for rep, name, u, reg, _ in _run_all_reps(point.replace(out=str(out)), f"{args.axis}_{tag}"):
            rows.append([args.axis, label, rep, name, u, reg, n_arms, n_cells])
    _write_csv(out / f"sweep_{args.axis}.csv", cfg.comment(cfg.seed), SWEEP_HEADER, rows)
    print(f"{'value':<14} {'policy':<16} {'final utility':>16} {'arms':>6} {'cells':>6}")
    for axis, label, rep, name, u, reg, n_arms, n_cells in rows:
        print(f"{label:<14} {name:<16} {float(u):>16.1f} {n_arms:>6} {n_cells:>6}")
    return 0


def cmd_solve_kcg(args) -> int:
    forced = [int(k) for k in args.forced.split(",")] if args.forced else []
    inst = read_instance_csv(args.instance, args.budget, forced)
    sol = get_solver(args.solver)(inst)
    print(f"solver   {args.solver}")
    print(f"chosen   {' '.join(map(str, sol.chosen)) or '-'}")
    print(f"value    {sol.value:g}")
    print(f"weight   {sol.weight:g} / {inst.budget:g}")
    return 0


def cmd_validate(args) -> int:
    suites = args.suite or list(SUITES)
    checks = run_all(seed=args.seed or 0, suites=suites)
    print(format_matrix(checks))
    return 0 if all(c.passed for c in checks) else 1


def cmd_snapshot(args) -> int:
    """Run COERR for ``--slots`` slots and dump its per-(SBS, cell) estimates."""
    cfg = _config(args)
    slots = args.slots or cfg.horizon
    series, _ = build_series(cfg, 0)
    series = series.head(min(slots, series.horizon))
    system = cfg.edge_system()
    pol = Coerr(system, design_parameters(cfg.horizon or series.horizon, cfg.alpha, cfg.dim), cfg.solver)
    for t in range(1, series.horizon + 1):
        d, _ = pol.decide(t, series.contexts[t - 1])
        pol.observe(t, d, series.demand[t - 1], total_utility(d, series.demand[t - 1], system))
    path = Path(args.snapshot)
    path.parent.mkdir(parents=True, exist_ok=True)
    pol.bank.to_csv(path, cfg.comment(cfg.seed, series.digest()) + f" slots={series.horizon}")
    print(f"{pol.bank.n_materialized} cells written to {path}")
    return 0


def cmd_convert(args) -> int:
    n = convert_gwa(args.src, args.dst, args.time_field, args.site_field)
    print(f"{n} jobs written to {args.dst}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="edgerent", description="Budget-constrained edge resource rental simulator")
    ap.add_argument("--version", action="version", version=f"edgerent {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, runs=True):
        p.add_argument("--config", help="JSON experiment config (defaults: reference setting)")
        p.add_argument("--seed", type=int)
        p.add_argument("--solver", choices=["bb", "dp", "bruteforce", "greedy"])
        p.add_argument("--out")
        p.add_argument("--horizon", type=int)
        if runs:
            p.add_argument("--policies", help="comma-separated, e.g. oracle,coerr,cucb")
            p.add_argument("--replications", type=int)
            p.add_argument("--jobs", type=int)

    p = sub.add_parser("run", help="run one experiment")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat an experiment along one axis")
    common(p)
    p.add_argument("--axis", required=True, choices=["budget", "rental_set", "n_sbs"])
    p.add_argument("--values", required=True, help="4,8,12  or for rental_set: 0,2;0,2,4;0,2,4,6")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("solve-kcg", help="solve a knapsack instance from CSV (id,group,weight,value)")
    p.add_argument("instance")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--forced", help="comma-separated forced item ids")
    p.add_argument("--solver", choices=["bb", "dp", "bruteforce", "greedy"], default="bb")
    p.set_defaults(func=cmd_solve_kcg)

    p = sub.add_parser("validate", help="run the self-check suites")
    p.add_argument("--suite", action="append", choices=list(SUITES))
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("snapshot-estimator", help="dump COERR cell estimates after a run")
    common(p, runs=False)
    p.add_argument("--slots", type=int, help="stop after this many slots (default: horizon)")
    p.add_argument("--snapshot", default="estimator.csv", help="output CSV path")
    p.set_defaults(func=cmd_snapshot)

    p = sub.add_parser("convert-gwa", help="convert a GWA job table to submit_time,site_id CSV")
    p.add_argument("src")
    p.add_argument("dst")
    p.add_argument("--time-field", default="SubmitTime")
    p.add_argument("--site-field", default="RunSiteID")
    p.set_defaults(func=cmd_convert)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except (UsageError, ConfigError, KcgError, TraceFormatError, ExperimentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
