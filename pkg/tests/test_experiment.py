import numpy as np
import pytest

from edgerent.config import ExperimentConfig
from edgerent.harness import experiment as ex
from edgerent.harness.trace import SlotSeries
from edgerent.kcg import KcgInstance, solve_brute_force
from edgerent.validate import kcg_suite, run_all


def test_single_zero_slot():
    cfg = ExperimentConfig(horizon=1, policies=["oracle", "coerr", "cucb", "linucb", "random"])
    series = SlotSeries(np.zeros((1, 5)), np.zeros((1, 5, 2)))
    res = ex.run_experiment(cfg, series=series, mean_fn=lambda t, x: [0.0] * 5)
    for name, recs in res.records.items():
        assert recs[0].utility == 0 and recs[0].cum_regret == 0


def test_random_has_positive_regret():
    for rep in range(30):
        res = ex.run_experiment(ExperimentConfig(horizon=500, policies=["oracle", "random"]), rep)
        assert res.final_regret("random") > 0


def test_exploration_is_minority():
    res = ex.run_experiment(ExperimentConfig(policies=["coerr"]), 0)
    log = res.policies["coerr"].phase_log
    assert sum(p != "exploit" for p in log) < 2700 / 2


def test_infeasible_policy_reported(monkeypatch):
    class Bad:
        name = "bad"

        def decide(self, t, ctx):
            return (6, 6, 0, 0, 0), "-"

        def observe(self, *a):
            pass

    monkeypatch.setattr(ex, "make_policy", lambda *a: Bad())
    with pytest.raises(ex.ExperimentError, match="slot 1"):
        ex.run_experiment(ExperimentConfig(horizon=3, policies=["random"]))


def test_greedy_delta_measured():
    res = ex.run_experiment(ExperimentConfig(horizon=30, solver="greedy", policies=["oracle", "coerr"]))
    assert res.delta >= 1 and np.isfinite(res.delta)
    recs = res.records["coerr"]
    expected = np.cumsum([r.oracle_utility / res.delta - r.utility for r in recs])
    assert [r.cum_delta_regret for r in recs] == pytest.approx(expected)


def test_record_file_format(tmp_path):
    cfg = ExperimentConfig(horizon=5, policies=["coerr"])
    res = ex.run_experiment(cfg)
    p = tmp_path / "r.csv"
    ex.write_records(p, res, cfg.comment(cfg.seed, res.series_digest))
    lines = p.read_text().splitlines()
    assert lines[0].startswith("# edgerent") and "series_sha256" in lines[0]
    assert lines[1] == ",".join(ex.RESULT_HEADER)
    assert lines[2].split(",")[-1] == "2|2|2|2|0"


def test_validate_all_green():
    assert all(c.passed for c in run_all())


def test_validate_catches_flipped_solver():
    def flipped(inst):
        # maximizes the negated values: the comparison turned around
        neg = KcgInstance(tuple(type(it)(it.id, it.group, it.capacity, it.weight, -it.value)
                                for it in inst.items), inst.budget, inst.forced, inst.n_groups)
        return solve_brute_force(neg)

    checks, _ = kcg_suite(200, solvers={"flipped": flipped})
    assert not checks[0].passed
