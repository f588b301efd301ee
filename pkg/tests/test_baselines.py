import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgerent.baselines import (ArmTable, CucbPolicy, LinUcbPolicy, OraclePolicy, RandomPolicy,
                                coerr_orx, enumerate_arms, oracle_decide, reward_bound, ucb_index)
from edgerent.coerr import design_parameters
from edgerent.model import check_feasible, reference_system, total_utility
from edgerent.validate import count_arms_brute


class TestOracle:
    def test_zero_means(self):
        assert oracle_decide([0] * 5, reference_system()) == (0,) * 5

    def test_single_sbs(self):
        sys_ = reference_system(n_sbs=1, budget=2, rental_set=(0, 2))
        assert oracle_decide([50], sys_) == (2,)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0, 1200), min_size=3, max_size=3), st.integers(0, 14))
    def test_matches_enumeration(self, mu, budget):
        sys_ = reference_system(n_sbs=3, budget=budget)
        best = max(total_utility(d, mu, sys_)
                   for d in itertools.product((0, 2, 4, 6), repeat=3) if sum(d) <= budget)
        assert total_utility(oracle_decide(mu, sys_), mu, sys_) == pytest.approx(best, rel=1e-12)

    def test_policy_wrapper(self):
        sys_ = reference_system()
        pol = OraclePolicy(sys_, lambda t, x: [300.0] * 5)
        dec, phase = pol.decide(1, np.zeros((5, 2)))
        assert phase == "-" and check_feasible(dec, sys_.sbss, 8)


class TestArms:
    @pytest.mark.parametrize("n,count", [(5, 121), (8, 487), (10, 991)])
    def test_table_counts(self, n, count):
        assert len(enumerate_arms(reference_system(n))) == count == count_arms_brute(n)

    def test_unbounded_budget(self):
        assert len(enumerate_arms(reference_system(3, budget=18))) == 4 ** 3

    def test_order_and_feasibility(self):
        sys_ = reference_system()
        tab = enumerate_arms(sys_)
        assert tab.arms[0] == (0,) * 5 and tab.arms[1] == (0, 0, 0, 0, 2)
        assert all(check_feasible(a, sys_.sbss, 8) for a in tab.arms)
        assert len(set(tab.arms)) == len(tab.arms)

    def test_cap(self):
        with pytest.raises(ValueError, match="exceeds cap"):
            enumerate_arms(reference_system(10), cap=1000)

    def test_reward_bound(self):
        assert reward_bound(reference_system()) == 4 * 900 * 10


class TestCucb:
    def test_index_value(self):
        assert ucb_index(5, 4, math.exp(8)) == pytest.approx(7)

    def test_initial_sweep(self):
        tab = enumerate_arms(reference_system())
        pol = CucbPolicy(tab, 1.0)
        for t in range(1, len(tab) + 1):
            dec, _ = pol.decide(t, None)
            assert dec == tab.arms[t - 1]
            pol.observe(t, dec, None, 0.0)

    def test_exploitation(self):
        tab = ArmTable([(0,), (2,)], np.zeros(2))
        pol = CucbPolicy(tab, 1.0)
        pol.table.pulls[:] = 10_000
        pol.table.means[:] = (10, 0)
        assert pol.select(20_001) == 0


class TestLinUcb:
    def test_fresh_tie_goes_to_first(self):
        tab = enumerate_arms(reference_system())
        pol = LinUcbPolicy(tab, 10, alpha=1.0)
        x = np.full((5, 2), 0.5)
        idx = pol.indices(x.ravel())
        assert idx == pytest.approx(np.full(len(tab), np.linalg.norm(x)))
        assert pol.decide(1, x)[0] == tab.arms[0]

    def test_ridge_closed_form(self):
        tab = ArmTable([(0,), (2,)], np.zeros(2))
        pol = LinUcbPolicy(tab, 2, alpha=0.0, ridge=1.0)
        x = np.array([0.6, 0.2])
        for _ in range(50):
            pol._last = (1, x)
            pol.observe(0, None, None, 3.0)
        A = np.eye(2) + 50 * np.outer(x, x)
        theta = np.linalg.solve(A, 50 * 3.0 * x)
        assert pol.indices(x)[1] == pytest.approx(theta @ x)
        assert theta @ x < 3.0  # ridge shrinkage

    def test_learns_linear_rewards(self):
        rng = np.random.default_rng(3)
        tab = ArmTable([(0,), (2,), (4,)], np.zeros(3))
        weights = np.array([[0.1, 0.1], [0.9, 0.2], [0.3, 0.3]])
        pol = LinUcbPolicy(tab, 2, alpha=0.0)
        for k in range(3):  # one pull each to break the initial tie
            x = rng.random(2)
            pol._last = (k, x)
            pol.observe(0, None, None, float(weights[k] @ x))
        picks = []
        for t in range(400):
            x = rng.random(2)
            dec, _ = pol.decide(t, x.reshape(1, 2))
            k = tab.arms.index(dec)
            pol.observe(t, dec, None, float(weights[k] @ x))
            picks.append(k)
        assert np.mean(np.array(picks[-100:]) == 1) > 0.9


class TestRandom:
    def test_single_arm(self):
        pol = RandomPolicy(ArmTable([(2,)], np.zeros(1)), np.random.default_rng(0))
        assert all(pol.decide(t, None)[0] == (2,) for t in range(20))

    def test_reproducible(self):
        tab = enumerate_arms(reference_system())
        p1, p2 = RandomPolicy(tab, np.random.default_rng(5)), RandomPolicy(tab, np.random.default_rng(5))
        assert [p1.decide(t, None) for t in range(50)] == [p2.decide(t, None) for t in range(50)]

    def test_uniform(self):
        tab = enumerate_arms(reference_system())
        pol = RandomPolicy(tab, np.random.default_rng(11))
        index = {a: k for k, a in enumerate(tab.arms)}
        counts = np.bincount([index[pol.decide(t, None)[0]] for t in range(100_000)], minlength=121)
        expected = 100_000 / 121
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        # 120 dof: mean 120, sd 15.5; 3 sd above the mean
        assert chi2 < 120 + 3 * math.sqrt(240)


class TestOrx:
    def test_levels(self):
        sys_ = reference_system()
        pol = coerr_orx(sys_, 2, design_parameters(200, 1, 2))
        rng = np.random.default_rng(0)
        for t in range(1, 201):
            dec, _ = pol.decide(t, rng.random((5, 2)))
            assert set(dec) <= {0, 2} and check_feasible(dec, sys_.sbss, 8)
            pol.observe(t, dec, rng.random(5) * 900)
        assert pol.name == "coerr-or2"

    def test_six_rents_one(self):
        sys_ = reference_system()
        pol = coerr_orx(sys_, 6, design_parameters(100, 1, 2))
        rng = np.random.default_rng(1)
        for t in range(1, 101):
            dec, _ = pol.decide(t, rng.random((5, 2)))
            assert sum(f > 0 for f in dec) <= 1
            pol.observe(t, dec, rng.random(5) * 900)

    def test_not_offered(self):
        with pytest.raises(ValueError):
            coerr_orx(reference_system(), 3, design_parameters(100, 1, 2))
