"""Water-filling solver tests against closed forms, grids, and KKT."""

import math

import numpy as np
import pytest

from conftest import (LN2, random_power_problem, wf_grid_best, wf_objective)
from urllcsim.powerctl import (PowerProblem, rates_from_powers, waterfill,
                               waterfill_with_multiplier)


def kkt_worst_residual(prob, p, mu):
    worst = 0.0
    y, c, w = prob.priorities, prob.gains, prob.budget_weights
    for m in range(len(p)):
        if y[m] <= 0.0 or c[m] < 1e-12:
            continue
        grad = y[m] * c[m] / (LN2 * (1.0 + c[m] * p[m]))
        if p[m] > 0.0:
            worst = max(worst, abs(grad - mu * w[m]) / (mu * w[m]))
        elif grad > mu * w[m]:
            worst = max(worst, (grad - mu * w[m]) / (mu * w[m]))
    return worst


class TestWaterfillExamples:
    def test_single_ue_gets_whole_budget(self):
        prob = PowerProblem(priorities=[1.0], gains=[1.0],
                            budget_weights=[1.0], budget=5.0)
        p = waterfill(prob)
        assert p[0] == pytest.approx(5.0, rel=1e-9)

    def test_symmetric_ues_split_evenly(self):
        prob = PowerProblem(priorities=[2.0, 2.0], gains=[0.9, 0.9],
                            budget_weights=[1.0, 1.0], budget=4.0)
        p = waterfill(prob)
        assert p[0] == pytest.approx(p[1], rel=1e-9)
        assert p.sum() == pytest.approx(4.0, rel=1e-8)

    def test_two_ue_instance_matches_grid(self):
        prob = PowerProblem(priorities=[2.0, 1.0], gains=[1.0, 1.0],
                            budget_weights=[1.0, 1.0], budget=2.0)
        p = waterfill(prob)
        obj = wf_objective(prob.priorities, prob.gains, p)
        ref = wf_grid_best(prob.priorities, prob.gains, prob.budget_weights,
                           prob.budget)
        assert abs(obj - ref) <= 1e-3 * max(1.0, abs(ref))

    def test_zero_priorities_zero_power(self):
        prob = PowerProblem(priorities=[0.0, 0.0], gains=[0.9, 0.8],
                            budget_weights=[1.0, 1.0], budget=3.0)
        assert np.all(waterfill(prob) == 0.0)

    def test_zero_gain_ue_excluded(self):
        prob = PowerProblem(priorities=[5.0, 5.0], gains=[0.9, 0.0],
                            budget_weights=[1.0, 1.0], budget=3.0)
        p = waterfill(prob)
        assert p[1] == 0.0
        assert p[0] == pytest.approx(3.0, rel=1e-8)


class TestWaterfillProperties:
    def test_priority_scale_invariance(self, rng):
        for _ in range(25):
            prob = random_power_problem(rng, 4)
            if not np.any(prob.priorities > 0.0):
                continue
            p1 = waterfill(prob)
            scaled = PowerProblem(priorities=37.0 * prob.priorities,
                                  gains=prob.gains,
                                  budget_weights=prob.budget_weights,
                                  budget=prob.budget)
            p2 = waterfill(scaled)
            assert np.allclose(p1, p2, rtol=1e-6, atol=1e-9)

    def test_budget_monotonicity(self, rng):
        prob = random_power_problem(rng, 3)
        prev = np.zeros(3)
        for budget in (0.5, 1.0, 2.0, 5.0, 12.0):
            cur = waterfill(PowerProblem(priorities=prob.priorities,
                                         gains=prob.gains,
                                         budget_weights=prob.budget_weights,
                                         budget=budget))
            assert np.all(cur >= prev - 1e-7)
            prev = cur

    def test_priority_dominance(self):
        prob = PowerProblem(priorities=[3.0, 1.0, 2.0],
                            gains=[0.8, 0.8, 0.8],
                            budget_weights=[0.5, 0.5, 0.5], budget=6.0)
        p = waterfill(prob)
        assert p[0] >= p[2] >= p[1]

    def test_budget_used_with_equality(self, rng):
        for _ in range(20):
            prob = random_power_problem(rng, 4)
            if not np.any((prob.priorities > 0.0) & (prob.gains > 1e-12)):
                continue
            p = waterfill(prob)
            used = float(np.sum(prob.budget_weights * p))
            assert used <= prob.budget * (1.0 + 1e-9)
            assert used == pytest.approx(prob.budget, rel=1e-8)

    def test_kkt_residuals(self, rng):
        for _ in range(40):
            prob = random_power_problem(rng, 4)
            if not np.any((prob.priorities > 0.0) & (prob.gains > 1e-12)):
                continue
            p, mu = waterfill_with_multiplier(prob)
            assert kkt_worst_residual(prob, p, mu) <= 1e-6

    def test_grid_oracle_small_instances(self, rng):
        for m_count in (1, 2, 3, 4):
            for _ in range(4):
                prob = random_power_problem(rng, m_count)
                p = waterfill(prob)
                obj = wf_objective(prob.priorities, prob.gains, p)
                ref = wf_grid_best(prob.priorities, prob.gains,
                                   prob.budget_weights, prob.budget)
                assert abs(obj - ref) <= 1e-3 * max(1.0, abs(ref))


class TestRatesFromPowers:
    def test_zero_powers(self):
        assert np.all(rates_from_powers(np.zeros(4), np.full(4, 0.3)) == 0.0)

    def test_unit_power_perfect_csi(self):
        rates = rates_from_powers(np.array([1.0]), np.array([0.0]))
        assert rates[0] == pytest.approx(1.0)

    def test_permutation_equivariance(self, rng):
        p = rng.uniform(0.0, 5.0, 6)
        taus = rng.uniform(0.0, 0.9, 6)
        perm = rng.permutation(6)
        direct = rates_from_powers(p, taus)
        assert np.array_equal(direct[perm], rates_from_powers(p[perm],
                                                              taus[perm]))
