"""Floor computations and the convex-concave subproblem solver."""

import numpy as np
import pytest

from conftest import ccp_grid_min, ccp_objective, make_profile, random_aux_subproblem
from urllcsim.latency import (AuxSubproblem, aux_floor, control_floor,
                              default_nu_max, min_rate_floor, solve_aux_ccp)


class TestFloors:
    def test_first_slot_floor_is_rmin(self):
        # d_th*eps = 100*0.05 = 5 slots of slack, so at t=1 the history
        # term is lambda*(1-5) < 0 and the static minimum binds.
        prof = make_profile(lam=1000.0, dth=100.0, eps=0.05)
        assert min_rate_floor(1, prof, 0.0) == prof.rate_min == 800.0

    def test_keep_up_service_floor(self):
        prof = make_profile(lam=1000.0)
        t = 50
        served = (t - 1) * prof.mean_arrival
        assert min_rate_floor(t, prof, served) == prof.rate_min

    def test_unserved_floor_grows_then_clamps(self):
        prof = make_profile(lam=1000.0)
        floors = [min_rate_floor(t, prof, 0.0) for t in range(1, 40)]
        assert floors[0] == prof.rate_min
        assert any(f == prof.rate_max for f in floors)
        unclamped = [f for f in floors if prof.rate_min < f < prof.rate_max]
        assert np.all(np.diff(unclamped) > 0.0)

    def test_aux_floor_matches_rate_floor_at_t1(self):
        prof = make_profile(lam=2000.0)
        assert aux_floor(1, prof, 0.0) == min_rate_floor(1, prof, 0.0)

    def test_aux_floor_history_exceeds_target(self):
        prof = make_profile(lam=1000.0)
        t = 20
        assert aux_floor(t, prof, t * prof.mean_arrival) == prof.rate_min

    def test_aux_floor_tie(self):
        prof = make_profile(lam=1000.0)
        t = 50
        hist = t * prof.mean_arrival \
            - prof.mean_arrival * prof.delay_bound * prof.reliability_eps \
            - prof.rate_min
        assert aux_floor(t, prof, hist) == prof.rate_min

    @pytest.mark.parametrize("y,cap,expected", [
        (10.0, 3.0, 7.0),
        (2.0, 3.0, 1.0),
        (0.0, 5.0, 1.0),
    ])
    def test_control_floor_examples(self, y, cap, expected):
        assert control_floor(y, cap) == expected

    def test_floor_monotonicity(self, rng):
        prof = make_profile(lam=1000.0)
        for _ in range(200):
            t = int(rng.integers(1, 60))
            served = float(rng.uniform(0.0, 40000.0))
            ds = float(rng.uniform(0.0, 5000.0))
            assert min_rate_floor(t, prof, served + ds) <= \
                min_rate_floor(t, prof, served)
            assert min_rate_floor(t + 1, prof, served) >= \
                min_rate_floor(t, prof, served)
            assert control_floor(served + ds, 100.0) >= \
                control_floor(served, 100.0)

    def test_looser_requirements_lower_floor(self):
        # larger delay bound or violation tolerance reduces the required rate
        base = make_profile(lam=1000.0, dth=20.0, eps=0.01)
        t, served = 30, 5000.0
        f0 = min_rate_floor(t, base, served)
        assert min_rate_floor(
            t, make_profile(lam=1000.0, dth=40.0, eps=0.01), served) <= f0
        assert min_rate_floor(
            t, make_profile(lam=1000.0, dth=20.0, eps=0.05), served) <= f0


class TestCcpSolver:
    def test_zero_virtual_queue_pushes_to_ceiling(self):
        sub = AuxSubproblem(virtual_queue=0.0, aux_floor=1.0, aux_ceiling=2.0,
                            control_floor=1.0, pi=1.0, nu_max=4.0)
        res = solve_aux_ccp(sub)
        assert res.aux == 2.0
        assert res.control == 4.0

    def test_reference_instance_matches_grid(self):
        # frozen from the 1000x1000 grid: optimum -0.772588722 at (2, 4)
        sub = AuxSubproblem(virtual_queue=1.0, aux_floor=1.0, aux_ceiling=2.0,
                            control_floor=1.0, pi=1.0, nu_max=4.0)
        res = solve_aux_ccp(sub)
        final = ccp_objective(1.0, 1.0, res.aux, res.control)
        ref = ccp_grid_min(1.0, 1.0, 1.0, 2.0, 1.0, 4.0)
        assert ref == pytest.approx(-0.7725887222397811, abs=1e-9)
        assert abs(final - ref) <= 1e-3

    def test_degenerate_box_reduces_to_1d(self):
        sub = AuxSubproblem(virtual_queue=3.0, aux_floor=1.5, aux_ceiling=1.5,
                            control_floor=2.0, pi=1.0, nu_max=8.0)
        res = solve_aux_ccp(sub)
        assert res.aux == 1.5
        nus = np.linspace(2.0, 8.0, 1000)
        ref = float(np.min(3.0 * 1.5 - nus * np.log(1.5)))
        final = ccp_objective(3.0, 1.0, res.aux, res.control)
        assert abs(final - ref) <= 1e-3

    def test_descent_feasibility_and_oracle_over_random_instances(self):
        rng = np.random.default_rng(7)
        n_conv = 0
        reps = 60
        for _ in range(reps):
            sub = random_aux_subproblem(rng)
            nu_max = default_nu_max(sub)
            res = solve_aux_ccp(sub)
            n_conv += res.converged
            trace = res.objective_trace
            assert trace.size >= 1
            assert np.all(np.diff(trace) <= 1e-9 * np.maximum(
                1.0, np.abs(trace[:-1])))
            assert sub.aux_floor <= res.aux <= sub.aux_ceiling + 1e-12
            assert sub.pi * res.control >= sub.control_floor - 1e-9
            assert res.control <= nu_max * (1.0 + 1e-12)
            ref = ccp_grid_min(sub.virtual_queue, sub.weight, sub.aux_floor,
                               sub.aux_ceiling, sub.control_floor / sub.pi,
                               nu_max)
            final = ccp_objective(sub.virtual_queue, sub.weight, res.aux,
                                  res.control)
            assert final <= ref + 1e-3 * (1.0 + abs(ref))
        assert n_conv >= int(0.95 * reps)

    def test_iteration_budget_reports_nonconvergence(self):
        sub = AuxSubproblem(virtual_queue=5.0, aux_floor=2.0, aux_ceiling=9.0,
                            control_floor=4.0, pi=0.5)
        res = solve_aux_ccp(sub, max_iter=1)
        assert not res.converged
        assert res.iterations == 1

    def test_invalid_bounds_rejected(self):
        with pytest.raises(ValueError):
            AuxSubproblem(virtual_queue=1.0, aux_floor=2.0, aux_ceiling=1.0,
                          control_floor=1.0, pi=1.0)
        with pytest.raises(ValueError):
            AuxSubproblem(virtual_queue=1.0, aux_floor=1.0, aux_ceiling=2.0,
                          control_floor=0.5, pi=1.0)
