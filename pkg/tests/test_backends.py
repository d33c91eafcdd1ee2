"""Compiled core vs pure-Python fallback: bit-identical behavior."""

import numpy as np
import pytest

from urllcsim import _kernels, harness
from urllcsim.config import resolve_config
from urllcsim.policies import PolicyKind

needs_core = pytest.mark.skipif(_kernels.core is None,
                                reason="compiled kernel core not built")


@needs_core
class TestKernelParity:
    def test_ccp_bitwise_identical(self):
        rng = np.random.default_rng(3)
        t1 = np.zeros(100)
        t2 = np.zeros(100)
        for _ in range(200):
            floor = rng.uniform(0.1, 5.0)
            cap = floor + rng.uniform(0.01, 5.0)
            y = rng.uniform(0.0, 100.0)
            nu0 = rng.uniform(1.0, 20.0)
            pi = rng.uniform(0.1, 10.0)
            numax = 2.0 * max(nu0 / pi, y * cap, 1.0)
            r1 = _kernels.pure.ccp_solve(y, floor, cap, nu0, pi, 1.0, numax,
                                         1e-6, 100, 1e-10, 200, t1)
            r2 = _kernels.core.ccp_solve(y, floor, cap, nu0, pi, 1.0, numax,
                                         1e-6, 100, 1e-10, 200, t2)
            assert r1 == r2
            assert np.array_equal(t1, t2)

    def test_waterfill_bitwise_identical(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            m = int(rng.integers(1, 6))
            y = rng.uniform(0.0, 10.0, m)
            c = rng.uniform(0.0, 1.0, m)
            w = rng.uniform(0.05, 2.0, m)
            budget = float(rng.uniform(0.5, 20.0))
            p1, mu1 = _kernels.pure.waterfill(y, c, w, budget, 1e-9, 200)
            p2, mu2 = _kernels.core.waterfill(y, c, w, budget, 1e-9, 200)
            assert mu1 == mu2
            assert np.array_equal(p1, p2)

    @pytest.mark.parametrize("kind", list(PolicyKind))
    def test_full_realization_identical(self, kind):
        cfg = resolve_config(None, {"scenario.realizations": "1",
                                    "scenario.horizon_slots": "200"})
        seed = harness._spawn_seed(cfg.seed, 0)
        pl, ar = seed.spawn(2)
        scen = harness.generate_scenario(cfg, pl)
        arrivals = harness.generate_arrivals(cfg, scen.n_ues, ar)
        pcfg = harness.policy_config_from(cfg, kind)
        a = harness.run_realization(scen, pcfg, cfg.horizon_slots, arrivals,
                                    backend="core")
        b = harness.run_realization(scen, pcfg, cfg.horizon_slots, arrivals,
                                    backend="pure")
        for field in ("queue", "vqueue", "aux", "nu", "power", "rate_bits",
                      "served", "infeasible", "budget_used", "q_final",
                      "y_final"):
            assert np.array_equal(getattr(a, field), getattr(b, field)), field


def test_backend_selection_api():
    assert _kernels.get_backend("pure") is _kernels.pure
    assert _kernels.get_backend(None) is _kernels.active
    with pytest.raises(ValueError):
        _kernels.get_backend("nope")
