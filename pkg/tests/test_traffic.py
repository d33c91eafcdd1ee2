"""Queue recursion, arrival generation, and delay-measure tests."""

import math

import numpy as np
import pytest

from conftest import make_profile
from urllcsim.traffic import (UeProfile, delay_measure, generate_arrival,
                              update_queue, update_virtual_queue)


class TestGenerateArrival:
    def test_zero_mean_is_always_zero(self, rng):
        prof = make_profile(lam=1000.0)
        prof.mean_arrival = 0.0  # degenerate Poisson
        for _ in range(50):
            assert generate_arrival(prof, 100.0, rng) == 0.0

    def test_empirical_mean_within_one_percent(self):
        lam = 1e4
        prof = make_profile(lam=lam, arrival_cap=math.inf)
        rng = np.random.default_rng(99)
        packet = 1e4
        draws = packet * rng.poisson(lam / packet, size=1_000_000)
        # the vectorized stream equals repeated generate_arrival calls
        check = np.random.default_rng(99)
        sample = [generate_arrival(prof, packet, check) for _ in range(1000)]
        assert np.array_equal(np.asarray(sample), draws[:1000])
        assert abs(draws.mean() - lam) / lam < 0.01

    def test_draws_respect_cap(self, rng):
        prof = make_profile(lam=1000.0, arrival_cap=1500.0)
        vals = [generate_arrival(prof, 700.0, rng) for _ in range(300)]
        assert max(vals) <= 1500.0

    def test_invalid_packet_size(self, rng):
        prof = make_profile()
        with pytest.raises(ValueError):
            generate_arrival(prof, 0.0, rng)


class TestQueueRecursions:
    @pytest.mark.parametrize("q,r,a,expected", [
        (5.0, 3.0, 2.0, 4.0),
        (2.0, 5.0, 1.0, 1.0),
        (0.0, 0.0, 0.0, 0.0),
    ])
    def test_update_queue_examples(self, q, r, a, expected):
        assert update_queue(q, r, a) == expected

    @pytest.mark.parametrize("y,phi,r,expected", [
        (1.0, 2.0, 1.0, 2.0),
        (1.0, 0.0, 5.0, 0.0),
        (0.0, 0.0, 0.0, 0.0),
    ])
    def test_update_virtual_queue_examples(self, y, phi, r, expected):
        assert update_virtual_queue(y, phi, r) == expected

    def test_lindley_sandwich(self, rng):
        for _ in range(2000):
            q = rng.uniform(0.0, 50.0)
            r = rng.uniform(0.0, 50.0)
            a = rng.uniform(0.0, 50.0)
            nxt = update_queue(q, r, a)
            assert nxt >= q - r + a - 1e-12
            assert nxt <= q + a + 1e-12
            assert nxt >= a

    def test_update_queue_monotonicity(self, rng):
        for _ in range(500):
            q, r, a = rng.uniform(0.0, 20.0, 3)
            dq = rng.uniform(0.0, 5.0)
            assert update_queue(q + dq, r, a) >= update_queue(q, r, a)
            assert update_queue(q, r, a + dq) >= update_queue(q, r, a)
            assert update_queue(q, r + dq, a) <= update_queue(q, r, a)

    def test_conservation_over_random_trace(self, rng):
        # arrivals minus served-from-queue equals the queue delta, exactly
        q = 0.0
        arrived = 0.0
        served = 0.0
        for _ in range(5000):
            a = rng.uniform(0.0, 30.0)
            r = rng.uniform(0.0, 30.0)
            served += min(q, r)
            arrived += a
            q = update_queue(q, r, a)
        assert arrived - served == pytest.approx(q, rel=1e-12)


class TestDelayMeasure:
    def test_examples(self):
        assert delay_measure(0.0, 5.0) == 0.0
        assert delay_measure(50.0, 5.0) == pytest.approx(10.0)
        lam, dth = 7.0, 100.0
        assert delay_measure(lam * dth, lam) == pytest.approx(dth)

    def test_zero_arrival_rate_rejected(self):
        with pytest.raises(ValueError):
            delay_measure(1.0, 0.0)


class TestUeProfileValidation:
    def test_rate_bounds(self):
        with pytest.raises(ValueError):
            UeProfile(mean_arrival=10.0, arrival_cap=40.0, delay_bound=100.0,
                      reliability_eps=0.05, rate_min=5.0, rate_max=4.0)

    def test_cap_below_mean(self):
        with pytest.raises(ValueError):
            UeProfile(mean_arrival=10.0, arrival_cap=5.0, delay_bound=100.0,
                      reliability_eps=0.05, rate_min=1.0, rate_max=2.0)

    def test_eps_range(self):
        with pytest.raises(ValueError):
            make_profile(reliability_eps=0.0)
