"""Shared brute-force oracles and instance generators for the test suite.

The oracles here are deliberately independent of the package solvers:
closed forms, exhaustive lattice searches, and direct recursion replays.
"""

import math

import numpy as np
import pytest


LN2 = math.log(2.0)


def wf_objective(y, c, p):
    """Water-filling objective sum y*log2(1+c*p)."""
    return float(np.sum(np.asarray(y) * np.log2(1.0 + np.asarray(c) * np.asarray(p))))


def wf_grid_best(y, c, w, budget, points=1000):
    """Exhaustive grid search over the budget simplex.

    Enumerates the lattice with ``points`` values per dimension on the
    budget shares b_m = w_m*p_m and maximizes the objective over the full
    budget face (optimal because the objective is non-decreasing in every
    coordinate). The per-dimension tables are folded by index sum, which
    visits exactly the same lattice optima as the naive nested loops.
    """
    shares = np.linspace(0.0, budget, points)
    tables = [ym * np.log2(1.0 + cm * shares / wm)
              for ym, cm, wm in zip(y, c, w)]
    acc = tables[0]
    for table in tables[1:]:
        nxt = np.empty(points)
        for s in range(points):
            nxt[s] = np.max(acc[:s + 1] + table[s::-1])
        acc = nxt
    return float(acc[points - 1])


def ccp_objective(y, weight, phi, nu):
    return y * phi - weight * nu * math.log(phi)


def ccp_grid_min(y, weight, phi_lo, phi_hi, nu_lo, nu_hi, points=1000):
    """Exhaustive 2-D grid minimum of y*phi - weight*nu*log(phi)."""
    phis = np.linspace(phi_lo, phi_hi, points)
    nus = np.linspace(nu_lo, nu_hi, points)
    obj = y * phis[None, :] - weight * nus[:, None] * np.log(phis)[None, :]
    return float(obj.min())


def random_power_problem(rng, m_count):
    from urllcsim.powerctl import PowerProblem

    y = rng.uniform(0.0, 10.0, m_count)
    if m_count > 1 and rng.uniform() < 0.2:
        y[rng.integers(m_count)] = 0.0
    return PowerProblem(
        priorities=y,
        gains=rng.uniform(0.2, 1.0, m_count),
        budget_weights=rng.uniform(0.05, 2.0, m_count),
        budget=float(rng.uniform(0.5, 20.0)))


def random_aux_subproblem(rng):
    from urllcsim.latency import AuxSubproblem

    floor = rng.uniform(0.1, 5.0)
    return AuxSubproblem(
        virtual_queue=float(rng.uniform(0.0, 100.0)),
        aux_floor=float(floor),
        aux_ceiling=float(floor + rng.uniform(0.01, 5.0)),
        control_floor=float(rng.uniform(1.0, 20.0)),
        pi=float(rng.uniform(0.1, 10.0)),
        weight=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def make_profile(lam=1000.0, dth=100.0, eps=0.05, **kw):
    from urllcsim.traffic import UeProfile

    defaults = dict(mean_arrival=lam, arrival_cap=4.0 * lam,
                    delay_bound=dth, reliability_eps=eps,
                    rate_min=0.8 * lam, rate_max=1.2 * lam)
    defaults.update(kw)
    return UeProfile(**defaults)
