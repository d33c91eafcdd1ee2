"""Independent oracle checks for the per-slot solvers.

Each check re-derives the expected answer by brute force (closed forms,
exhaustive grids, Monte Carlo) and compares the production solver against
it, printing the measured gaps. Used by the CLI ``validate`` subcommand.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, deterministic_rate, ergodic_rate_mc, solve_omega
from .latency import AuxSubproblem, default_nu_max, solve_aux_ccp
from .powerctl import PowerProblem, waterfill_with_multiplier

LN2 = math.log(2.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    lines: list


def omega_quadratic_root(n, m, alpha):
    """Closed-form positive root for equal unit gains: the fixed point
    reduces to N*x^2 + (N*alpha + M - N)*x - N*alpha = 0."""
    b = n * alpha + m - n
    disc = b * b + 4.0 * n * n * alpha
    return (-b + math.sqrt(disc)) / (2.0 * n)


def waterfill_grid_objective(y, c, w, budget, points=1000):
    """Exhaustive budget-simplex grid search for the water-filling objective.

    Lays ``points`` lattice values per dimension on the budget shares
    b_m = w_m * p_m and maximizes sum y_m*log2(1+c_m*b_m/w_m) over the full
    budget face (the objective is non-decreasing in every share). The
    per-dimension tables are combined by index-sum folding, which
    enumerates exactly the lattice optima of the brute-force grid.
    """
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    w = np.asarray(w, dtype=float)
    shares = np.linspace(0.0, budget, points)
    tables = [y_m * np.log2(1.0 + c_m * shares / w_m)
              for y_m, c_m, w_m in zip(y, c, w)]
    acc = tables[0]
    for table in tables[1:]:
        nxt = np.empty(points)
        for s in range(points):
            nxt[s] = np.max(acc[:s + 1] + table[s::-1])
        acc = nxt
    return float(acc[points - 1])


def waterfill_objective(y, c, p):
    return float(np.sum(np.asarray(y) * np.log2(1.0 + np.asarray(c) * p)))


def kkt_residual(y, c, w, p, mu):
    """Worst relative KKT violation of a water-filling solution."""
    worst = 0.0
    for m in range(len(p)):
        if c[m] < 1e-12 or y[m] <= 0.0:
            continue
        grad = y[m] * c[m] / (LN2 * (1.0 + c[m] * p[m]))
        if p[m] > 0.0:
            worst = max(worst, abs(grad - mu * w[m]) / (mu * w[m]))
        elif grad > mu * w[m]:
            worst = max(worst, (grad - mu * w[m]) / (mu * w[m]))
    return worst


def ccp_grid_objective(sub, nu_max, points=1000):
    """Exhaustive 2-D grid minimum of Y*phi - w*nu*log(phi)."""
    phis = np.linspace(sub.aux_floor, sub.aux_ceiling, points)
    nus = np.linspace(sub.control_floor / sub.pi, nu_max, points)
    obj = sub.virtual_queue * phis[None, :] \
        - sub.weight * nus[:, None] * np.log(phis)[None, :]
    return float(obj.min())


def random_waterfill_instance(rng, m_count):
    y = rng.uniform(0.0, 10.0, m_count)
    if m_count > 1 and rng.uniform() < 0.2:
        y[rng.integers(m_count)] = 0.0
    c = rng.uniform(0.2, 1.0, m_count)
    w = rng.uniform(0.05, 2.0, m_count)
    budget = rng.uniform(0.5, 20.0)
    return PowerProblem(priorities=y, gains=c, budget_weights=w, budget=budget)


def random_ccp_instance(rng):
    floor = rng.uniform(0.1, 5.0)
    cap = floor + rng.uniform(0.01, 5.0)
    return AuxSubproblem(
        virtual_queue=rng.uniform(0.0, 100.0),
        aux_floor=floor,
        aux_ceiling=cap,
        control_floor=rng.uniform(1.0, 20.0),
        pi=rng.uniform(0.1, 10.0),
        weight=1.0)


def check_omega(tol_scale=1.0, seed=0):
    tol = 1e-8 * tol_scale
    lines = []
    passed = True
    for n, m in ((8, 4), (32, 16)):
        for alpha in (0.01, 0.1):
            params = ChannelParams(
                n_antennas=n, regularization=alpha,
                correlation_gains=np.ones(m),
                csi_accuracy=np.zeros(m), power_budget=1.0)
            sol = solve_omega(params, tol=1e-12, max_iter=5000)
            root = omega_quadratic_root(n, m, alpha)
            gap = float(np.max(np.abs(sol.omegas - root)))
            ok = gap <= tol
            passed &= ok
            lines.append(f"  theta=I N={n} M={m} alpha={alpha}: "
                         f"|omega-root|={gap:.3e} {'ok' if ok else 'FAIL'}")
    rng = np.random.default_rng(seed)
    for rep in range(3):
        n, m = 8, 4
        thetas = []
        for _ in range(m):
            a = rng.standard_normal((n, n))
            mat = a @ a.T
            mat *= n / np.trace(mat)
            thetas.append(mat)
        params = ChannelParams(
            n_antennas=n, regularization=0.05, correlation_gains=thetas,
            csi_accuracy=np.zeros(m), power_budget=1.0)
        sol = solve_omega(params, tol=1e-12, max_iter=5000)
        ok = sol.residual <= tol
        passed &= ok
        lines.append(f"  random PSD rep={rep}: residual={sol.residual:.3e} "
                     f"{'ok' if ok else 'FAIL'}")
    return CheckResult("omega", passed, lines)


def check_waterfill(tol_scale=1.0, seed=1, counts=(8, 10, 8, 2)):
    obj_tol = 1e-3 * tol_scale
    kkt_tol = 1e-6 * tol_scale
    rng = np.random.default_rng(seed)
    lines = []
    passed = True
    worst_obj = 0.0
    worst_kkt = 0.0
    for m_count, reps in zip((1, 2, 3, 4), counts):
        for _ in range(reps):
            prob = random_waterfill_instance(rng, m_count)
            p, mu = waterfill_with_multiplier(prob)
            obj = waterfill_objective(prob.priorities, prob.gains, p)
            ref = waterfill_grid_objective(prob.priorities, prob.gains,
                                           prob.budget_weights, prob.budget)
            gap = abs(obj - ref) / max(1.0, abs(ref))
            worst_obj = max(worst_obj, gap)
            if np.any(prob.priorities > 0.0):
                worst_kkt = max(worst_kkt, kkt_residual(
                    prob.priorities, prob.gains, prob.budget_weights, p, mu))
    ok_obj = worst_obj <= obj_tol
    ok_kkt = worst_kkt <= kkt_tol
    passed = ok_obj and ok_kkt
    lines.append(f"  worst objective gap vs grid: {worst_obj:.3e} "
                 f"{'ok' if ok_obj else 'FAIL'}")
    lines.append(f"  worst KKT residual: {worst_kkt:.3e} "
                 f"{'ok' if ok_kkt else 'FAIL'}")
    return CheckResult("waterfill", passed, lines)


def check_ccp(tol_scale=1.0, seed=2, reps=20):
    rng = np.random.default_rng(seed)
    lines = []
    passed = True
    worst_gap = -math.inf
    n_conv = 0
    for _ in range(reps):
        sub = random_ccp_instance(rng)
        nu_max = default_nu_max(sub)
        res = solve_aux_ccp(sub)
        n_conv += res.converged
        diffs = np.diff(res.objective_trace)
        if np.any(diffs > 1e-9 * np.maximum(1.0, np.abs(
                res.objective_trace[:-1]))):
            passed = False
            lines.append("  FAIL: objective trace increased")
        ref = ccp_grid_objective(sub, nu_max)
        final = res.objective_trace[-1]
        gap = (final - ref) / (1.0 + abs(ref))
        worst_gap = max(worst_gap, gap)
    ok_gap = worst_gap <= 1e-3 * tol_scale
    passed &= ok_gap
    lines.append(f"  worst (ccp - grid) relative gap: {worst_gap:.3e} "
                 f"{'ok' if ok_gap else 'FAIL'}")
    lines.append(f"  converged {n_conv}/{reps}")
    passed &= n_conv >= int(0.95 * reps)
    return CheckResult("ccp", passed, lines)


def check_mc_rate(tol_scale=1.0, seed=3, trials=2000, power=1.0):
    lines = []
    gaps = []
    for n in (16, 32, 64):
        m = n // 2
        params = ChannelParams(
            n_antennas=n, regularization=0.01,
            correlation_gains=np.ones(m), csi_accuracy=np.zeros(m),
            power_budget=1.0)
        mc = ergodic_rate_mc(params, np.full(m, power), trials, seed)
        det = deterministic_rate(power, 0.0)
        gap = abs(float(np.mean(mc)) - det)
        gaps.append(gap)
        lines.append(f"  N={n} M={m}: |mc - deterministic| = {gap:.4f}")
    decreasing = all(gaps[i + 1] < gaps[i] for i in range(len(gaps) - 1))
    small = gaps[-1] <= 0.05 * tol_scale
    passed = decreasing and small
    lines.append(f"  strictly decreasing in N: {decreasing}; "
                 f"final gap <= {0.05 * tol_scale:g}: {small}")
    return CheckResult("mc_rate", passed, lines)


ALL_CHECKS = {
    "omega": check_omega,
    "waterfill": check_waterfill,
    "ccp": check_ccp,
    "mc_rate": check_mc_rate,
}


def run_checks(only=None, tol_scale=1.0, trials=2000):
    """Run the oracle suite; returns the list of CheckResults."""
    names = list(ALL_CHECKS) if not only else list(only)
    results = []
    for name in names:
        if name not in ALL_CHECKS:
            raise ValueError(f"unknown check: {name!r} "
                             f"(choose from {sorted(ALL_CHECKS)})")
        if name == "mc_rate":
            results.append(ALL_CHECKS[name](tol_scale=tol_scale,
                                            trials=trials))
        else:
            results.append(ALL_CHECKS[name](tol_scale=tol_scale))
    return results
