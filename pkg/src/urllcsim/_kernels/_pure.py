"""Pure-Python kernels for the per-slot solvers and the realization loop.

This module is the reference implementation of the hot path. The compiled
Cython module ``_core`` mirrors it statement for statement so that the two
backends produce bit-identical traces; any change to the arithmetic here
must be replicated there.

All quantities are in internal units: rates and queue lengths in bits per
slot, powers in effective (post-beamforming) watts.
"""

import math

import numpy as np

BACKEND_NAME = "pure"

LN2 = 0.6931471805599453
INVPHI = 0.6180339887498949  # (sqrt(5) - 1) / 2

POLICY_PROPOSED = 0
POLICY_BASELINE1 = 1
POLICY_BASELINE2 = 2
POLICY_WSRM = 3


def _phi_star(nu, y, floor, cap, weight):
    # Minimizer over the auxiliary rate for a fixed control parameter:
    # d/dphi [y*phi - weight*nu*log(phi)] = 0 at phi = weight*nu/y.
    if y <= 0.0:
        return cap
    x = weight * nu / y
    if x < floor:
        x = floor
    elif x > cap:
        x = cap
    return x


def _surrogate(nu, y, floor, cap, weight, lin):
    # Convexified subproblem objective with the negative-entropy part
    # linearized: y*phi + weight*nu*log(nu/phi) - lin*nu (constants dropped).
    phi = _phi_star(nu, y, floor, cap, weight)
    return y * phi + weight * nu * math.log(nu / phi) - lin * nu


def _golden_min(lo, hi, y, floor, cap, weight, lin, rel_tol, max_iter):
    # Golden-section minimization of the surrogate over the control
    # parameter. The final candidate is compared against both interval
    # endpoints so that boundary optima are returned exactly; the
    # production subproblem usually pins nu at a bound and an exact hit
    # lets the outer loop detect a zero objective change.
    if hi <= lo:
        return lo
    a = lo
    b = hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = _surrogate(c, y, floor, cap, weight, lin)
    fd = _surrogate(d, y, floor, cap, weight, lin)
    it = 0
    while (b - a) > rel_tol * (abs(a) + abs(b)) and it < max_iter:
        if fc < fd:
            b = d
            d = c
            fd = fc
            c = b - INVPHI * (b - a)
            fc = _surrogate(c, y, floor, cap, weight, lin)
        else:
            a = c
            c = d
            fc = fd
            d = a + INVPHI * (b - a)
            fd = _surrogate(d, y, floor, cap, weight, lin)
        it += 1
    # Pick the best of the bracket and the original bounds, preferring the
    # largest nu on exact ties. Bound hits are returned exactly (the
    # production subproblem usually pins nu at a bound, and an exact hit
    # lets the outer loop detect a zero objective change), while on an
    # exactly flat surrogate valley the rightmost candidate keeps the next
    # linearization moving instead of pinning a degenerate fixed point.
    best = lo
    fbest = _surrogate(lo, y, floor, cap, weight, lin)
    x = 0.5 * (a + b)
    for cand in (a, x, b, hi):
        fcand = _surrogate(cand, y, floor, cap, weight, lin)
        if fcand <= fbest:
            best = cand
            fbest = fcand
    return best


def ccp_solve(y, phi_floor, phi_cap, nu_floor, pi, weight, nu_max,
              tol, max_iter, gs_rel_tol, gs_max_iter, trace_out):
    """Convex-concave iteration for the joint (aux rate, control) problem.

    Minimizes y*phi - weight*nu*log(phi) over phi in [phi_floor, phi_cap]
    and pi*nu >= nu_floor, searching nu on [nu_floor/pi, nu_max]. Each
    outer step linearizes the concave part at the previous nu, reduces the
    convex step to the closed-form phi and a 1-D golden-section search in
    nu, and records the true objective in ``trace_out``.

    Returns ``(phi, nu, n_trace, converged)``; the recorded objective
    sequence is non-increasing by construction (an increasing step is
    rejected and iteration stops on the previous iterate).
    """
    nu_lo = nu_floor / pi
    nu_hi = nu_max
    if nu_hi < nu_lo:
        nu_hi = nu_lo
    # Minimizing over phi first leaves a concave function of nu, so the
    # global optimum sits at a nu bound; starting from the better bound
    # candidate puts the iteration in the right basin (a fixed mid-range
    # start can pin a local stationary point and miss the optimum).
    phi_c = _phi_star(nu_lo, y, phi_floor, phi_cap, weight)
    f_lo = y * phi_c - weight * nu_lo * math.log(phi_c)
    phi_c = _phi_star(nu_hi, y, phi_floor, phi_cap, weight)
    f_hi = y * phi_c - weight * nu_hi * math.log(phi_c)
    nu_i = nu_hi if f_hi <= f_lo else nu_lo
    phi = _phi_star(nu_i, y, phi_floor, phi_cap, weight)
    nu = nu_i
    prev_obj = 0.0
    n = 0
    converged = False
    for i in range(max_iter):
        lin = weight * (1.0 + math.log(nu_i))
        nu_new = _golden_min(nu_lo, nu_hi, y, phi_floor, phi_cap, weight,
                             lin, gs_rel_tol, gs_max_iter)
        phi_new = _phi_star(nu_new, y, phi_floor, phi_cap, weight)
        obj_new = y * phi_new - weight * nu_new * math.log(phi_new)
        if i > 0:
            delta = prev_obj - obj_new
            if delta < 0.0:
                converged = -delta <= tol
                break
            trace_out[n] = obj_new
            n += 1
            phi = phi_new
            nu = nu_new
            if delta <= tol:
                converged = True
                break
        else:
            trace_out[n] = obj_new
            n += 1
            phi = phi_new
            nu = nu_new
        prev_obj = obj_new
        nu_i = nu_new
    return phi, nu, n, converged


def _waterfill_into(y, c, w, budget, tol, max_iter, p_out):
    m_count = len(p_out)
    mu_hi = 0.0
    any_active = False
    for m in range(m_count):
        p_out[m] = 0.0
        if y[m] > 0.0 and c[m] >= 1e-12:
            any_active = True
            top = y[m] * c[m] / (LN2 * w[m])
            if top > mu_hi:
                mu_hi = top
    if not any_active:
        return 0.0
    mu_hi = mu_hi + 1.0
    mu_lo = 1e-12
    mu = 0.5 * (mu_lo + mu_hi)
    for _ in range(max_iter):
        mu = 0.5 * (mu_lo + mu_hi)
        used = 0.0
        for m in range(m_count):
            if y[m] > 0.0 and c[m] >= 1e-12:
                pm = y[m] / (mu * w[m] * LN2) - 1.0 / c[m]
                if pm > 0.0:
                    used += w[m] * pm
        err = used - budget
        if err > 0.0:
            mu_lo = mu
        else:
            mu_hi = mu
        if abs(err) <= tol * budget:
            break
    for m in range(m_count):
        if y[m] > 0.0 and c[m] >= 1e-12:
            pm = y[m] / (mu * w[m] * LN2) - 1.0 / c[m]
            if pm > 0.0:
                p_out[m] = pm
    return mu


def waterfill(y, c, w, budget, tol, max_iter):
    """Water-filling for max sum of y_m*log2(1+c_m*p_m) s.t. sum w_m*p_m <= budget.

    KKT stationarity gives p_m(mu) = max(0, y_m/(mu*w_m*ln2) - 1/c_m); the
    multiplier mu is found by bisection on the monotone budget usage.
    Returns ``(p, mu)``; all-zero priorities yield all-zero power and mu=0.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    p = np.zeros(len(y))
    mu = _waterfill_into(y, c, w, budget, tol, max_iter, p)
    return p, mu


def simulate_policy(kind, static_v, arrivals, lam, dth_eps, rmin, rmax, amax,
                    pie, weight, c, w, budget, rate_scale,
                    ccp_tol, ccp_max_iter, nu_max_factor, gs_rel_tol,
                    gs_max_iter, wf_tol, wf_max_iter):
    """Run one realization of a scheduling policy over the whole horizon.

    ``arrivals`` is the (T, M) matrix of pre-drawn arrival bits. Per slot:
    rate/aux floors, control-parameter selection (CCP for the proposed
    policy, the static-V closed form for the baselines, skipped for the
    queue-oblivious max-throughput reference), water-filling on the
    virtual-queue priorities, then the real and virtual queue recursions.

    Returns a dict of (T, M) trace arrays plus the final queue vectors.
    ``queue``/``vqueue`` hold the state at the start of each slot.
    """
    arrivals = np.ascontiguousarray(arrivals, dtype=np.float64)
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    dth_eps = np.ascontiguousarray(dth_eps, dtype=np.float64)
    rmin = np.ascontiguousarray(rmin, dtype=np.float64)
    rmax = np.ascontiguousarray(rmax, dtype=np.float64)
    amax = np.ascontiguousarray(amax, dtype=np.float64)
    pie = np.ascontiguousarray(pie, dtype=np.float64)
    weight = np.ascontiguousarray(weight, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    T, M = arrivals.shape
    queue = np.zeros((T, M))
    vqueue = np.zeros((T, M))
    aux = np.zeros((T, M))
    nu_out = np.zeros((T, M))
    power = np.zeros((T, M))
    rate_bits = np.zeros((T, M))
    served = np.zeros((T, M))
    infeasible = np.zeros((T, M), dtype=np.uint8)
    budget_used = np.zeros(T)

    q = np.zeros(M)
    yv = np.zeros(M)
    aux_cum = np.zeros(M)
    prio = np.zeros(M)
    phi_t = np.zeros(M)
    nu_t = np.zeros(M)
    p_alloc = np.zeros(M)
    trace_buf = np.zeros(max(ccp_max_iter, 1))

    for t in range(T):
        for m in range(M):
            queue[t, m] = q[m]
            vqueue[t, m] = yv[m]
        tt = t + 1
        if kind == POLICY_WSRM:
            for m in range(M):
                prio[m] = weight[m]
                phi_t[m] = 0.0
                nu_t[m] = 0.0
        else:
            for m in range(M):
                if kind == POLICY_BASELINE2:
                    floor = rmin[m]
                else:
                    floor = tt * lam[m] - dth_eps[m] - aux_cum[m]
                    if floor < rmin[m]:
                        floor = rmin[m]
                    if floor > rmax[m]:
                        floor = rmax[m]
                        infeasible[t, m] = 1
                if kind == POLICY_PROPOSED:
                    nu0 = yv[m] - amax[m]
                    if nu0 < 1.0:
                        nu0 = 1.0
                    nu_cap = nu0 / pie[m]
                    if yv[m] * rmax[m] > nu_cap:
                        nu_cap = yv[m] * rmax[m]
                    if nu_cap < 1.0:
                        nu_cap = 1.0
                    phi_m, nu_m, _n, _cv = ccp_solve(
                        yv[m], floor, rmax[m], nu0, pie[m], weight[m],
                        nu_max_factor * nu_cap, ccp_tol, ccp_max_iter,
                        gs_rel_tol, gs_max_iter, trace_buf)
                else:
                    if yv[m] > 0.0:
                        x = static_v * weight[m] / yv[m]
                        if x < floor:
                            x = floor
                        elif x > rmax[m]:
                            x = rmax[m]
                        phi_m = x
                    else:
                        phi_m = rmax[m]
                    nu_m = static_v
                phi_t[m] = phi_m
                nu_t[m] = nu_m
                prio[m] = yv[m]
        _waterfill_into(prio, c, w, budget, wf_tol, wf_max_iter, p_alloc)
        used = 0.0
        for m in range(M):
            pm = p_alloc[m]
            rb = math.log2(1.0 + pm * c[m]) * rate_scale
            rate_bits[t, m] = rb
            power[t, m] = pm
            aux[t, m] = phi_t[m]
            nu_out[t, m] = nu_t[m]
            used += w[m] * pm
            sv = q[m] if q[m] < rb else rb
            served[t, m] = sv
            qn = q[m] - rb
            if qn < 0.0:
                qn = 0.0
            q[m] = qn + arrivals[t, m]
            if kind != POLICY_WSRM:
                yn = yv[m] + phi_t[m] - rb
                if yn < 0.0:
                    yn = 0.0
                yv[m] = yn
                aux_cum[m] += phi_t[m]
        budget_used[t] = used
    return {
        "queue": queue,
        "vqueue": vqueue,
        "aux": aux,
        "nu": nu_out,
        "power": power,
        "rate_bits": rate_bits,
        "served": served,
        "infeasible": infeasible,
        "budget_used": budget_used,
        "q_final": q,
        "y_final": yv,
    }
