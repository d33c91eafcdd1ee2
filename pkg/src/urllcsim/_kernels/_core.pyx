# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-slot solvers and the realization loop.

Statement-for-statement mirror of ``_pure``; both backends must produce
bit-identical traces. Keep any arithmetic change in sync with ``_pure.py``.
"""

from libc.math cimport fabs, log, log2

import numpy as np

BACKEND_NAME = "core"

cdef double LN2 = 0.6931471805599453
cdef double INVPHI = 0.6180339887498949  # (sqrt(5) - 1) / 2

POLICY_PROPOSED = 0
POLICY_BASELINE1 = 1
POLICY_BASELINE2 = 2
POLICY_WSRM = 3

cdef int K_PROPOSED = 0
cdef int K_BASELINE1 = 1
cdef int K_BASELINE2 = 2
cdef int K_WSRM = 3


cdef inline double _phi_star(double nu, double y, double floor, double cap,
                             double weight) noexcept nogil:
    cdef double x
    if y <= 0.0:
        return cap
    x = weight * nu / y
    if x < floor:
        x = floor
    elif x > cap:
        x = cap
    return x


cdef inline double _surrogate(double nu, double y, double floor, double cap,
                              double weight, double lin) noexcept nogil:
    cdef double phi = _phi_star(nu, y, floor, cap, weight)
    return y * phi + weight * nu * log(nu / phi) - lin * nu


cdef double _golden_min(double lo, double hi, double y, double floor,
                        double cap, double weight, double lin,
                        double rel_tol, int max_iter) noexcept nogil:
    cdef double a, b, c, d, fc, fd, x, fx, best, fbest
    cdef int it
    if hi <= lo:
        return lo
    a = lo
    b = hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = _surrogate(c, y, floor, cap, weight, lin)
    fd = _surrogate(d, y, floor, cap, weight, lin)
    it = 0
    while (b - a) > rel_tol * (fabs(a) + fabs(b)) and it < max_iter:
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
    fx = _surrogate(a, y, floor, cap, weight, lin)
    if fx <= fbest:
        best = a
        fbest = fx
    fx = _surrogate(x, y, floor, cap, weight, lin)
    if fx <= fbest:
        best = x
        fbest = fx
    fx = _surrogate(b, y, floor, cap, weight, lin)
    if fx <= fbest:
        best = b
        fbest = fx
    fx = _surrogate(hi, y, floor, cap, weight, lin)
    if fx <= fbest:
        best = hi
        fbest = fx
    return best


cdef double _ccp_solve(double y, double phi_floor, double phi_cap,
                       double nu_floor, double pi, double weight,
                       double nu_max, double tol, int max_iter,
                       double gs_rel_tol, int gs_max_iter,
                       double[::1] trace_out, double* nu_res, int* n_res,
                       bint* conv_res) noexcept nogil:
    cdef double nu_lo, nu_hi, nu_i, phi, nu, prev_obj
    cdef double lin, nu_new, phi_new, obj_new, delta
    cdef double phi_c, f_lo, f_hi
    cdef int n, i
    cdef bint converged
    nu_lo = nu_floor / pi
    nu_hi = nu_max
    if nu_hi < nu_lo:
        nu_hi = nu_lo
    # Minimizing over phi first leaves a concave function of nu, so the
    # global optimum sits at a nu bound; starting from the better bound
    # candidate puts the iteration in the right basin (a fixed mid-range
    # start can pin a local stationary point and miss the optimum).
    phi_c = _phi_star(nu_lo, y, phi_floor, phi_cap, weight)
    f_lo = y * phi_c - weight * nu_lo * log(phi_c)
    phi_c = _phi_star(nu_hi, y, phi_floor, phi_cap, weight)
    f_hi = y * phi_c - weight * nu_hi * log(phi_c)
    nu_i = nu_hi if f_hi <= f_lo else nu_lo
    phi = _phi_star(nu_i, y, phi_floor, phi_cap, weight)
    nu = nu_i
    prev_obj = 0.0
    n = 0
    converged = False
    for i in range(max_iter):
        lin = weight * (1.0 + log(nu_i))
        nu_new = _golden_min(nu_lo, nu_hi, y, phi_floor, phi_cap, weight,
                             lin, gs_rel_tol, gs_max_iter)
        phi_new = _phi_star(nu_new, y, phi_floor, phi_cap, weight)
        obj_new = y * phi_new - weight * nu_new * log(phi_new)
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
    nu_res[0] = nu
    n_res[0] = n
    conv_res[0] = converged
    return phi


def ccp_solve(double y, double phi_floor, double phi_cap, double nu_floor,
              double pi, double weight, double nu_max, double tol,
              int max_iter, double gs_rel_tol, int gs_max_iter, trace_out):
    """Convex-concave iteration for the joint (aux rate, control) problem.

    Same contract as ``_pure.ccp_solve``.
    """
    cdef double[::1] buf = trace_out
    cdef double nu = 0.0
    cdef int n = 0
    cdef bint conv = False
    cdef double phi = _ccp_solve(y, phi_floor, phi_cap, nu_floor, pi, weight,
                                 nu_max, tol, max_iter, gs_rel_tol,
                                 gs_max_iter, buf, &nu, &n, &conv)
    return phi, nu, n, bool(conv)


cdef double _waterfill_into(double[::1] y, double[::1] c, double[::1] w,
                            double budget, double tol, int max_iter,
                            double[::1] p_out) noexcept nogil:
    cdef Py_ssize_t m_count = p_out.shape[0]
    cdef Py_ssize_t m
    cdef double mu_hi = 0.0
    cdef bint any_active = False
    cdef double top, mu_lo, mu, used, pm, err
    cdef int it
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
    for it in range(max_iter):
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
        if fabs(err) <= tol * budget:
            break
    for m in range(m_count):
        if y[m] > 0.0 and c[m] >= 1e-12:
            pm = y[m] / (mu * w[m] * LN2) - 1.0 / c[m]
            if pm > 0.0:
                p_out[m] = pm
    return mu


def waterfill(y, c, w, double budget, double tol, int max_iter):
    """Water-filling bisection on the budget multiplier.

    Same contract as ``_pure.waterfill``; returns ``(p, mu)``.
    """
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    p = np.zeros(yv.shape[0])
    cdef double[::1] pv = p
    cdef double mu = _waterfill_into(yv, cv, wv, budget, tol, max_iter, pv)
    return p, mu


def simulate_policy(int kind, double static_v, arrivals, lam, dth_eps, rmin,
                    rmax, amax, pie, weight, c, w, double budget,
                    double rate_scale, double ccp_tol, int ccp_max_iter,
                    double nu_max_factor, double gs_rel_tol, int gs_max_iter,
                    double wf_tol, int wf_max_iter):
    """Run one realization of a scheduling policy over the whole horizon.

    Same contract as ``_pure.simulate_policy``.
    """
    arr = np.ascontiguousarray(arrivals, dtype=np.float64)
    cdef Py_ssize_t T = arr.shape[0]
    cdef Py_ssize_t M = arr.shape[1]
    cdef double[:, ::1] arr_v = arr

    queue = np.zeros((T, M))
    vqueue = np.zeros((T, M))
    aux = np.zeros((T, M))
    nu_out = np.zeros((T, M))
    power = np.zeros((T, M))
    rate_bits = np.zeros((T, M))
    served = np.zeros((T, M))
    infeasible = np.zeros((T, M), dtype=np.uint8)
    budget_used = np.zeros(T)
    q_arr = np.zeros(M)
    y_arr = np.zeros(M)

    cdef double[:, ::1] queue_v = queue
    cdef double[:, ::1] vqueue_v = vqueue
    cdef double[:, ::1] aux_v = aux
    cdef double[:, ::1] nu_v = nu_out
    cdef double[:, ::1] power_v = power
    cdef double[:, ::1] rate_v = rate_bits
    cdef double[:, ::1] served_v = served
    cdef unsigned char[:, ::1] infeas_v = infeasible
    cdef double[::1] budget_v = budget_used
    cdef double[::1] q = q_arr
    cdef double[::1] yv = y_arr

    cdef double[::1] lam_v = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] dth_v = np.ascontiguousarray(dth_eps, dtype=np.float64)
    cdef double[::1] rmin_v = np.ascontiguousarray(rmin, dtype=np.float64)
    cdef double[::1] rmax_v = np.ascontiguousarray(rmax, dtype=np.float64)
    cdef double[::1] amax_v = np.ascontiguousarray(amax, dtype=np.float64)
    cdef double[::1] pie_v = np.ascontiguousarray(pie, dtype=np.float64)
    cdef double[::1] wgt_v = np.ascontiguousarray(weight, dtype=np.float64)
    cdef double[::1] c_v = np.ascontiguousarray(c, dtype=np.float64)
    cdef double[::1] w_v = np.ascontiguousarray(w, dtype=np.float64)

    aux_cum_arr = np.zeros(M)
    prio_arr = np.zeros(M)
    phi_arr = np.zeros(M)
    nut_arr = np.zeros(M)
    palloc_arr = np.zeros(M)
    trace_arr = np.zeros(max(ccp_max_iter, 1))
    cdef double[::1] aux_cum = aux_cum_arr
    cdef double[::1] prio = prio_arr
    cdef double[::1] phi_t = phi_arr
    cdef double[::1] nu_t = nut_arr
    cdef double[::1] p_alloc = palloc_arr
    cdef double[::1] trace_buf = trace_arr

    cdef Py_ssize_t t, m
    cdef double tt, floor, nu0, nu_cap, phi_m, nu_m, x
    cdef double used, pm, rb, sv, qn, yn
    cdef double ccp_nu = 0.0
    cdef int ccp_n = 0
    cdef bint ccp_conv = False

    with nogil:
        for t in range(T):
            for m in range(M):
                queue_v[t, m] = q[m]
                vqueue_v[t, m] = yv[m]
            tt = <double> (t + 1)
            if kind == K_WSRM:
                for m in range(M):
                    prio[m] = wgt_v[m]
                    phi_t[m] = 0.0
                    nu_t[m] = 0.0
            else:
                for m in range(M):
                    if kind == K_BASELINE2:
                        floor = rmin_v[m]
                    else:
                        floor = tt * lam_v[m] - dth_v[m] - aux_cum[m]
                        if floor < rmin_v[m]:
                            floor = rmin_v[m]
                        if floor > rmax_v[m]:
                            floor = rmax_v[m]
                            infeas_v[t, m] = 1
                    if kind == K_PROPOSED:
                        nu0 = yv[m] - amax_v[m]
                        if nu0 < 1.0:
                            nu0 = 1.0
                        nu_cap = nu0 / pie_v[m]
                        if yv[m] * rmax_v[m] > nu_cap:
                            nu_cap = yv[m] * rmax_v[m]
                        if nu_cap < 1.0:
                            nu_cap = 1.0
                        phi_m = _ccp_solve(
                            yv[m], floor, rmax_v[m], nu0, pie_v[m], wgt_v[m],
                            nu_max_factor * nu_cap, ccp_tol, ccp_max_iter,
                            gs_rel_tol, gs_max_iter, trace_buf,
                            &ccp_nu, &ccp_n, &ccp_conv)
                        nu_m = ccp_nu
                    else:
                        if yv[m] > 0.0:
                            x = static_v * wgt_v[m] / yv[m]
                            if x < floor:
                                x = floor
                            elif x > rmax_v[m]:
                                x = rmax_v[m]
                            phi_m = x
                        else:
                            phi_m = rmax_v[m]
                        nu_m = static_v
                    phi_t[m] = phi_m
                    nu_t[m] = nu_m
                    prio[m] = yv[m]
            _waterfill_into(prio, c_v, w_v, budget, wf_tol, wf_max_iter,
                            p_alloc)
            used = 0.0
            for m in range(M):
                pm = p_alloc[m]
                rb = log2(1.0 + pm * c_v[m]) * rate_scale
                rate_v[t, m] = rb
                power_v[t, m] = pm
                aux_v[t, m] = phi_t[m]
                nu_v[t, m] = nu_t[m]
                used += w_v[m] * pm
                sv = q[m] if q[m] < rb else rb
                served_v[t, m] = sv
                qn = q[m] - rb
                if qn < 0.0:
                    qn = 0.0
                q[m] = qn + arr_v[t, m]
                if kind != K_WSRM:
                    yn = yv[m] + phi_t[m] - rb
                    if yn < 0.0:
                        yn = 0.0
                    yv[m] = yn
                    aux_cum[m] += phi_t[m]
            budget_v[t] = used
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
        "q_final": q_arr,
        "y_final": y_arr,
    }
