"""Per-slot latency control: rate/aux/control floors and the CCP solver.

The probabilistic latency constraint Pr{Q/lambda >= d_th} <= eps is
linearized into a per-slot minimum-rate floor

    r0(t) = max{r_min, t*lambda - lambda*d_th*eps - sum_{tau<t} r(tau)},

with an identical floor on the auxiliary rates driven by the auxiliary
history. The joint auxiliary-rate / control-parameter subproblem

    min  Y*phi - nu*w*log(phi)
    s.t. pi*nu >= nu0,  phi in [phi0, r_max]

is a difference of convex functions (relative entropy minus negative
entropy) and is solved by the convex-concave procedure.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels


def _floor_raw(t, mean_arrival, delay_bound, eps, history_cum):
    return t * mean_arrival - mean_arrival * delay_bound * eps - history_cum


def min_rate_floor(t, profile, served_cum):
    """Minimum-rate requirement for slot t given the served-rate history.

    Clamped at rate_max; a floor above rate_max means the UE cannot catch
    up within the slot (callers flag those slots as latency-infeasible).
    """
    raw = _floor_raw(t, profile.mean_arrival, profile.delay_bound,
                     profile.reliability_eps, served_cum)
    return min(max(profile.rate_min, raw), profile.rate_max)


def aux_floor(t, profile, aux_cum):
    """Auxiliary-rate floor for slot t given the auxiliary history."""
    raw = _floor_raw(t, profile.mean_arrival, profile.delay_bound,
                     profile.reliability_eps, aux_cum)
    return min(max(profile.rate_min, raw), profile.rate_max)


def control_floor(y, arrival_cap):
    """Control-parameter lower bound nu0(t) = max{Y(t) - a_max, 1}."""
    return max(y - arrival_cap, 1.0)


@dataclass
class AuxSubproblem:
    """One UE's per-slot auxiliary subproblem data.

    ``pi`` is the largest first derivative of the utility over the feasible
    rate range (1/r_min for the log utility). ``nu_max`` bounds the search
    interval for the control parameter; None selects
    nu_max_factor * max(nu0/pi, Y*r_max, 1).
    """

    virtual_queue: float
    aux_floor: float
    aux_ceiling: float
    control_floor: float
    pi: float
    weight: float = 1.0
    nu_max: float = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.virtual_queue < 0.0:
            raise ValueError("virtual queue must be non-negative")
        if not 0.0 < self.aux_floor <= self.aux_ceiling:
            raise ValueError("need 0 < aux_floor <= aux_ceiling")
        if self.control_floor < 1.0:
            raise ValueError("control floor must be at least 1")
        if self.pi <= 0.0:
            raise ValueError("pi must be positive")
        if self.nu_max is not None and self.nu_max <= 0.0:
            raise ValueError("nu_max must be positive when given")


@dataclass
class CcpResult:
    """CCP solver output: final iterate, objective trace, convergence flag."""

    aux: float
    control: float
    objective_trace: np.ndarray
    iterations: int
    converged: bool


def default_nu_max(sub, factor=2.0):
    """Search bound for the control parameter (the problem has no native one)."""
    return factor * max(sub.control_floor / sub.pi,
                        sub.virtual_queue * sub.aux_ceiling, 1.0)


def solve_aux_ccp(sub, tol=1e-6, max_iter=100, nu_max_factor=2.0,
                  gs_rel_tol=1e-10, gs_max_iter=200, backend=None):
    """Solve one auxiliary subproblem by the convex-concave procedure.

    Each iteration linearizes the negative-entropy part at the current
    control parameter; the inner convex step reduces to the closed form
    phi*(nu) = clamp(w*nu/Y, aux_floor, aux_ceiling) (aux_ceiling when
    Y = 0) plus a golden-section search over nu. Convergence is an
    objective change of at most ``tol``; on iteration exhaustion the last
    iterate is returned with ``converged=False``.
    """
    sub.validate()
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    kern = _kernels.get_backend(backend)
    nu_max = sub.nu_max if sub.nu_max is not None else default_nu_max(
        sub, nu_max_factor)
    trace = np.zeros(max_iter)
    phi, nu, n, converged = kern.ccp_solve(
        sub.virtual_queue, sub.aux_floor, sub.aux_ceiling, sub.control_floor,
        sub.pi, sub.weight, nu_max, tol, max_iter, gs_rel_tol, gs_max_iter,
        trace)
    return CcpResult(aux=float(phi), control=float(nu),
                     objective_trace=trace[:n].copy(), iterations=int(n),
                     converged=bool(converged))
