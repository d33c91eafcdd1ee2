"""Per-slot transmit-power subproblem: weighted water-filling.

Maximizes sum_m Y_m * log2(1 + c_m * p_m) under the deterministic-
equivalent budget sum_m w_m * p_m <= P, where c_m = 1 - tau_m^2 and
w_m = 1/(N * Omega_m). KKT stationarity gives the closed form
p_m(mu) = max(0, Y_m/(mu*w_m*ln2) - 1/c_m) and the budget multiplier mu is
found by bisection.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels


@dataclass
class PowerProblem:
    """One slot's power-allocation data (priorities Y, or utility weights)."""

    priorities: np.ndarray
    gains: np.ndarray
    budget_weights: np.ndarray
    budget: float

    def __post_init__(self):
        self.priorities = np.atleast_1d(np.asarray(self.priorities, dtype=float))
        self.gains = np.atleast_1d(np.asarray(self.gains, dtype=float))
        self.budget_weights = np.atleast_1d(
            np.asarray(self.budget_weights, dtype=float))
        self.validate()

    def validate(self):
        if self.budget <= 0.0:
            raise ValueError("budget must be positive")
        if np.any(self.priorities < 0.0):
            raise ValueError("priorities must be non-negative")
        if np.any(self.gains < 0.0) or np.any(self.gains > 1.0):
            raise ValueError("gains must lie in [0, 1]")
        if np.any(self.budget_weights <= 0.0):
            raise ValueError("budget weights must be positive")
        if not (len(self.priorities) == len(self.gains)
                == len(self.budget_weights)):
            raise ValueError("per-UE arrays must have equal length")


def waterfill(prob, tol=1e-9, max_iter=200, backend=None):
    """Optimal powers for a PowerProblem; all-zero priorities give zero power."""
    p, _ = waterfill_with_multiplier(prob, tol=tol, max_iter=max_iter,
                                     backend=backend)
    return p


def waterfill_with_multiplier(prob, tol=1e-9, max_iter=200, backend=None):
    """Water-filling returning ``(p, mu)`` with mu the budget multiplier."""
    prob.validate()
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    kern = _kernels.get_backend(backend)
    p, mu = kern.waterfill(prob.priorities, prob.gains, prob.budget_weights,
                           prob.budget, tol, max_iter)
    return p, float(mu)


def rates_from_powers(p, taus):
    """Elementwise deterministic rates log2(1 + p*(1-tau^2)) in bits/s/Hz."""
    p = np.asarray(p, dtype=float)
    taus = np.asarray(taus, dtype=float)
    return np.log2(1.0 + p * (1.0 - taus ** 2))
