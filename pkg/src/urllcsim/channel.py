"""Deterministic-equivalent massive-MIMO physical layer.

The downlink uses regularized zero-forcing with imperfect CSI. In the
large-antenna regime the per-UE ergodic rate collapses to the closed form
log2(1 + p*(1 - tau^2)) where p is the effective post-beamforming power,
and the transmit power constraint becomes (1/N) * sum_m p_m / Omega_m <= P
with Omega the solution of a fixed-point system over the antenna
correlation profiles. This module solves that fixed point, evaluates the
budget and rate formulas, maps distances to linear channel gains, and
provides a small-N random-matrix Monte Carlo oracle used to validate the
deterministic equivalent.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError


@dataclass
class PathLossConfig:
    """Log-distance LOS path loss: PL(d) dB = intercept + 10*exponent*log10(d/1m)."""

    intercept_db: float = 61.4
    exponent: float = 2.0


def pathloss_gain(distance_m, model=None):
    """Linear power gain for a MBS-UE distance in meters (gain <= 1)."""
    if model is None:
        model = PathLossConfig()
    if distance_m <= 0.0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    pl_db = model.intercept_db + 10.0 * model.exponent * math.log10(distance_m)
    return 10.0 ** (-pl_db / 10.0)


@dataclass
class ChannelParams:
    """Static physical-layer parameters for one scenario.

    ``correlation_gains`` is either a per-UE vector of scalar gains g_m
    (correlation Theta_m = g_m * I, the production path) or a list of
    per-UE PSD matrices with trace N*g_m (validation oracle only).
    """

    n_antennas: int
    regularization: float
    correlation_gains: object
    csi_accuracy: np.ndarray
    power_budget: float

    def __post_init__(self):
        self.csi_accuracy = np.atleast_1d(np.asarray(self.csi_accuracy, dtype=float))
        if not self.is_matrix_valued:
            self.correlation_gains = np.atleast_1d(
                np.asarray(self.correlation_gains, dtype=float))
        self.validate()

    @property
    def is_matrix_valued(self):
        return isinstance(self.correlation_gains, (list, tuple))

    @property
    def n_ues(self):
        if self.is_matrix_valued:
            return len(self.correlation_gains)
        return self.correlation_gains.shape[0]

    def validate(self):
        n = self.n_antennas
        m = self.n_ues
        if n < 1 or n < m:
            raise ValueError(f"need n_antennas >= max(1, n_ues), got N={n}, M={m}")
        if self.regularization <= 0.0:
            raise ValueError("regularization must be positive")
        if self.power_budget <= 0.0:
            raise ValueError("power budget must be positive")
        taus = self.csi_accuracy
        if taus.shape[0] != m:
            raise ValueError("csi_accuracy length must match the UE count")
        if np.any(taus < 0.0) or np.any(taus > 1.0):
            raise ValueError("csi accuracies must lie in [0, 1]")
        if self.is_matrix_valued:
            for mat in self.correlation_gains:
                mat = np.asarray(mat)
                if mat.shape != (n, n):
                    raise ValueError("correlation matrices must be N x N")
                if not np.allclose(mat, mat.conj().T, atol=1e-10):
                    raise ValueError("correlation matrices must be Hermitian")
        elif np.any(self.correlation_gains <= 0.0):
            raise ValueError("scalar correlation gains must be positive")


@dataclass
class OmegaSolution:
    """Solved fixed point: per-UE Omega_m, final residual, iteration count."""

    omegas: np.ndarray
    residual: float
    iterations: int

    def __post_init__(self):
        self.omegas = np.asarray(self.omegas, dtype=float)


def _omega_map_scalar(omega, gains, alpha, n):
    s = np.sum(gains / (alpha + omega)) / n + 1.0
    return gains / s


def _omega_map_matrix(omega, thetas, alpha, n):
    j = np.eye(n, dtype=complex)
    for k, theta in enumerate(thetas):
        j = j + np.asarray(theta, dtype=complex) / (n * (alpha + omega[k]))
    jinv = np.linalg.inv(j)
    out = np.empty(len(thetas))
    for m, theta in enumerate(thetas):
        out[m] = np.trace(np.asarray(theta, dtype=complex) @ jinv).real / n
    return out


def solve_omega(params, tol=1e-10, max_iter=500):
    """Solve Omega_m = (1/N) Tr(Theta_m ((1/N) sum_k Theta_k/(alpha+Omega_k) + I)^-1).

    Fixed-point iteration from Omega = 1 with 0.5 damping whenever the
    residual increases. For scalar gains the map reduces to
    g_m / ((1/N) sum_k g_k/(alpha+Omega_k) + 1).
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    params.validate()
    n = params.n_antennas
    alpha = params.regularization
    m_count = params.n_ues
    if m_count == 0:
        raise ValueError("omega fixed point is undefined with no UEs")
    if params.is_matrix_valued:
        fixed_point_map = lambda om: _omega_map_matrix(
            om, params.correlation_gains, alpha, n)
    else:
        fixed_point_map = lambda om: _omega_map_scalar(
            om, params.correlation_gains, alpha, n)
    omega = np.ones(m_count)
    prev_residual = math.inf
    residual = math.inf
    for it in range(max_iter):
        nxt = fixed_point_map(omega)
        residual = float(np.max(np.abs(nxt - omega)))
        if residual <= tol:
            return OmegaSolution(omegas=omega, residual=residual, iterations=it)
        if residual > prev_residual:
            omega = 0.5 * (omega + nxt)
        else:
            omega = nxt
        prev_residual = residual
    raise ConvergenceError(
        f"omega fixed point did not reach tol={tol:g} within {max_iter} "
        f"iterations (residual {residual:.3e})",
        last_iterate=omega, residual=residual)


def power_budget_used(p, omegas, n_antennas):
    """Budget usage (1/N) sum_m p_m / Omega_m for allocated powers p."""
    om = omegas.omegas if isinstance(omegas, OmegaSolution) else np.asarray(omegas)
    p = np.asarray(p, dtype=float)
    return float(np.sum(p / om) / n_antennas)


def deterministic_rate(p, tau):
    """Large-N spectral efficiency log2(1 + p*(1 - tau^2)) in bits/s/Hz."""
    return math.log2(1.0 + p * (1.0 - tau * tau))


def _sqrt_psd(mat):
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def ergodic_rate_mc(params, p, trials, seed, block=256):
    """Monte Carlo estimate of the per-UE ergodic downlink rate.

    Draws channels h_m = sqrt(N) Theta_m^(1/2) h_tilde with h_tilde entries
    i.i.d. complex Gaussian of variance 1/N, forms CSI estimates
    hhat = sqrt(1-tau^2) h + tau sqrt(N) Theta^(1/2) z, applies the RZF
    precoder V = (Hhat Hhat^H + N*alpha*I)^-1 Hhat, and averages
    log2(1 + p_m |h_m^H v_m|^2 / (1 + sum_{k != m} p_k |h_m^H v_k|^2))
    over ``trials`` independent draws (noise normalized to 1).

    Deterministic for a fixed seed. Dense linear algebra: validation use
    only, sized for N <= 128.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    params.validate()
    n = params.n_antennas
    m_count = params.n_ues
    alpha = params.regularization
    taus = params.csi_accuracy
    p = np.asarray(p, dtype=float)
    if params.is_matrix_valued:
        roots = [_sqrt_psd(np.asarray(t, dtype=complex))
                 for t in params.correlation_gains]
    else:
        roots = None
        scale = np.sqrt(params.correlation_gains)

    rng = np.random.default_rng(seed)
    sum_rates = np.zeros(m_count)
    done = 0
    while done < trials:
        b = min(block, trials - done)
        hw = (rng.standard_normal((b, n, m_count))
              + 1j * rng.standard_normal((b, n, m_count))) * np.sqrt(0.5 / n)
        zw = (rng.standard_normal((b, n, m_count))
              + 1j * rng.standard_normal((b, n, m_count))) * np.sqrt(0.5 / n)
        sqrt_n = np.sqrt(n)
        if roots is None:
            h = sqrt_n * scale[None, None, :] * hw
            z = sqrt_n * scale[None, None, :] * zw
        else:
            h = np.empty_like(hw)
            z = np.empty_like(zw)
            for m in range(m_count):
                h[:, :, m] = sqrt_n * hw[:, :, m] @ roots[m].T
                z[:, :, m] = sqrt_n * zw[:, :, m] @ roots[m].T
        hhat = np.sqrt(1.0 - taus ** 2)[None, None, :] * h + taus[None, None, :] * z
        gram = np.einsum("bnm,bkm->bnk", hhat, hhat.conj())
        gram[:, np.arange(n), np.arange(n)] += n * alpha
        v = np.linalg.solve(gram, hhat)
        cross = np.einsum("bnm,bnk->bmk", h.conj(), v)
        gains = np.abs(cross) ** 2
        signal = p[None, :] * gains[:, np.arange(m_count), np.arange(m_count)]
        total = gains @ p
        interference = total - signal
        sinr = signal / (1.0 + interference)
        sum_rates += np.log2(1.0 + sinr).sum(axis=0)
        done += b
    return sum_rates / trials
