"""Per-slot scheduling policies behind one decision interface.

The proposed policy selects control parameters and auxiliary rates by CCP
before the power step; the two baselines fix the control parameter to a
static V (Baseline 1 keeps the latency-derived auxiliary floor, Baseline 2
uses only r_min); the WSRM reference water-fills on the static utility
weights and ignores queues entirely.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import latency, powerctl
from .channel import OmegaSolution


class PolicyKind(enum.Enum):
    PROPOSED = "proposed"
    BASELINE1 = "baseline1"
    BASELINE2 = "baseline2"
    WSRM = "wsrm"

    @classmethod
    def parse(cls, name):
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown policy name: {name!r}") from None


@dataclass
class PolicyConfig:
    """Policy selection plus solver tolerances for the per-slot subproblems."""

    kind: PolicyKind
    static_v: float = 100.0
    ccp_tol: float = 1e-6
    ccp_max_iter: int = 100
    nu_max_factor: float = 2.0
    gs_rel_tol: float = 1e-10
    gs_max_iter: int = 200
    wf_tol: float = 1e-9
    wf_max_iter: int = 200

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = PolicyKind.parse(self.kind)
        if self.kind in (PolicyKind.BASELINE1, PolicyKind.BASELINE2) \
                and self.static_v <= 0.0:
            raise ValueError("baselines need a positive static V")


@dataclass
class ChannelState:
    """Solved physical-layer context shared by all slots of a realization."""

    params: object
    omegas: OmegaSolution
    rate_scale: float  # bits per unit spectral efficiency (bandwidth * slot)

    @property
    def budget_weights(self):
        return 1.0 / (self.params.n_antennas * self.omegas.omegas)

    @property
    def gains(self):
        return 1.0 - self.params.csi_accuracy ** 2


@dataclass
class SlotDecision:
    """One slot's solver output across UEs."""

    control: np.ndarray
    aux: np.ndarray
    power: np.ndarray
    rate_se: np.ndarray
    rate_bits: np.ndarray
    budget_used: float
    infeasible_flags: np.ndarray


def _power_step(priorities, channel, cfg):
    prob = powerctl.PowerProblem(
        priorities=priorities, gains=channel.gains,
        budget_weights=channel.budget_weights,
        budget=channel.params.power_budget)
    p = powerctl.waterfill(prob, tol=cfg.wf_tol, max_iter=cfg.wf_max_iter)
    rate_se = powerctl.rates_from_powers(p, channel.params.csi_accuracy)
    used = float(np.sum(channel.budget_weights * p))
    return p, rate_se, used


def _finish(control, aux, priorities, channel, cfg, infeasible):
    p, rate_se, used = _power_step(priorities, channel, cfg)
    return SlotDecision(
        control=np.asarray(control, dtype=float),
        aux=np.asarray(aux, dtype=float),
        power=p,
        rate_se=rate_se,
        rate_bits=rate_se * channel.rate_scale,
        budget_used=used,
        infeasible_flags=np.asarray(infeasible, dtype=bool))


def decide_proposed(states, profiles, channel, cfg):
    """Dynamic control-parameter policy: floors, CCP per UE, water-filling."""
    m_count = len(profiles)
    control = np.zeros(m_count)
    aux = np.zeros(m_count)
    priorities = np.zeros(m_count)
    infeasible = np.zeros(m_count, dtype=bool)
    for m, (st, prof) in enumerate(zip(states, profiles)):
        t = st.slot + 1
        raw = latency._floor_raw(t, prof.mean_arrival, prof.delay_bound,
                                 prof.reliability_eps, st.aux_cum)
        infeasible[m] = raw > prof.rate_max
        floor = latency.aux_floor(t, prof, st.aux_cum)
        sub = latency.AuxSubproblem(
            virtual_queue=st.virtual_queue,
            aux_floor=floor,
            aux_ceiling=prof.rate_max,
            control_floor=latency.control_floor(st.virtual_queue,
                                                prof.arrival_cap),
            pi=1.0 / prof.rate_min,
            weight=prof.weight)
        res = latency.solve_aux_ccp(sub, tol=cfg.ccp_tol,
                                    max_iter=cfg.ccp_max_iter,
                                    nu_max_factor=cfg.nu_max_factor,
                                    gs_rel_tol=cfg.gs_rel_tol,
                                    gs_max_iter=cfg.gs_max_iter)
        control[m] = res.control
        aux[m] = res.aux
        priorities[m] = st.virtual_queue
    return _finish(control, aux, priorities, channel, cfg, infeasible)


def decide_baseline(states, profiles, channel, cfg):
    """Static-V baselines; the aux subproblem collapses to a 1-D closed form."""
    if cfg.kind not in (PolicyKind.BASELINE1, PolicyKind.BASELINE2):
        raise ValueError("decide_baseline needs a baseline PolicyConfig")
    m_count = len(profiles)
    control = np.full(m_count, cfg.static_v)
    aux = np.zeros(m_count)
    priorities = np.zeros(m_count)
    infeasible = np.zeros(m_count, dtype=bool)
    for m, (st, prof) in enumerate(zip(states, profiles)):
        if cfg.kind is PolicyKind.BASELINE1:
            t = st.slot + 1
            raw = latency._floor_raw(t, prof.mean_arrival, prof.delay_bound,
                                     prof.reliability_eps, st.aux_cum)
            infeasible[m] = raw > prof.rate_max
            floor = latency.aux_floor(t, prof, st.aux_cum)
        else:
            floor = prof.rate_min
        y = st.virtual_queue
        if y > 0.0:
            aux[m] = min(max(cfg.static_v * prof.weight / y, floor),
                         prof.rate_max)
        else:
            aux[m] = prof.rate_max
        priorities[m] = y
    return _finish(control, aux, priorities, channel, cfg, infeasible)


def decide_wsrm(profiles, channel, cfg):
    """Queue-oblivious max-weighted-throughput reference."""
    m_count = len(profiles)
    priorities = np.array([prof.weight for prof in profiles], dtype=float)
    return _finish(np.zeros(m_count), np.zeros(m_count), priorities,
                   channel, cfg, np.zeros(m_count, dtype=bool))


def decide(states, profiles, channel, cfg):
    """Dispatch to the configured policy's per-slot decision."""
    if cfg.kind is PolicyKind.PROPOSED:
        return decide_proposed(states, profiles, channel, cfg)
    if cfg.kind is PolicyKind.WSRM:
        return decide_wsrm(profiles, channel, cfg)
    return decide_baseline(states, profiles, channel, cfg)
