"""Scenario generation, seeded Monte Carlo execution, and metrics.

Each realization draws UE positions and a Poisson arrival sequence from
per-realization seeds spawned off the master seed, so results are
independent of execution order and worker count. Arrivals and placements
are shared across policies within a realization (common random numbers).
"""

import csv
import multiprocessing
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .channel import ChannelParams, PathLossConfig, pathloss_gain, solve_omega
from .config import ScenarioConfig, config_echo
from .errors import SimulationError
from .policies import ChannelState, PolicyConfig, PolicyKind
from .traffic import UeProfile

_KIND_CODE = {
    PolicyKind.PROPOSED: _kernels.POLICY_PROPOSED,
    PolicyKind.BASELINE1: _kernels.POLICY_BASELINE1,
    PolicyKind.BASELINE2: _kernels.POLICY_BASELINE2,
    PolicyKind.WSRM: _kernels.POLICY_WSRM,
}

TRACE_CSV_COLUMNS = ("slot", "ue", "arrival_bits", "rate_bits", "queue_bits",
                     "vqueue", "aux", "nu", "power", "delay_slots",
                     "infeasible")


@dataclass
class Scenario:
    """One realization's physical layout and solved channel state."""

    config: ScenarioConfig
    distances: np.ndarray
    gains: np.ndarray
    channel: ChannelState
    profiles: list

    @property
    def n_ues(self):
        return len(self.profiles)

    def kernel_args(self):
        prof = self.profiles
        return dict(
            lam=np.array([p.mean_arrival for p in prof]),
            dth_eps=np.array([p.mean_arrival * p.delay_bound *
                              p.reliability_eps for p in prof]),
            rmin=np.array([p.rate_min for p in prof]),
            rmax=np.array([p.rate_max for p in prof]),
            amax=np.array([p.arrival_cap for p in prof]),
            pie=np.array([1.0 / p.rate_min for p in prof]),
            weight=np.array([p.weight for p in prof]),
            c=self.channel.gains,
            w=self.channel.budget_weights,
            budget=self.channel.params.power_budget,
            rate_scale=self.channel.rate_scale,
        )


@dataclass
class Trace:
    """Per-slot per-UE record of one (policy, realization) run."""

    policy: str
    realization: int
    arrivals: np.ndarray
    queue: np.ndarray
    vqueue: np.ndarray
    aux: np.ndarray
    nu: np.ndarray
    power: np.ndarray
    rate_bits: np.ndarray
    served: np.ndarray
    infeasible: np.ndarray
    budget_used: np.ndarray
    q_final: np.ndarray
    y_final: np.ndarray
    lam: np.ndarray
    dth_slots: float
    slot_ms: float

    @property
    def n_slots(self):
        return self.queue.shape[0]

    def delay_slots(self):
        lam = np.where(self.lam > 0.0, self.lam, 1.0)
        return np.where(self.lam[None, :] > 0.0,
                        self.queue / lam[None, :], 0.0)


def _spawn_seed(master_seed, realization):
    return np.random.SeedSequence(master_seed, spawn_key=(realization,))


def generate_scenario(cfg, realization_seed):
    """Draw UE positions, solve the channel fixed point, build profiles.

    ``realization_seed`` is an int or SeedSequence; the same seed always
    yields the same placement. Positions are uniform over the square cell,
    rejecting draws closer than the minimum distance to the centered MBS.
    """
    rng = np.random.default_rng(realization_seed)
    m_count = cfg.n_ues
    half = cfg.area_km * 1000.0 / 2.0
    xs = np.empty(m_count)
    ys = np.empty(m_count)
    for m in range(m_count):
        while True:
            x = rng.uniform(-half, half)
            y = rng.uniform(-half, half)
            if x * x + y * y >= cfg.min_distance_m ** 2:
                xs[m] = x
                ys[m] = y
                break
    distances = np.hypot(xs, ys)
    model = PathLossConfig(intercept_db=cfg.pathloss_intercept_db,
                           exponent=cfg.pathloss_exponent)
    gains = np.array([pathloss_gain(d, model) for d in distances])
    gains = gains / cfg.noise_power_w
    params = ChannelParams(
        n_antennas=cfg.n_antennas,
        regularization=cfg.alpha,
        correlation_gains=gains,
        csi_accuracy=np.full(m_count, cfg.csi_accuracy),
        power_budget=cfg.power_w)
    omegas = solve_omega(params, tol=cfg.omega_tol,
                         max_iter=cfg.omega_max_iter)
    channel = ChannelState(params=params, omegas=omegas,
                           rate_scale=cfg.rate_scale)
    lam = cfg.lam_bits
    profiles = [
        UeProfile(
            mean_arrival=lam,
            arrival_cap=cfg.arrival_cap_factor * lam if lam > 0.0 else 1.0,
            delay_bound=cfg.dth_slots,
            reliability_eps=cfg.reliability_eps,
            rate_min=cfg.rate_min_factor * lam if lam > 0.0 else 1.0,
            rate_max=cfg.rate_max_factor * lam if lam > 0.0 else 1.0,
            weight=cfg.weight,
            csi_accuracy=cfg.csi_accuracy,
            distance=float(d))
        for d in distances
    ]
    return Scenario(config=cfg, distances=distances, gains=gains,
                    channel=channel, profiles=profiles)


def generate_arrivals(cfg, m_count, arrival_seed):
    """(T, M) matrix of Poisson packet arrivals in bits, capped per slot."""
    rng = np.random.default_rng(arrival_seed)
    lam = cfg.lam_bits
    t = cfg.horizon_slots
    if lam <= 0.0:
        return np.zeros((t, m_count))
    packets = rng.poisson(lam / cfg.packet_bits, size=(t, m_count))
    bits = cfg.packet_bits * packets
    return np.minimum(bits, cfg.arrival_cap_factor * lam)


def policy_config_from(cfg, kind):
    return PolicyConfig(
        kind=kind, static_v=cfg.static_v, ccp_tol=cfg.ccp_tol,
        ccp_max_iter=cfg.ccp_max_iter, nu_max_factor=cfg.nu_max_factor,
        gs_rel_tol=cfg.gs_rel_tol, gs_max_iter=cfg.gs_max_iter,
        wf_tol=cfg.wf_tol, wf_max_iter=cfg.wf_max_iter)


def run_realization(scenario, policy_cfg, horizon, arrivals,
                    realization=0, backend=None):
    """Simulate one policy over the horizon and return the full Trace."""
    kern = _kernels.get_backend(backend)
    args = scenario.kernel_args()
    cfg = scenario.config
    arrivals = np.asarray(arrivals, dtype=float)
    if arrivals.shape != (horizon, scenario.n_ues):
        raise SimulationError(
            f"arrival matrix shape {arrivals.shape} does not match "
            f"(horizon, n_ues)=({horizon}, {scenario.n_ues})")
    try:
        out = kern.simulate_policy(
            _KIND_CODE[policy_cfg.kind], policy_cfg.static_v, arrivals,
            args["lam"], args["dth_eps"], args["rmin"], args["rmax"],
            args["amax"], args["pie"], args["weight"], args["c"], args["w"],
            args["budget"], args["rate_scale"], policy_cfg.ccp_tol,
            policy_cfg.ccp_max_iter, policy_cfg.nu_max_factor,
            policy_cfg.gs_rel_tol, policy_cfg.gs_max_iter, policy_cfg.wf_tol,
            policy_cfg.wf_max_iter)
    except (ArithmeticError, RuntimeError) as exc:
        raise SimulationError(
            f"solver failure in policy {policy_cfg.kind.value}, "
            f"realization {realization}: {exc}") from exc
    return Trace(
        policy=policy_cfg.kind.value, realization=realization,
        arrivals=arrivals, lam=args["lam"], dth_slots=cfg.dth_slots,
        slot_ms=cfg.slot_ms, **out)


@dataclass
class RealizationSummary:
    """Post-warmup reductions of one trace, enough for all aggregates."""

    policy: str
    realization: int
    n_slots: int
    n_ues: int
    avg_delay_ms: float
    viol_per_ue: np.ndarray
    exceed_dth: float
    ccdf_counts: np.ndarray
    ccdf_samples: int
    mean_q_first: np.ndarray
    mean_q_second: np.ndarray
    avgut_served_per_ue: np.ndarray
    avgut_granted_per_ue: np.ndarray
    infeas_rate: float
    budget_max: float


def ccdf_thresholds(cfg):
    hi = cfg.delay_bound_ms * cfg.ccdf_max_factor
    return np.linspace(0.0, hi, cfg.ccdf_points)


def summarize_trace(trace, cfg):
    """Reduce one trace to the per-realization statistics."""
    t_total = trace.n_slots
    warm = int(round(cfg.warmup_frac * t_total))
    if warm >= t_total:
        warm = max(t_total - 1, 0)
    delay = trace.delay_slots()[warm:]
    delay_ms = delay * cfg.slot_ms
    thresholds = ccdf_thresholds(cfg)
    pooled = delay_ms.ravel()
    counts = (pooled[None, :] > thresholds[:, None]).sum(axis=1)
    queue = trace.queue[warm:]
    half = queue.shape[0] // 2
    span = max(t_total - warm, 1)
    slot_s = cfg.slot_ms * 1e-3
    return RealizationSummary(
        policy=trace.policy,
        realization=trace.realization,
        n_slots=t_total,
        n_ues=trace.queue.shape[1],
        avg_delay_ms=float(delay_ms.mean()) if delay_ms.size else 0.0,
        viol_per_ue=(delay >= trace.dth_slots).mean(axis=0)
        if delay.size else np.zeros(trace.queue.shape[1]),
        exceed_dth=float((pooled > cfg.delay_bound_ms).mean())
        if pooled.size else 0.0,
        ccdf_counts=counts.astype(np.int64),
        ccdf_samples=int(pooled.size),
        mean_q_first=queue[:half].mean(axis=0)
        if half > 0 else np.zeros(trace.queue.shape[1]),
        mean_q_second=queue[half:].mean(axis=0)
        if queue.shape[0] - half > 0 else np.zeros(trace.queue.shape[1]),
        avgut_served_per_ue=trace.served[warm:].mean(axis=0) / slot_s
        if t_total - warm > 0 else np.zeros(trace.queue.shape[1]),
        avgut_granted_per_ue=trace.rate_bits[warm:].mean(axis=0) / slot_s
        if t_total - warm > 0 else np.zeros(trace.queue.shape[1]),
        infeas_rate=float(trace.infeasible[warm:].mean())
        if t_total - warm > 0 else 0.0,
        budget_max=float(trace.budget_used.max())
        if trace.budget_used.size else 0.0,
    )


def _mean_ci95(values):
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if values.size < 2:
        return mean, mean, mean
    half = 1.96 * float(values.std(ddof=1)) / float(np.sqrt(values.size))
    return mean, mean - half, mean + half


@dataclass
class PolicyMetrics:
    """Aggregate metrics for one policy over all realizations."""

    policy: str
    realizations: int
    avg_latency_ms: float
    avg_latency_ci95: tuple
    avg_user_throughput_bps: float
    avg_user_throughput_ci95: tuple
    avg_granted_throughput_bps: float
    reliability_violation_per_ue: np.ndarray
    infeasibility_rate: float
    ccdf_prob: np.ndarray
    mean_queue_first_half: np.ndarray
    mean_queue_second_half: np.ndarray
    per_realization_delay_ms: np.ndarray
    per_realization_exceed_dth: np.ndarray
    per_realization_throughput_bps: np.ndarray
    budget_max: float


@dataclass
class MetricsAggregate:
    """All policies' aggregates plus the shared CCDF threshold grid."""

    thresholds_ms: np.ndarray
    policies: dict = field(default_factory=dict)

    def to_json_doc(self, cfg, extra=None):
        doc = {
            "config": config_echo(cfg),
            "ccdf_thresholds_ms": [float(x) for x in self.thresholds_ms],
            "policies": {},
            "seed_scheme": "numpy SeedSequence(master, spawn_key=(k,)), "
                           "children 0/1 = placement/arrivals",
        }
        if extra:
            doc.update(extra)
        for name, pm in sorted(self.policies.items()):
            doc["policies"][name] = {
                "realizations": pm.realizations,
                "avg_latency_ms": pm.avg_latency_ms,
                "avg_latency_ci95": list(pm.avg_latency_ci95),
                "avg_user_throughput_bps": pm.avg_user_throughput_bps,
                "avg_user_throughput_ci95": list(pm.avg_user_throughput_ci95),
                "avg_granted_throughput_bps": pm.avg_granted_throughput_bps,
                "reliability_violation_per_ue":
                    [float(x) for x in pm.reliability_violation_per_ue],
                "reliability_violation_max":
                    float(np.max(pm.reliability_violation_per_ue)),
                "infeasibility_rate": pm.infeasibility_rate,
                "latency_ccdf": [float(x) for x in pm.ccdf_prob],
                "mean_queue_bits_first_half":
                    [float(x) for x in pm.mean_queue_first_half],
                "mean_queue_bits_second_half":
                    [float(x) for x in pm.mean_queue_second_half],
            }
        return doc


def aggregate_summaries(summaries, cfg):
    """Fold per-realization summaries into a MetricsAggregate."""
    if not summaries:
        raise SimulationError("no summaries to aggregate")
    shapes = {(s.n_slots, s.n_ues) for s in summaries}
    if len(shapes) != 1:
        raise SimulationError(f"mixed trace shapes in aggregation: {shapes}")
    agg = MetricsAggregate(thresholds_ms=ccdf_thresholds(cfg))
    by_policy = {}
    for s in summaries:
        by_policy.setdefault(s.policy, []).append(s)
    for policy, items in by_policy.items():
        items = sorted(items, key=lambda s: s.realization)
        delays = np.array([s.avg_delay_ms for s in items])
        served = np.array([s.avgut_served_per_ue.mean() for s in items])
        granted = np.array([s.avgut_granted_per_ue.mean() for s in items])
        exceed = np.array([s.exceed_dth for s in items])
        lat_mean, lat_lo, lat_hi = _mean_ci95(delays)
        thr_mean, thr_lo, thr_hi = _mean_ci95(served)
        counts = np.sum([s.ccdf_counts for s in items], axis=0)
        samples = sum(s.ccdf_samples for s in items)
        agg.policies[policy] = PolicyMetrics(
            policy=policy,
            realizations=len(items),
            avg_latency_ms=lat_mean,
            avg_latency_ci95=(lat_lo, lat_hi),
            avg_user_throughput_bps=thr_mean,
            avg_user_throughput_ci95=(thr_lo, thr_hi),
            avg_granted_throughput_bps=float(granted.mean()),
            reliability_violation_per_ue=np.mean(
                [s.viol_per_ue for s in items], axis=0),
            infeasibility_rate=float(
                np.mean([s.infeas_rate for s in items])),
            ccdf_prob=counts / samples if samples else counts.astype(float),
            mean_queue_first_half=np.mean(
                [s.mean_q_first for s in items], axis=0),
            mean_queue_second_half=np.mean(
                [s.mean_q_second for s in items], axis=0),
            per_realization_delay_ms=delays,
            per_realization_exceed_dth=exceed,
            per_realization_throughput_bps=served,
            budget_max=float(max(s.budget_max for s in items)),
        )
    return agg


def aggregate(traces, cfg):
    """Aggregate full traces (realizations x policies) into metrics."""
    return aggregate_summaries([summarize_trace(t, cfg) for t in traces], cfg)


def write_trace_csv(trace, path):
    """One CSV per (policy, realization); columns fixed by the interface."""
    delay = trace.delay_slots()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_COLUMNS)
        t_total, m_count = trace.queue.shape
        for t in range(t_total):
            for m in range(m_count):
                writer.writerow((
                    t, m,
                    repr(float(trace.arrivals[t, m])),
                    repr(float(trace.rate_bits[t, m])),
                    repr(float(trace.queue[t, m])),
                    repr(float(trace.vqueue[t, m])),
                    repr(float(trace.aux[t, m])),
                    repr(float(trace.nu[t, m])),
                    repr(float(trace.power[t, m])),
                    repr(float(delay[t, m])),
                    int(trace.infeasible[t, m]),
                ))


def _traces_enabled(cfg, n_policies):
    if cfg.traces == "always":
        return True
    if cfg.traces == "never":
        return False
    rows = cfg.horizon_slots * cfg.n_ues * cfg.realizations * n_policies
    return rows <= cfg.trace_row_limit


def _run_one_realization(cfg, k, policy_names, trace_dir, backend):
    seed = _spawn_seed(cfg.seed, k)
    placement_ss, arrival_ss = seed.spawn(2)
    scenario = generate_scenario(cfg, placement_ss)
    arrivals = generate_arrivals(cfg, scenario.n_ues, arrival_ss)
    summaries = []
    for name in policy_names:
        pcfg = policy_config_from(cfg, PolicyKind.parse(name))
        trace = run_realization(scenario, pcfg, cfg.horizon_slots, arrivals,
                                realization=k, backend=backend)
        summaries.append(summarize_trace(trace, cfg))
        if trace_dir is not None:
            write_trace_csv(
                trace, os.path.join(trace_dir, f"{name}_r{k:04d}.csv"))
    return k, summaries


def _worker(args):
    return _run_one_realization(*args)


def run_experiment(cfg, policies=None, jobs=1, out_dir=None, backend=None):
    """Run all (policy, realization) cells and aggregate the metrics.

    Realizations are independent work units; with ``jobs > 1`` they run in
    a process pool. The fold is keyed by realization index, so the
    aggregate is identical for any worker count.
    """
    cfg.validate()
    policy_names = list(policies) if policies is not None else cfg.policies
    trace_dir = None
    if out_dir is not None and _traces_enabled(cfg, len(policy_names)):
        trace_dir = os.path.join(out_dir, "traces")
        os.makedirs(trace_dir, exist_ok=True)
    tasks = [(cfg, k, policy_names, trace_dir, backend)
             for k in range(cfg.realizations)]
    if jobs > 1 and len(tasks) > 1:
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(processes=jobs) as pool:
            results = pool.map(_worker, tasks, chunksize=1)
    else:
        results = [_worker(t) for t in tasks]
    results.sort(key=lambda item: item[0])
    summaries = [s for _, batch in results for s in batch]
    return aggregate_summaries(summaries, cfg)
