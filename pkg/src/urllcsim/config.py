"""Scenario configuration: defaults, file parsing, and unit conversions.

Config files are flat INI key=value sections; every key is addressable by
the dotted name ``section.key`` and can be overridden from the command
line. Rates are configured in Gbps and delays in ms; conversion to the
internal bits-per-slot units happens here and only here.
"""

import configparser
import math
from dataclasses import dataclass, fields

from .errors import ConfigError


def _parse_bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_policies(text):
    names = [t.strip().lower() for t in str(text).split(",") if t.strip()]
    valid = ("proposed", "baseline1", "baseline2", "wsrm")
    for name in names:
        if name not in valid:
            raise ValueError(f"unknown policy {name!r} (choose from {valid})")
    return names


def _parse_traces(text):
    v = str(text).strip().lower()
    if v not in ("auto", "always", "never"):
        raise ValueError("traces must be auto, always, or never")
    return v


# key -> (default, parser). Defaults follow the evaluation scenario: a
# 32-antenna MBS at 38 dBm in a 0.5 km square, 1 GHz bandwidth, 0.1 ms
# slots, 16 UEs/km^2, 10 ms delay bound at 5% violation tolerance, and
# rate bounds 0.8/1.2 of the mean arrival rate.
DEFAULTS = {
    "scenario.n_antennas": (32, int),
    "scenario.power_dbm": (38.0, float),
    "scenario.area_km": (0.5, float),
    "scenario.ue_density_per_km2": (16.0, float),
    "scenario.ue_count": (0, int),  # 0 = derive from density * area
    "scenario.min_distance_m": (35.0, float),
    "scenario.bandwidth_hz": (1e9, float),
    "scenario.slot_ms": (0.1, float),
    "scenario.alpha": (0.01, float),
    "scenario.horizon_slots": (1000, int),
    "scenario.realizations": (500, int),
    "scenario.seed": (1, int),
    "scenario.warmup_frac": (0.1, float),
    "ue.arrival_gbps": (2.0, float),
    "ue.delay_bound_ms": (10.0, float),
    "ue.reliability_eps": (0.05, float),
    "ue.rate_max_factor": (1.2, float),
    "ue.rate_min_factor": (0.8, float),
    "ue.csi_accuracy": (0.1, float),
    "ue.arrival_cap_factor": (4.0, float),
    "ue.packet_bits": (1e4, float),
    "ue.weight": (1.0, float),
    "pathloss.intercept_db": (61.4, float),
    "pathloss.exponent": (2.0, float),
    "pathloss.noise_figure_db": (9.0, float),
    "solver.omega_tol": (1e-10, float),
    "solver.omega_max_iter": (2000, int),
    "solver.ccp_tol": (1e-6, float),
    "solver.ccp_max_iter": (100, int),
    "solver.nu_max_factor": (2.0, float),
    "solver.gs_rel_tol": (1e-10, float),
    "solver.gs_max_iter": (200, int),
    "solver.wf_tol": (1e-9, float),
    "solver.wf_max_iter": (200, int),
    "policy.list": ("proposed,baseline1,baseline2,wsrm", str),
    "policy.static_v": (100.0, float),
    "output.traces": ("auto", _parse_traces),
    "output.trace_row_limit": (200000, int),
    "output.ccdf_max_factor": (4.0, float),
    "output.ccdf_points": (161, int),
}


@dataclass
class ScenarioConfig:
    """Fully resolved run configuration (raw config units, not internal)."""

    n_antennas: int = 32
    power_dbm: float = 38.0
    area_km: float = 0.5
    ue_density_per_km2: float = 16.0
    ue_count: int = 0
    min_distance_m: float = 35.0
    bandwidth_hz: float = 1e9
    slot_ms: float = 0.1
    alpha: float = 0.01
    horizon_slots: int = 1000
    realizations: int = 500
    seed: int = 1
    warmup_frac: float = 0.1
    arrival_gbps: float = 2.0
    delay_bound_ms: float = 10.0
    reliability_eps: float = 0.05
    rate_max_factor: float = 1.2
    rate_min_factor: float = 0.8
    csi_accuracy: float = 0.1
    arrival_cap_factor: float = 4.0
    packet_bits: float = 1e4
    weight: float = 1.0
    pathloss_intercept_db: float = 61.4
    pathloss_exponent: float = 2.0
    noise_figure_db: float = 9.0
    omega_tol: float = 1e-10
    omega_max_iter: int = 2000
    ccp_tol: float = 1e-6
    ccp_max_iter: int = 100
    nu_max_factor: float = 2.0
    gs_rel_tol: float = 1e-10
    gs_max_iter: int = 200
    wf_tol: float = 1e-9
    wf_max_iter: int = 200
    policy_list: str = "proposed,baseline1,baseline2,wsrm"
    static_v: float = 100.0
    traces: str = "auto"
    trace_row_limit: int = 200000
    ccdf_max_factor: float = 4.0
    ccdf_points: int = 161

    # --- derived quantities (internal units) ---

    @property
    def slot_s(self):
        return self.slot_ms * 1e-3

    @property
    def rate_scale(self):
        """Bits per slot per unit spectral efficiency."""
        return self.bandwidth_hz * self.slot_s

    @property
    def power_w(self):
        return 10.0 ** ((self.power_dbm - 30.0) / 10.0)

    @property
    def noise_power_w(self):
        dbm = -174.0 + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db
        return 10.0 ** ((dbm - 30.0) / 10.0)

    @property
    def n_ues(self):
        if self.ue_count > 0:
            return self.ue_count
        return max(1, round(self.ue_density_per_km2 * self.area_km ** 2))

    @property
    def lam_bits(self):
        """Mean arrival rate in bits per slot."""
        return self.arrival_gbps * 1e9 * self.slot_s

    @property
    def dth_slots(self):
        return self.delay_bound_ms / self.slot_ms

    @property
    def policies(self):
        return _parse_policies(self.policy_list)

    def validate(self):
        if self.n_ues > self.n_antennas:
            raise ConfigError(
                f"UE count {self.n_ues} exceeds antenna count "
                f"{self.n_antennas}; the large-system model needs N >= M")
        if self.horizon_slots < 0 or self.realizations < 1:
            raise ConfigError("need horizon_slots >= 0 and realizations >= 1")
        if not 0.0 <= self.warmup_frac < 1.0:
            raise ConfigError("warmup_frac must lie in [0, 1)")
        if self.min_distance_m <= 0.0 or self.min_distance_m >= \
                self.area_km * 1000.0 / math.sqrt(2.0):
            raise ConfigError("min distance must fit inside the cell area")
        if self.dth_slots < 1.0:
            raise ConfigError("delay bound must be at least one slot")
        if not self.policies:
            raise ConfigError("policy list is empty")
        if self.arrival_gbps < 0.0:
            raise ConfigError("arrival rate must be non-negative")
        return self


_FIELD_BY_KEY = {
    "scenario.n_antennas": "n_antennas",
    "scenario.power_dbm": "power_dbm",
    "scenario.area_km": "area_km",
    "scenario.ue_density_per_km2": "ue_density_per_km2",
    "scenario.ue_count": "ue_count",
    "scenario.min_distance_m": "min_distance_m",
    "scenario.bandwidth_hz": "bandwidth_hz",
    "scenario.slot_ms": "slot_ms",
    "scenario.alpha": "alpha",
    "scenario.horizon_slots": "horizon_slots",
    "scenario.realizations": "realizations",
    "scenario.seed": "seed",
    "scenario.warmup_frac": "warmup_frac",
    "ue.arrival_gbps": "arrival_gbps",
    "ue.delay_bound_ms": "delay_bound_ms",
    "ue.reliability_eps": "reliability_eps",
    "ue.rate_max_factor": "rate_max_factor",
    "ue.rate_min_factor": "rate_min_factor",
    "ue.csi_accuracy": "csi_accuracy",
    "ue.arrival_cap_factor": "arrival_cap_factor",
    "ue.packet_bits": "packet_bits",
    "ue.weight": "weight",
    "pathloss.intercept_db": "pathloss_intercept_db",
    "pathloss.exponent": "pathloss_exponent",
    "pathloss.noise_figure_db": "noise_figure_db",
    "solver.omega_tol": "omega_tol",
    "solver.omega_max_iter": "omega_max_iter",
    "solver.ccp_tol": "ccp_tol",
    "solver.ccp_max_iter": "ccp_max_iter",
    "solver.nu_max_factor": "nu_max_factor",
    "solver.gs_rel_tol": "gs_rel_tol",
    "solver.gs_max_iter": "gs_max_iter",
    "solver.wf_tol": "wf_tol",
    "solver.wf_max_iter": "wf_max_iter",
    "policy.list": "policy_list",
    "policy.static_v": "static_v",
    "output.traces": "traces",
    "output.trace_row_limit": "trace_row_limit",
    "output.ccdf_max_factor": "ccdf_max_factor",
    "output.ccdf_points": "ccdf_points",
}

_KEY_BY_FIELD = {v: k for k, v in _FIELD_BY_KEY.items()}


def read_config_file(path):
    """Parse an INI config file into a dotted-key string dict."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            out[f"{section}.{key}"] = value
    return out


def resolve_config(file_values=None, overrides=None):
    """Build a validated ScenarioConfig from defaults, file, and overrides."""
    resolved = {key: default for key, (default, _) in DEFAULTS.items()}
    for source in (file_values or {}, overrides or {}):
        for key, raw in source.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key: {key!r}")
            _, parse = DEFAULTS[key]
            try:
                resolved[key] = parse(raw) if isinstance(raw, str) else raw
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
    kwargs = {_FIELD_BY_KEY[key]: value for key, value in resolved.items()}
    return ScenarioConfig(**kwargs).validate()


def config_echo(cfg):
    """Flat dotted-key dict of the resolved configuration (JSON-friendly)."""
    out = {}
    for f in fields(cfg):
        out[_KEY_BY_FIELD[f.name]] = getattr(cfg, f.name)
    return dict(sorted(out.items()))
