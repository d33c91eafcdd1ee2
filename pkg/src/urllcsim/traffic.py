"""Arrival generation and queue evolution.

Internal units are bits per slot throughout; the delay measure Q/lambda is
in slots and converted to milliseconds only at the metrics layer.
"""

from dataclasses import dataclass


@dataclass
class UeProfile:
    """Static per-UE parameters (rates in bits/slot, delay bound in slots)."""

    mean_arrival: float
    arrival_cap: float
    delay_bound: float
    reliability_eps: float
    rate_min: float
    rate_max: float
    weight: float = 1.0
    csi_accuracy: float = 0.1
    distance: float = 100.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0.0 < self.rate_min <= self.rate_max:
            raise ValueError("need 0 < rate_min <= rate_max")
        if self.mean_arrival > self.arrival_cap:
            raise ValueError("mean arrival exceeds the arrival cap")
        if not 0.0 < self.reliability_eps < 1.0:
            raise ValueError("reliability target must lie in (0, 1)")
        if self.delay_bound < 1.0:
            raise ValueError("delay bound must be at least one slot")
        if self.weight < 0.0:
            raise ValueError("utility weight must be non-negative")


@dataclass
class UeDynamicState:
    """Evolving per-UE state: real/virtual queues and cumulative histories."""

    queue: float = 0.0
    virtual_queue: float = 0.0
    served_cum: float = 0.0
    aux_cum: float = 0.0
    slot: int = 0


def generate_arrival(profile, packet_bits, rng):
    """One slot of Poisson packet arrivals in bits, capped at arrival_cap."""
    if packet_bits <= 0.0:
        raise ValueError("packet size must be positive")
    bits = packet_bits * rng.poisson(profile.mean_arrival / packet_bits)
    return min(float(bits), profile.arrival_cap)


def update_queue(q, served, arrival):
    """Queue recursion Q(t+1) = [Q(t) - r(t)]^+ + a(t)."""
    return max(q - served, 0.0) + arrival


def update_virtual_queue(y, aux, served):
    """Virtual-queue recursion Y(t+1) = [Y(t) + phi(t) - r(t)]^+."""
    return max(y + aux - served, 0.0)


def delay_measure(q, mean_arrival):
    """Little's-law delay measure Q/lambda in slots."""
    if mean_arrival <= 0.0:
        raise ValueError("mean arrival rate must be positive")
    return q / mean_arrival
