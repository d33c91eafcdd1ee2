"""URLLC scheduling simulator for a single-cell mmWave massive-MIMO downlink.

Per slot the scheduler solves a drift-plus-penalty decomposition: rate and
control-parameter floors, a convex-concave iteration for the auxiliary-rate
subproblem, and water-filling power allocation under the deterministic-
equivalent budget; real and virtual queues then evolve and a Monte Carlo
harness aggregates latency, reliability, and throughput metrics.
"""

from ._kernels import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
