"""Kernel backend selection: compiled Cython core with pure-Python fallback.

The compiled extension is preferred when importable. ``URLLCSIM_BACKEND=pure``
forces the fallback (useful for benchmarking and cross-checking); both
backends implement identical arithmetic and produce bit-identical traces.
"""

import os

from . import _pure as pure

try:
    from . import _core as core
except ImportError:
    core = None

_requested = os.environ.get("URLLCSIM_BACKEND", "auto").strip().lower()
if _requested == "pure":
    active = pure
elif _requested in ("auto", ""):
    active = core if core is not None else pure
elif _requested == "core":
    if core is None:
        raise ImportError(
            "URLLCSIM_BACKEND=core but the compiled extension is not "
            "available; reinstall with a C compiler or unset the variable"
        )
    active = core
else:
    raise ImportError(f"unknown URLLCSIM_BACKEND value: {_requested!r}")

POLICY_PROPOSED = pure.POLICY_PROPOSED
POLICY_BASELINE1 = pure.POLICY_BASELINE1
POLICY_BASELINE2 = pure.POLICY_BASELINE2
POLICY_WSRM = pure.POLICY_WSRM


def backend_name():
    """Name of the active kernel backend: 'core' or 'pure'."""
    return active.BACKEND_NAME


def get_backend(name=None):
    """Resolve a backend module by name (None/'auto', 'core', 'pure')."""
    if name is None or name == "auto":
        return active
    if name == "pure":
        return pure
    if name == "core":
        if core is None:
            raise ValueError("compiled kernel backend is not available")
        return core
    raise ValueError(f"unknown backend name: {name!r}")
