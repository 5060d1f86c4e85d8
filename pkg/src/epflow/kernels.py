"""Backend dispatch for the separated-set kernel.

The compiled extension is preferred when it imported cleanly; the NumPy
fallback is always available and produces identical results. Set
``EPFLOW_SEP_BACKEND=numpy`` (or ``compiled``) to force a choice; the
default ``auto`` takes the extension when present.
"""

from __future__ import annotations

import os

import numpy as np

from . import _sepkernel_np
from .errors import DomainError

try:
    from . import _sepkernel as _compiled
except ImportError:
    _compiled = None

_FORCED = os.environ.get("EPFLOW_SEP_BACKEND", "auto").strip().lower()
if _FORCED not in ("auto", "numpy", "compiled"):
    raise DomainError(
        f"EPFLOW_SEP_BACKEND={_FORCED!r}: expected auto, numpy, or compiled"
    )
if _FORCED == "compiled" and _compiled is None:
    raise ImportError(
        "EPFLOW_SEP_BACKEND=compiled but the extension failed to import"
    )

BACKEND = (
    "numpy"
    if _FORCED == "numpy" or _compiled is None
    else "compiled"
)

pair_d2 = _sepkernel_np.pair_d2
orbit_d2 = _sepkernel_np.orbit_d2


def available_backends() -> tuple:
    return ("numpy", "compiled") if _compiled is not None else ("numpy",)


def greedy_separated(samples, lifted=None, periods=None, eps=0.1, backend=None):
    """Greedy maximal family of sampled orbits at pairwise distance > eps.

    ``samples``: (n, T, d) float array, n orbits sampled at T times.
    ``lifted``: optional (n, T, d) alternative representatives across a
    gluing seam; pointwise distances take the best of the four pairings.
    ``periods``: per-coordinate wrap lengths, 0 for plain coordinates
    (default: all plain). ``backend``: override the module default.

    Returns kept indices (int64, in scan order). The kept count is the
    separated-set cardinality used by the entropy estimators.
    """
    arr = np.ascontiguousarray(samples, dtype=np.float64)
    if arr.ndim != 3:
        raise DomainError(
            f"greedy_separated: samples must be (n, T, d), got shape {arr.shape}"
        )
    n, T, d = arr.shape
    if periods is None:
        per = np.zeros(d)
    else:
        per = np.ascontiguousarray(periods, dtype=np.float64)
        if per.shape != (d,):
            raise DomainError(
                f"greedy_separated: periods shape {per.shape} does not match d={d}"
            )
    if np.any(per < 0.0):
        raise DomainError("greedy_separated: periods must be nonnegative")
    if not eps > 0.0:
        raise DomainError(f"greedy_separated: eps={eps!r} must be positive")
    lif = None
    if lifted is not None:
        lif = np.ascontiguousarray(lifted, dtype=np.float64)
        if lif.shape != arr.shape:
            raise DomainError(
                "greedy_separated: lifted shape "
                f"{lif.shape} does not match samples shape {arr.shape}"
            )
    which = BACKEND if backend is None else backend
    if which == "compiled":
        if _compiled is None:
            raise DomainError("greedy_separated: compiled backend unavailable")
        return _compiled.greedy_separated(arr, lif, per, float(eps))
    if which == "numpy":
        return _sepkernel_np.greedy_separated(arr, lif, per, float(eps))
    raise DomainError(f"greedy_separated: unknown backend {which!r}")
