"""NumPy fallback for the greedy separated-set kernel.

Mirror of ``_sepkernel.pyx``: same wrap formula, same coordinate
summation order, same strict comparisons, so the two backends select
identical index sets on identical input.
"""

from __future__ import annotations

import numpy as np


def _coord_d2(a, b, periods):
    """Summed squared coordinate differences with per-coordinate wrap.

    ``a`` and ``b`` broadcast to (..., d). Accumulates coordinate by
    coordinate in index order to match the compiled loop exactly.
    """
    diff = a - b
    d = diff.shape[-1]
    acc = None
    for c in range(d):
        p = float(periods[c])
        dc = diff[..., c]
        if p > 0.0:
            delta = dc - np.floor(dc / p) * p
            delta = np.minimum(delta, p - delta)
        else:
            delta = np.abs(dc)
        term = delta * delta
        acc = term if acc is None else acc + term
    return acc


def pair_d2(x, y, periods):
    """Wrapped squared distance between two points (or broadcast arrays)."""
    return _coord_d2(np.asarray(x, dtype=float), np.asarray(y, dtype=float), periods)


def orbit_d2(sa, sb, la, lb, periods):
    """Sampled orbit distance, squared: max over time of the pointwise min.

    ``sa``/``sb`` are (T, d) sample rows; ``la``/``lb`` their lifted
    representatives (may be the same arrays when no seam is involved).
    """
    best = _coord_d2(sa, sb, periods)
    np.minimum(best, _coord_d2(sa, lb, periods), out=best)
    np.minimum(best, _coord_d2(la, sb, periods), out=best)
    np.minimum(best, _coord_d2(la, lb, periods), out=best)
    return float(np.max(best))


def greedy_separated(samples, lifted, periods, eps):
    """Greedy maximal family of orbits with pairwise sampled distance > eps.

    Same contract as the compiled version: ``samples`` (n, T, d),
    optional ``lifted`` (n, T, d), ``periods`` (d,) with 0 for plain
    coordinates, squared-distance comparison against ``eps**2``, kept
    indices returned as int64 in scan order.
    """
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    n, T, d = samples.shape
    per = np.asarray(periods, dtype=np.float64)
    if per.shape != (d,):
        raise ValueError("periods length must match the coordinate count")
    if n == 0 or d == 0:
        return np.empty(0, dtype=np.int64)
    has_lift = lifted is not None
    if has_lift:
        lift = np.ascontiguousarray(lifted, dtype=np.float64)
        if lift.shape != samples.shape:
            raise ValueError("lifted must have the same shape as samples")
    else:
        lift = samples
    eps2 = eps * eps
    kept: list[int] = []
    for i in range(n):
        if kept:
            ks = samples[kept]
            kl = lift[kept]
            best = _coord_d2(samples[i][None, :, :], ks, per)
            if has_lift:
                np.minimum(best, _coord_d2(samples[i][None, :, :], kl, per), out=best)
                np.minimum(best, _coord_d2(lift[i][None, :, :], ks, per), out=best)
                np.minimum(best, _coord_d2(lift[i][None, :, :], kl, per), out=best)
            far = np.max(best, axis=1) > eps2
            if not bool(np.all(far)):
                continue
        kept.append(i)
    return np.asarray(kept, dtype=np.int64)
