# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled greedy separated-set selection over sampled orbits.

Arithmetic here is mirrored step for step by the pure NumPy fallback in
``_sepkernel_np``; the two must produce identical index sets on identical
input. Keep the wrap formula, the coordinate summation order, and the
strict comparisons in sync with that module.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef inline double _wrap_d2(const double* x, const double* y,
                            const double* per, Py_ssize_t d) nogil:
    # squared distance with per-coordinate wrap; period 0 means plain
    cdef double acc = 0.0
    cdef double diff, p, dlt
    cdef Py_ssize_t c
    for c in range(d):
        diff = x[c] - y[c]
        p = per[c]
        if p > 0.0:
            dlt = diff - floor(diff / p) * p
            if p - dlt < dlt:
                dlt = p - dlt
        else:
            dlt = diff if diff >= 0.0 else -diff
        acc += dlt * dlt
    return acc


def greedy_separated(cnp.float64_t[:, :, ::1] samples,
                     lifted,
                     cnp.float64_t[::1] periods,
                     double eps):
    """Greedy maximal family of orbits with pairwise sampled distance > eps.

    ``samples`` is (n, T, d): n orbits sampled at T times in d coordinates.
    ``lifted`` is an optional (n, T, d) array of alternative representatives
    for the same points (used across gluing seams); the pointwise distance
    is then the minimum over the four representative pairings. ``periods``
    gives the wrap length per coordinate, 0 for a plain coordinate.

    Orbits are scanned in input order; one is kept when its distance to
    every kept orbit exceeds ``eps``. Distances are compared squared. The
    return value is the kept indices as an int64 array.
    """
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t T = samples.shape[1]
    cdef Py_ssize_t d = samples.shape[2]
    cdef double eps2 = eps * eps
    cdef bint has_lift = lifted is not None
    cdef cnp.float64_t[:, :, ::1] lift
    if has_lift:
        lift = lifted
        if lift.shape[0] != n or lift.shape[1] != T or lift.shape[2] != d:
            raise ValueError("lifted must have the same shape as samples")
    else:
        lift = samples
    cdef cnp.int64_t[::1] kept = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t n_kept = 0
    cdef Py_ssize_t i, j, k, t
    cdef double best, v
    cdef const double* per = &periods[0] if d > 0 else NULL
    cdef bint keep_i, pair_sep

    if d == 0 or n == 0:
        return np.empty(0, dtype=np.int64)
    if periods.shape[0] != d:
        raise ValueError("periods length must match the coordinate count")

    with nogil:
        for i in range(n):
            keep_i = True
            for k in range(n_kept):
                j = kept[k]
                pair_sep = False
                for t in range(T):
                    best = _wrap_d2(&samples[i, t, 0], &samples[j, t, 0], per, d)
                    if has_lift:
                        v = _wrap_d2(&samples[i, t, 0], &lift[j, t, 0], per, d)
                        if v < best:
                            best = v
                        v = _wrap_d2(&lift[i, t, 0], &samples[j, t, 0], per, d)
                        if v < best:
                            best = v
                        v = _wrap_d2(&lift[i, t, 0], &lift[j, t, 0], per, d)
                        if v < best:
                            best = v
                    if best > eps2:
                        pair_sep = True
                        break
                if not pair_sep:
                    keep_i = False
                    break
            if keep_i:
                kept[n_kept] = i
                n_kept += 1

    return np.asarray(kept[:n_kept]).copy()
