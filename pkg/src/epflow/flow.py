"""Vector fields on the disk, their ambient extension, and an integrator.

The integrator is a Dormand-Prince 5(4) pair with PI step control and
first-same-as-last reuse. Dense output is cubic Hermite on each accepted
step, which is what the event refinement bisects against. Fields are
plain callables ``f(t, y) -> dy`` even though every field here is
autonomous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bumps import SmoothFn, make_alpha0, smoothstep_flat, smoothstep_quintic
from .disk import CircleLadder, SCALINGS
from .errors import DomainError
from .kernels import greedy_separated

__all__ = [
    "Trajectory",
    "EventSpec",
    "integrate",
    "DiskField",
    "make_disk_field",
    "speed_profile",
    "AmbientField",
    "make_ambient_field",
    "ambient_flatness",
    "orbit_period",
    "radial_drift",
    "SectionSpec",
    "FirstReturnResult",
    "detect_period",
    "first_return",
    "OccupancyResult",
    "occupation",
    "SeparatedSetEstimate",
    "separated_entropy",
]

# Butcher array of the Dormand-Prince 5(4) pair.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)

_STIFF_FLOOR = 1e-13


@dataclass(frozen=True)
class EventSpec:
    """Scalar crossing detector for the integrator.

    ``fn(t, y)`` is sampled at step ends; a sign change triggers a
    bisection on the dense output. ``direction`` restricts to rising
    (+1), falling (-1), or any (0) crossings; ``terminal`` stops the
    integration at the refined crossing.
    """

    fn: Callable
    direction: int = 0
    terminal: bool = False


class Trajectory:
    """Accepted integration nodes with cubic Hermite dense evaluation."""

    def __init__(self, ts, ys, fs, status, n_steps, n_rejected, events):
        self.ts = np.asarray(ts)
        self.ys = np.asarray(ys)
        self._fs = np.asarray(fs)
        self.status = status  # "done", "left-domain", "stiff", "event", "max-steps"
        self.n_steps = n_steps
        self.n_rejected = n_rejected
        self.events = events  # list of (event_index, t, y)

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.ys[-1]

    def __call__(self, t):
        """Dense state at time(s) t inside the covered span."""
        tq = np.asarray(t, dtype=float)
        scalar = tq.ndim == 0
        tq = np.atleast_1d(tq)
        lo, hi = float(self.ts[0]), float(self.ts[-1])
        if np.any((tq < lo - 1e-12) | (tq > hi + 1e-12)):
            raise DomainError(
                f"trajectory covers [{lo}, {hi}]; asked for "
                f"[{float(tq.min())}, {float(tq.max())}]"
            )
        tq = np.clip(tq, lo, hi)
        idx = np.clip(np.searchsorted(self.ts, tq, side="right") - 1, 0,
                      len(self.ts) - 2)
        t0 = self.ts[idx]
        t1 = self.ts[idx + 1]
        h = t1 - t0
        h = np.where(h == 0.0, 1.0, h)
        th = np.clip((tq - t0) / h, 0.0, 1.0)[:, None]
        y0 = self.ys[idx]
        y1 = self.ys[idx + 1]
        f0 = self._fs[idx]
        f1 = self._fs[idx + 1]
        hh = (t1 - t0)[:, None]
        h00 = 2 * th**3 - 3 * th**2 + 1
        h10 = th**3 - 2 * th**2 + th
        h01 = -2 * th**3 + 3 * th**2
        h11 = th**3 - th**2
        out = h00 * y0 + h10 * hh * f0 + h01 * y1 + h11 * hh * f1
        return out[0] if scalar else out


def _initial_step(f, t0, y0, f0, tol, h_max):
    # Hairer's starting-step heuristic
    sc = tol + tol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / sc) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / sc) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    y1 = y0 + h0 * f0
    f1 = np.asarray(f(t0 + h0, y1), dtype=float)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / sc) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, h_max)


def _bisect_event(dense, g, t_lo, t_hi, tol=1e-12):
    s_lo = g(t_lo, dense(t_lo))
    for _ in range(200):
        t_mid = 0.5 * (t_lo + t_hi)
        if t_hi - t_lo <= tol * max(1.0, abs(t_hi)):
            break
        s_mid = g(t_mid, dense(t_mid))
        if s_mid == 0.0:
            t_lo = t_hi = t_mid
            break
        if (s_lo < 0) == (s_mid < 0):
            t_lo, s_lo = t_mid, s_mid
        else:
            t_hi = t_mid
    t_ev = 0.5 * (t_lo + t_hi)
    return t_ev, dense(t_ev)


def integrate(
    f: Callable,
    y0,
    t_span,
    tol: float = 1e-9,
    h_max: float = math.inf,
    max_steps: int = 2_000_000,
    inside: Optional[Callable] = None,
    events: Optional[Sequence[EventSpec]] = None,
):
    """Integrate dy/dt = f(t, y) over t_span with adaptive steps.

    Error control uses a scaled RMS norm with atol = rtol = tol; the step
    factor is 0.9 * err^-0.2 * err_prev^0.08, clamped to [0.2, 5]. When
    ``inside(y)`` turns false the run stops with status "left-domain" and
    the first outside state kept as the final node. A step size driven
    below 1e-13 * max(1, |t|) stops the run with status "stiff".
    """
    if tol <= 0.0:
        raise DomainError(f"integrate: tol={tol!r} must be positive")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise DomainError(f"integrate: need t1 > t0, got {t_span!r}")
    y = np.asarray(y0, dtype=float).copy()
    if y.ndim != 1:
        raise DomainError("integrate: y0 must be one-dimensional")
    events = list(events or [])

    t = t0
    k1 = np.asarray(f(t, y), dtype=float)
    ts = [t]
    ys = [y.copy()]
    fs = [k1.copy()]
    ev_hits = []
    status = "done"
    n_steps = 0
    n_rejected = 0
    err_prev = 1.0
    h = _initial_step(f, t0, y, k1, tol, h_max)
    ev_vals = [e.fn(t, y) for e in events]

    K = np.empty((7, y.size))
    while t < t1:
        if n_steps + n_rejected >= max_steps:
            status = "max-steps"
            break
        h = min(h, h_max, t1 - t)
        if h < _STIFF_FLOOR * max(1.0, abs(t)):
            status = "stiff"
            break
        K[0] = k1
        for s in range(1, 7):
            ks = y + h * (_A[s] @ K[:s])
            K[s] = f(t + _C[s] * h, ks)
        y5 = y + h * (_B5 @ K)
        y4 = y + h * (_B4 @ K)
        sc = tol + tol * np.maximum(np.abs(y), np.abs(y5))
        err = math.sqrt(float(np.mean(((y5 - y4) / sc) ** 2)))
        if err <= 1.0:
            t_new = t + h
            # FSAL: the last stage is f at the new state. Copy it out of
            # the stage scratch array, which the next step overwrites.
            k_new = K[6].copy()
            ts.append(t_new)
            ys.append(y5.copy())
            fs.append(k_new)
            n_steps += 1

            stop = False
            if events:
                seg = _HermiteSegment(t, t_new, y, y5, k1, k_new)
                new_vals = [e.fn(t_new, y5) for e in events]
                for i, e in enumerate(events):
                    s_old, s_new = ev_vals[i], new_vals[i]
                    crossed = (s_old < 0.0 <= s_new) or (s_old > 0.0 >= s_new)
                    if crossed:
                        rising = s_old < s_new
                        if e.direction == 1 and not rising:
                            continue
                        if e.direction == -1 and rising:
                            continue
                        t_ev, y_ev = _bisect_event(seg, e.fn, t, t_new)
                        ev_hits.append((i, t_ev, y_ev))
                        if e.terminal:
                            ts[-1] = t_ev
                            ys[-1] = y_ev
                            fs[-1] = np.asarray(f(t_ev, y_ev), dtype=float)
                            status = "event"
                            stop = True
                            break
                ev_vals = new_vals
            if stop:
                break

            if inside is not None and not inside(y5):
                status = "left-domain"
                break
            t, y, k1 = t_new, y5, k_new
            fac = 0.9 * err ** -0.2 * err_prev**0.08 if err > 0.0 else 5.0
            h *= min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-10)
        else:
            n_rejected += 1
            h *= min(5.0, max(0.2, 0.9 * err**-0.2))

    return Trajectory(ts, ys, fs, status, n_steps, n_rejected, ev_hits)


class _HermiteSegment:
    """Single-step cubic Hermite used during event refinement."""

    def __init__(self, t0, t1, y0, y1, f0, f1):
        self.t0, self.t1 = t0, t1
        self.y0, self.y1 = y0, y1
        self.f0, self.f1 = f0, f1

    def __call__(self, t):
        hseg = self.t1 - self.t0
        th = (t - self.t0) / hseg if hseg != 0.0 else 0.0
        h00 = 2 * th**3 - 3 * th**2 + 1
        h10 = th**3 - 2 * th**2 + th
        h01 = -2 * th**3 + 3 * th**2
        h11 = th**3 - th**2
        return h00 * self.y0 + h10 * hseg * self.f0 + h01 * self.y1 + h11 * hseg * self.f1


# ---------------------------------------------------------------------------
# Speed profiles and disk fields


def speed_profile(ladder: CircleLadder, scaling: str, r):
    """Per-radius speed multiplier: the strip value inside each strip,
    1 outside, joined by a monotone polynomial ramp over an extra
    one-eighth width margin."""
    if scaling not in SCALINGS:
        raise DomainError(f"speed_profile: unknown scaling {scaling!r}")
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    scalar = np.asarray(r).ndim == 0
    out = np.ones_like(rr)
    if scaling != "unit":
        for s in ladder.strips:
            i = s.index
            v = 1.0 / (i * i) if scaling == "inverse-square" else float(2.0 ** -(2**i))
            a = float(s.center)
            l = float(s.width)
            d = np.abs(rr - a)
            core = d <= l / 4.0
            ramp = (d > l / 4.0) & (d <= 3.0 * l / 8.0)
            out[core] = v
            if np.any(ramp):
                u = (d[ramp] - l / 4.0) / (l / 8.0)
                sblend = np.atleast_1d(np.asarray(smoothstep_quintic(u)))
                out[ramp] = v * (1.0 - sblend) + sblend
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class DiskField:
    """Planar field: rotation plus outward drift that dies on the circles.

    The radial factor vanishes on every ladder circle (each is a closed
    orbit) and on the boundary; the speed profile rescales time inside
    the strips. Outside the closed unit disk the field continues as the
    plain boundary rotation so integration is well posed under roundoff.
    """

    ladder: CircleLadder
    scaling: str
    alpha: SmoothFn = field(repr=False, default=None)

    def __call__(self, t, xy):
        x, y = float(xy[0]), float(xy[1])
        r2 = x * x + y * y
        a = float(self.alpha(min(r2, 1.0)))
        b = speed_profile(self.ladder, self.scaling, math.sqrt(r2))
        return np.array([b * (-y + a * x), b * (x + a * y)])

    def value(self, xy):
        return self(0.0, xy)

    def speed(self, r):
        return speed_profile(self.ladder, self.scaling, r)


def make_disk_field(ladder: CircleLadder, scaling: str = "unit") -> DiskField:
    if scaling not in SCALINGS:
        raise DomainError(f"make_disk_field: unknown scaling {scaling!r}")
    return DiskField(ladder=ladder, scaling=scaling, alpha=make_alpha0(ladder))


# ---------------------------------------------------------------------------
# Ambient extension to R^n


@dataclass(frozen=True)
class AmbientField:
    """The disk field pushed into R^n, supported near the flat disk.

    The scalar q = sum of the squared trailing coordinates plus a cubed
    hinge in the planar radius measures leaving the disk; the planar
    components are damped by exp(-q) and a far-field window, the trailing
    components stay 0. On the disk itself (q = 0, window = 1) the field
    restricts exactly to the planar one.
    """

    ladder: CircleLadder
    scaling: str
    dim: int
    alpha: SmoothFn = field(repr=False, default=None)

    def q(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        hinge = np.maximum(r2 - 1.0, 0.0) ** 3
        tail = np.sum(pts[:, 2:] ** 2, axis=1)
        out = tail + hinge
        return float(out[0]) if np.asarray(x).ndim == 1 else out

    def window(self, x):
        # 1 within norm 2 of the origin, 0 beyond norm 4
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        n = np.sqrt(np.sum(pts * pts, axis=1))
        out = 1.0 - np.atleast_1d(np.asarray(smoothstep_flat((n - 2.0) / 2.0)))
        return float(out[0]) if np.asarray(x).ndim == 1 else out

    def speed_blend(self, x):
        """Profile value ramped back to 1 away from the disk."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2)
        prof = np.atleast_1d(
            np.asarray(speed_profile(self.ladder, self.scaling, r))
        )
        sig = np.atleast_1d(np.asarray(smoothstep_flat(self.q(pts) / 0.25)))
        out = (1.0 - sig) * prof + sig
        return float(out[0]) if np.asarray(x).ndim == 1 else out

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DomainError(
                f"ambient field expects {self.dim} coordinates, got {x.shape}"
            )
        x1, x2 = x[0], x[1]
        r2 = x1 * x1 + x2 * x2
        a = float(self.alpha(min(r2, 1.0)))
        damp = math.exp(-self.q(x)) * self.window(x)
        b = self.speed_blend(x)
        out = np.zeros(self.dim)
        out[0] = b * damp * (-x2 + a * x1)
        out[1] = b * damp * (x1 + a * x2)
        return out

    def value(self, x):
        return self(0.0, x)


def make_ambient_field(
    ladder: CircleLadder, scaling: str = "unit", dim: int = 3
) -> AmbientField:
    if dim < 3:
        raise DomainError(f"make_ambient_field: dim={dim} must be >= 3")
    if scaling not in SCALINGS:
        raise DomainError(f"make_ambient_field: unknown scaling {scaling!r}")
    return AmbientField(
        ladder=ladder, scaling=scaling, dim=dim, alpha=make_alpha0(ladder)
    )


def ambient_flatness(af: AmbientField, planar_xy, h: float = 1e-4) -> float:
    """Largest field-component change when stepping off the disk by h.

    Stepping in a trailing coordinate changes q by h^2, so the field
    components move by O(h^2); the return value is that deviation scaled
    by 1/h^2 (a bounded reading when the extension is flat).
    """
    x = np.zeros(af.dim)
    x[0], x[1] = planar_xy
    base = af.value(x)
    worst = 0.0
    for j in range(2, af.dim):
        xp = x.copy()
        xp[j] = h
        dev = float(np.max(np.abs(af.value(xp) - base)))
        worst = max(worst, dev / (h * h))
    return worst


# ---------------------------------------------------------------------------
# Orbit measurements


def orbit_period(
    fieldlike,
    x0,
    tol: float = 1e-10,
    t_max: float = 1e4,
    h_max: float = 0.05,
) -> tuple:
    """Time of first return to the ray through x0, plus the return gap.

    Works on planar fields whose orbits wind around the origin. The
    crossing detector is the plane spanned against x0 (rising through
    zero on the forward side), armed only after leaving a small cone
    around the start, so the departure itself does not count. Crossing
    refinement runs on the cubic dense output, whose accuracy is set by
    the step size; the default h_max keeps the period reading near 1e-8.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (2,) or float(np.linalg.norm(x0)) == 0.0:
        raise DomainError("orbit_period: x0 must be a nonzero planar point")
    n0 = x0 / np.linalg.norm(x0)

    armed = {"on": False}

    def cross(t, y):
        s = n0[0] * y[1] - n0[1] * y[0]
        fwd = n0[0] * y[0] + n0[1] * y[1]
        if not armed["on"]:
            # arm once the state has rotated clearly off the start ray
            if s < -1e-6 or fwd < 0.0:
                armed["on"] = True
            return -1.0
        return s if fwd > 0.0 else -1.0

    traj = integrate(
        fieldlike,
        x0,
        (0.0, t_max),
        tol=tol,
        h_max=h_max,
        events=[EventSpec(fn=cross, direction=1, terminal=True)],
    )
    if traj.status != "event":
        raise DomainError(
            f"orbit_period: no return within t={t_max} (status {traj.status})"
        )
    t_ret = traj.t_end
    gap = float(np.linalg.norm(traj.y_end - x0))
    return t_ret, gap


def radial_drift(traj: Trajectory) -> float:
    """Largest deviation of the node radius from its starting value."""
    r = np.sqrt(np.sum(traj.ys[:, :2] ** 2, axis=1))
    return float(np.max(np.abs(r - r[0])))


_REST_SPEED = 1e-14


def detect_period(
    fieldlike,
    x0,
    guess: float,
    tol: float = 1e-9,
    h_max: float = 0.05,
):
    """Refined period of the orbit through x0, or None.

    A fixed point reports period 0. Otherwise the orbit runs for
    2 * guess while rising crossings of the hyperplane through x0 normal
    to the local field direction are refined on the dense output. Among
    crossings that bring the state back within tol of x0, the one
    nearest the guess is returned. None when nothing closes up in time.

    tol is the closure acceptance threshold only; the integration runs
    at a fixed tight tolerance, so tightening tol filters candidates
    without changing the measured times.
    """
    x0 = np.asarray(x0, dtype=float)
    if not guess > 0.0:
        raise DomainError(f"detect_period: guess={guess!r} must be positive")
    if not tol > 0.0:
        raise DomainError(f"detect_period: tol={tol!r} must be positive")
    f0 = np.asarray(fieldlike(0.0, x0), dtype=float)
    speed = float(np.linalg.norm(f0))
    if speed <= _REST_SPEED:
        return 0.0
    n0 = f0 / speed

    def cross(t, y):
        return float(np.dot(y - x0, n0))

    traj = integrate(
        fieldlike,
        x0,
        (0.0, 2.0 * guess),
        tol=1e-9,
        h_max=h_max,
        events=[EventSpec(fn=cross, direction=1)],
    )
    t_floor = max(1e-9, 1e-6 * guess)
    best = None
    for _, t_ev, y_ev in traj.events:
        if t_ev <= t_floor:
            continue
        if float(np.linalg.norm(y_ev - x0)) > tol:
            continue
        if best is None or abs(t_ev - guess) < abs(best - guess):
            best = t_ev
    return best


@dataclass(frozen=True)
class SectionSpec:
    """Oriented affine hyperplane {x : normal . x = offset}.

    orientation picks which sign changes of the side value count:
    +1 rising, -1 falling, 0 either way.
    """

    normal: tuple
    offset: float = 0.0
    orientation: int = 0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if n.ndim != 1 or n.size == 0 or not np.all(np.isfinite(n)):
            raise DomainError("SectionSpec: normal must be a finite vector")
        if abs(float(np.linalg.norm(n)) - 1.0) > 1e-9:
            raise DomainError("SectionSpec: normal must have unit length")
        if self.orientation not in (-1, 0, 1):
            raise DomainError("SectionSpec: orientation must be -1, 0, or +1")
        object.__setattr__(self, "normal", tuple(float(v) for v in n))
        object.__setattr__(self, "offset", float(self.offset))

    def side(self, y) -> float:
        n = np.asarray(self.normal)
        return float(np.dot(n, np.asarray(y, dtype=float)) - self.offset)


@dataclass(frozen=True)
class FirstReturnResult:
    """Outcome of a section hit search: status is "hit", "none", or
    "stagnation"; point and tau are filled only on a hit."""

    status: str
    point: Optional[np.ndarray] = None
    tau: Optional[float] = None


def first_return(
    fieldlike,
    x0,
    section: SectionSpec,
    t_max: float,
    tol: float = 1e-9,
    h_max: float = 0.05,
) -> FirstReturnResult:
    """First oriented crossing of the section after time zero.

    The side value is tracked across accepted steps; a sign change is
    refined by bisection on the dense output. Starting on the section
    does not count as a crossing of its own. A field vanishing at x0
    reports "stagnation"; running out of time reports "none".
    """
    x0 = np.asarray(x0, dtype=float)
    if not t_max > 0.0:
        raise DomainError(f"first_return: t_max={t_max!r} must be positive")
    f0 = np.asarray(fieldlike(0.0, x0), dtype=float)
    if float(np.linalg.norm(f0)) <= _REST_SPEED:
        return FirstReturnResult(status="stagnation")

    traj = integrate(
        fieldlike,
        x0,
        (0.0, t_max),
        tol=tol,
        h_max=h_max,
        events=[
            EventSpec(
                fn=lambda t, y: section.side(y),
                direction=section.orientation,
                terminal=True,
            )
        ],
    )
    if traj.status != "event":
        return FirstReturnResult(status="none")
    return FirstReturnResult(status="hit", point=traj.y_end, tau=traj.t_end)


@dataclass(frozen=True)
class OccupancyResult:
    """Occupation time along one orbit: j is the measure of the time set
    spent inside the region over [0, t_total]; lam is the reciprocal-speed
    reweighted total when a speed factor was supplied, else None."""

    t_total: float
    j: float
    lam: Optional[float] = None


def _measure_piece(dense, region, weight, t_lo, t_hi, in_lo, in_hi, depth, floor):
    # Resolve the indicator on [t_lo, t_hi]; returns (inside time, weighted time).
    width = t_hi - t_lo
    if width <= floor or depth >= 60:
        # Unresolved sliver: split the difference when the ends disagree.
        frac = 1.0 if (in_lo and in_hi) else (0.5 if in_lo != in_hi else 0.0)
        j = frac * width
        return j, j * weight(dense(0.5 * (t_lo + t_hi))) + (width - j)
    t_mid = 0.5 * (t_lo + t_hi)
    y_mid = dense(t_mid)
    in_mid = bool(region(y_mid))
    if in_lo == in_mid == in_hi and depth >= 2:
        if not in_lo:
            return 0.0, width
        # Simpson weights across the piece for the reciprocal speed.
        w = (
            weight(dense(t_lo)) + 4.0 * weight(y_mid) + weight(dense(t_hi))
        ) / 6.0
        return width, width * w
    j_l, lam_l = _measure_piece(
        dense, region, weight, t_lo, t_mid, in_lo, in_mid, depth + 1, floor
    )
    j_r, lam_r = _measure_piece(
        dense, region, weight, t_mid, t_hi, in_mid, in_hi, depth + 1, floor
    )
    return j_l + j_r, lam_l + lam_r


def occupation(
    fieldlike,
    x0,
    t: float,
    region: Callable,
    speed_factor: Optional[Callable] = None,
    tol: float = 1e-9,
    h_max: float = 0.05,
) -> OccupancyResult:
    """Time spent inside a region along the orbit of x0 over [0, t].

    region(y) -> bool is resolved on the dense output step by step: each
    step is accepted whole once its ends and midpoint agree, and any
    disagreement bisects down to 1e-13 of the total span, so boundary
    crossings are located rather than smeared over a step.

    speed_factor(y) -> a > 0 describes a second field that is the first
    one scaled by a inside the region and untouched outside; lam then
    accumulates the traversal time of the same path under that field,
    the inside pieces weighted by 1/a.
    """
    x0 = np.asarray(x0, dtype=float)
    if not t > 0.0:
        raise DomainError(f"occupation: t={t!r} must be positive")
    traj = integrate(fieldlike, x0, (0.0, t), tol=tol, h_max=h_max)
    if traj.status != "done":
        raise DomainError(f"occupation: integration ended with {traj.status!r}")

    if speed_factor is None:
        weight = lambda y: 1.0
    else:
        def weight(y):
            a = float(speed_factor(y))
            if not a > 0.0:
                raise DomainError("occupation: speed factor must stay positive")
            return 1.0 / a

    floor = 1e-13 * t
    j_total = 0.0
    lam_total = 0.0
    flags = [bool(region(y)) for y in traj.ys]
    for i in range(len(traj.ts) - 1):
        seg = _HermiteSegment(
            traj.ts[i], traj.ts[i + 1], traj.ys[i], traj.ys[i + 1],
            traj._fs[i], traj._fs[i + 1],
        )
        j_seg, lam_seg = _measure_piece(
            seg, region, weight, float(traj.ts[i]), float(traj.ts[i + 1]),
            flags[i], flags[i + 1], 0, floor,
        )
        j_total += j_seg
        lam_total += lam_seg
    j_total = min(max(j_total, 0.0), t)
    return OccupancyResult(
        t_total=t,
        j=j_total,
        lam=lam_total if speed_factor is not None else None,
    )


@dataclass(frozen=True)
class SeparatedSetEstimate:
    """Greedy separated-subset witness: cardinality seeds pairwise at
    least epsilon apart under the max-over-integer-times orbit distance,
    h_estimate = log(cardinality) / t."""

    t: float
    epsilon: float
    cardinality: int
    h_estimate: float
    sample_size: int
    indices: tuple


def separated_entropy(
    fieldlike,
    seeds,
    t: float,
    eps: float,
    periods=None,
    sampler: Optional[Callable] = None,
    tol: float = 1e-9,
    h_max: float = math.inf,
) -> SeparatedSetEstimate:
    """Entropy lower-bound witness from a greedy separated subset.

    Each seed's orbit is sampled at integer times 0..floor(t) and the
    greedy scan keeps seeds whose orbits stay at least eps away from
    every kept one at some common sample time (wrap metric per
    coordinate when periods is given). sampler(seeds, times) overrides
    the integrator with exact orbit samples of shape (n, len(times), d),
    or a (samples, lifted) pair when a second representative per sample
    point should enter the distance.
    """
    seeds = np.asarray(seeds, dtype=float)
    if seeds.ndim != 2 or seeds.shape[0] == 0:
        raise DomainError("separated_entropy: seeds must be a nonempty (n, d) array")
    if not t >= 1.0:
        raise DomainError(f"separated_entropy: t={t!r} must be at least 1")
    if not eps > 0.0:
        raise DomainError(f"separated_entropy: eps={eps!r} must be positive")
    times = np.arange(0.0, math.floor(t) + 1.0)

    lifted = None
    if sampler is not None:
        out = sampler(seeds, times)
        if isinstance(out, tuple):
            samples, lifted = out
            lifted = np.ascontiguousarray(np.asarray(lifted, dtype=float))
        else:
            samples = out
        samples = np.ascontiguousarray(np.asarray(samples, dtype=float))
        if samples.shape != (seeds.shape[0], times.size, seeds.shape[1]):
            raise DomainError(
                "separated_entropy: sampler returned shape "
                f"{samples.shape}, expected {(seeds.shape[0], times.size, seeds.shape[1])}"
            )
    else:
        samples = np.empty((seeds.shape[0], times.size, seeds.shape[1]))
        for i, seed in enumerate(seeds):
            traj = integrate(fieldlike, seed, (0.0, float(times[-1])), tol=tol,
                             h_max=h_max)
            if traj.status != "done":
                raise DomainError(
                    f"separated_entropy: seed {i} integration ended with "
                    f"{traj.status!r}"
                )
            samples[i] = traj(times)

    kept = greedy_separated(samples, lifted=lifted, periods=periods, eps=eps)
    card = int(len(kept))
    return SeparatedSetEstimate(
        t=float(t),
        epsilon=float(eps),
        cardinality=card,
        h_estimate=math.log(card) / float(t),
        sample_size=int(seeds.shape[0]),
        indices=tuple(int(i) for i in kept),
    )
