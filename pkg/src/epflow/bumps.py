"""Flat cutoff and profile functions used by every flow construction.

All of the closed forms here share one trait: they reach zero (or one) with
all derivatives vanishing, so gluing them into vector fields preserves
smoothness. Evaluators are numpy-vectorized and accept scalars or arrays.

Underflow convention: ``exp`` of a large negative argument underflows to
exact 0.0 and that value is returned as-is. Flat functions therefore hit
exact zero in floating point well before their mathematical support
boundary; tests and downstream modules rely on this and it is documented
per function where it matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DivergenceSignal, DomainError

__all__ = [
    "SmoothFn",
    "GSeries",
    "RadialW",
    "FlatnessReport",
    "psi",
    "gamma0",
    "gamma0_prime",
    "smoothstep_flat",
    "smoothstep_quintic",
    "make_psi",
    "make_gamma0",
    "make_alpha0",
    "make_eta",
    "make_omega_hat1",
    "make_vhat0",
    "make_radial_w",
    "make_constant",
    "build_w",
    "eval_fn",
    "deriv",
    "flatness_report",
    "integral_reciprocal",
    "vhat0",
    "adaptive_simpson",
    "ball_volume",
    "sphere_area",
]


def _promote(x):
    """Return (array, was_scalar)."""
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def _demote(out, scalar):
    return float(out[0]) if scalar else out


def psi(t):
    """One-sided flat cutoff: exp(-1/t) for t > 0, zero for t <= 0.

    Increasing on (0, 1], flat to all orders at t = 0. Values in [0, 1].
    """
    tt, scalar = _promote(t)
    out = np.zeros_like(tt)
    pos = tt > 0.0
    if np.any(pos):
        with np.errstate(under="ignore"):
            out[pos] = np.exp(-1.0 / tt[pos])
    return _demote(out, scalar)


def gamma0(s):
    """Symmetric flat bump: exp(1/(s^2 - 1)) on (-1, 1), zero outside.

    Peak value exp(-1) at s = 0; flat to all orders at s = +-1.
    """
    ss, scalar = _promote(s)
    out = np.zeros_like(ss)
    inside = np.abs(ss) < 1.0
    if np.any(inside):
        with np.errstate(under="ignore"):
            out[inside] = np.exp(1.0 / (ss[inside] ** 2 - 1.0))
    return _demote(out, scalar)


def gamma0_prime(s):
    """Closed-form derivative of :func:`gamma0` (zero outside (-1, 1))."""
    ss, scalar = _promote(s)
    out = np.zeros_like(ss)
    inside = np.abs(ss) < 1.0
    if np.any(inside):
        si = ss[inside]
        d = si * si - 1.0
        with np.errstate(under="ignore"):
            out[inside] = np.exp(1.0 / d) * (-2.0 * si / (d * d))
    return _demote(out, scalar)


def smoothstep_flat(u):
    """C-infinity monotone step: 0 for u <= 0, 1 for u >= 1.

    Built from :func:`psi` as psi(u) / (psi(u) + psi(1-u)). Flat at both
    ends, so compositions keep all derivative matching exact.
    """
    uu, scalar = _promote(u)
    p = np.atleast_1d(np.asarray(psi(np.clip(uu, -1.0, 1.0))))
    q = np.atleast_1d(np.asarray(psi(np.clip(1.0 - uu, -1.0, 1.0))))
    out = np.where(uu <= 0.0, 0.0, np.where(uu >= 1.0, 1.0, 0.0))
    mid = (uu > 0.0) & (uu < 1.0)
    if np.any(mid):
        denom = p[mid] + q[mid]
        # Both terms underflow only outside (0, 1); inside, at least one
        # of them is >= exp(-2).
        out[mid] = np.where(denom > 0.0, p[mid] / np.where(denom > 0, denom, 1.0), 0.0)
    return _demote(out, scalar)


def smoothstep_quintic(u):
    """C^2 monotone polynomial step 6u^5 - 15u^4 + 10u^3, clamped to [0, 1]."""
    uu, scalar = _promote(u)
    c = np.clip(uu, 0.0, 1.0)
    out = c * c * c * (10.0 + c * (-15.0 + 6.0 * c))
    return _demote(out, scalar)


# ---------------------------------------------------------------------------
# Handles


@dataclass(frozen=True)
class SmoothFn:
    """A named smooth function with a declared domain.

    Calling the handle validates the input against the domain and then
    evaluates the vectorized implementation. ``kind`` identifies the
    construction; ``params`` records the defining constants.
    """

    kind: str
    domain_dim: int
    params: dict = field(default_factory=dict)
    impl: Callable = field(default=None, repr=False)
    check: Optional[Callable] = field(default=None, repr=False)

    def __call__(self, x):
        if self.check is not None:
            self.check(x)
        return self.impl(x)


def eval_fn(f: SmoothFn, x):
    """Evaluate a handle (alias for calling it)."""
    return f(x)


def _check_interval(name, lo, hi, lo_open=False, hi_open=False):
    def check(x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        bad_lo = (arr <= lo) if lo_open else (arr < lo)
        bad_hi = (arr >= hi) if hi_open else (arr > hi)
        bad = bad_lo | bad_hi
        if np.any(bad):
            v = float(arr[np.argmax(bad)])
            lb = "(" if lo_open else "["
            rb = ")" if hi_open else "]"
            raise DomainError(
                f"{name}: argument {v!r} outside {lb}{lo}, {hi}{rb}"
            )

    return check


def make_psi() -> SmoothFn:
    """Handle for :func:`psi` on its chart domain (-1, 1]."""
    return SmoothFn(
        kind="psi",
        domain_dim=1,
        params={},
        impl=psi,
        check=_check_interval("psi", -1.0, 1.0, lo_open=True),
    )


def make_gamma0() -> SmoothFn:
    """Handle for :func:`gamma0`; defined on all of R."""
    return SmoothFn(kind="gamma0", domain_dim=1, params={}, impl=gamma0)


def make_alpha0(ladder) -> SmoothFn:
    """Radial speed factor tied to a circle ladder.

    For x in [0, 1], alpha0(x) is exp(1/((x - q_hi)(x - q_lo))) where
    q_lo < x < q_hi are the squares of the two ladder circles bracketing
    sqrt(x), and exactly 0 when x equals any circle square (or 0).

    Between adjacent grid circles inside a strip the exponent is so large
    that the value underflows to exact 0 for strips with index >= 2's
    inner neighbors; only the outermost band (between the top grid circle
    and radius 1) carries values above the floating-point floor. Grid
    circles whose spacing collapses below float resolution are treated as
    a single circle (documented on the ladder).
    """
    squares = ladder.circle_squares()  # ascending, includes 0.0 and 1.0

    def impl(x):
        xx, scalar = _promote(x)
        out = np.zeros_like(xx)
        # Exact circle squares (and 0, 1) map to exact zero.
        idx = np.searchsorted(squares, xx)
        on_circle = np.zeros(xx.shape, dtype=bool)
        lo_ok = idx > 0
        hit_lo = np.zeros_like(on_circle)
        hit_lo[lo_ok] = squares[idx[lo_ok] - 1] == xx[lo_ok]
        hit_hi = np.zeros_like(on_circle)
        in_rng = idx < len(squares)
        hit_hi[in_rng] = squares[idx[in_rng]] == xx[in_rng]
        on_circle = hit_lo | hit_hi
        interior = ~on_circle & (xx > 0.0) & (xx < 1.0)
        if np.any(interior):
            xi = xx[interior]
            ii = np.searchsorted(squares, xi)
            q_lo = squares[ii - 1]
            q_hi = squares[ii]
            with np.errstate(under="ignore", divide="ignore"):
                expo = 1.0 / ((xi - q_hi) * (xi - q_lo))
                vals = np.exp(expo)
            out_interior = np.where(np.isfinite(vals), vals, 0.0)
            out[interior] = out_interior
        return _demote(out, scalar)

    return SmoothFn(
        kind="alpha0",
        domain_dim=1,
        params={"i_max": ladder.i_max},
        impl=impl,
        check=_check_interval("alpha0", 0.0, 1.0),
    )


def make_eta(dim: int = 5, repaired: bool = True) -> SmoothFn:
    """Transverse-vanishing weight on R^dim.

    Inside the ball of radius 2 the value is rho^3 (rho = norm of the
    trailing dim-1 coordinates) plus, for |x1| > 1, a flat exponential in
    x1. Between radii 2 and 4 the value blends toward 1 staying inside
    (1/20, 20); it is exactly 1 from radius 4 on. Vanishes exactly on the
    segment {x1 in [-1, 1], trailing coordinates 0}.

    ``repaired=False`` keeps the exploding exponent sign printed in the
    source construction (useful only for comparison; it overflows to inf
    as |x1| -> 1+).
    """
    if dim < 2:
        raise DomainError(f"eta: dim={dim} must be >= 2")
    sign = -1.0 if repaired else 1.0

    def branch(pts):
        x1 = pts[..., 0]
        rho2 = np.sum(pts[..., 1:] ** 2, axis=-1)
        core = rho2 ** 1.5
        out = core.copy()
        outer = np.abs(x1) > 1.0
        if np.any(outer):
            with np.errstate(under="ignore", over="ignore"):
                out[outer] = out[outer] + np.exp(sign / (x1[outer] ** 2 - 1.0))
        return out

    def impl(x):
        pts = np.asarray(x, dtype=float)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != dim:
            raise DomainError(
                f"eta: point has {pts.shape[-1]} coordinates, expected {dim}"
            )
        nrm = np.sqrt(np.sum(pts * pts, axis=-1))
        out = np.ones(pts.shape[0])
        inner = nrm <= 2.0
        out[inner] = branch(pts[inner])
        ring = (nrm > 2.0) & (nrm < 4.0)
        if np.any(ring):
            pr = pts[ring]
            nr = nrm[ring]
            proj = pr * (2.0 / nr)[:, None]
            s = np.atleast_1d(np.asarray(smoothstep_flat((nr - 2.0) / 2.0)))
            out[ring] = (1.0 - s) * branch(proj) + s
        return float(out[0]) if scalar else out

    return SmoothFn(
        kind="eta",
        domain_dim=dim,
        params={"dim": dim, "repaired": repaired},
        impl=impl,
    )


def make_omega_hat1(dim: int = 5) -> SmoothFn:
    """Radial weight equal to ||x||^2 near 0, 1 far out, in (1/4, 2) between.

    Exactly ||x||^2 for ||x|| <= 1/2 and exactly 1 for ||x|| >= 1, with a
    flat monotone blend on the middle annulus. Values lie in [0, 2].
    """

    def impl(x):
        pts = np.asarray(x, dtype=float)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != dim:
            raise DomainError(
                f"omegaHat1: point has {pts.shape[-1]} coordinates, expected {dim}"
            )
        r2 = np.sum(pts * pts, axis=-1)
        r = np.sqrt(r2)
        s = np.atleast_1d(np.asarray(smoothstep_flat((r - 0.5) / 0.5)))
        out = np.where(r <= 0.5, r2, np.where(r >= 1.0, 1.0, (1.0 - s) * r2 + s))
        return float(out[0]) if scalar else out

    return SmoothFn(kind="omegaHat1", domain_dim=dim, params={"dim": dim}, impl=impl)


def make_constant(value: float = 1.0, dim: int = 3) -> SmoothFn:
    """Constant function handle (used for volume sanity checks)."""

    def impl(x):
        pts = np.asarray(x, dtype=float)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = np.full(pts.shape[0], float(value))
        return float(out[0]) if scalar else out

    return SmoothFn(
        kind="constant", domain_dim=dim, params={"value": value, "dim": dim}, impl=impl
    )


# ---------------------------------------------------------------------------
# The weighted series profile g and the radial slow-down profile w


def _default_cs(n: int) -> np.ndarray:
    # c_i = 1/(i+1) for i = 1..n; strictly decreasing, below 1.
    return 1.0 / (np.arange(1, n + 1) + 1.0)


@dataclass(frozen=True)
class GSeries:
    """Truncated series g(t) = sum_i 2^(-i-1) beta_(i-1) psi(t - c_i).

    ``betas`` holds (beta_0, ..., beta_(N-1)) with beta_0 = 1, strictly
    decreasing and positive (the implicit beta_(-1) = 1 bounds the whole
    profile). ``cs`` holds (c_1, ..., c_N), strictly decreasing in (0, 1).
    Above t = 1/2 the series is blended flatly up to the constant 1, which
    extends g to [1, 2] with g = 1 there.

    Truncation floor: for t below c_N the truncated series is exactly 0,
    so the profile has a small exact-zero plateau around 0 of radius about
    1/(N+2); positivity claims are made outside that plateau.
    """

    betas: tuple
    cs: tuple

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float)
        c = np.asarray(self.cs, dtype=float)
        if b.ndim != 1 or b.size == 0:
            raise DomainError("GSeries: betas must be a nonempty sequence")
        if b[0] != 1.0:
            raise DomainError(f"GSeries: betas[0]={b[0]!r} must equal 1")
        if np.any(b <= 0.0):
            k = int(np.argmax(b <= 0.0))
            raise DomainError(f"GSeries: betas[{k}]={b[k]!r} is not positive")
        if b.size > 1 and np.any(np.diff(b) >= 0.0):
            k = int(np.argmax(np.diff(b) >= 0.0))
            raise DomainError(
                f"GSeries: betas[{k + 1}]={b[k + 1]!r} breaks strict decrease"
            )
        if c.size != b.size:
            raise DomainError(
                f"GSeries: {c.size} shift values for {b.size} coefficients"
            )
        if np.any(c <= 0.0) or np.any(c >= 1.0):
            raise DomainError("GSeries: shifts must lie strictly inside (0, 1)")
        if c.size > 1 and np.any(np.diff(c) >= 0.0):
            raise DomainError("GSeries: shifts must be strictly decreasing")

    @property
    def n_terms(self) -> int:
        return len(self.betas)

    def series(self, t, n_terms: Optional[int] = None):
        """Partial sum of the raw series (no upper blend)."""
        n = self.n_terms if n_terms is None else min(n_terms, self.n_terms)
        tt, scalar = _promote(t)
        if n == 0:
            return _demote(np.zeros_like(tt), scalar)
        b = np.asarray(self.betas[:n])
        c = np.asarray(self.cs[:n])
        i = np.arange(1, n + 1)
        coef = (2.0 ** (-(i + 1.0))) * b
        shifted = tt[..., None] - c
        vals = np.asarray(psi(shifted)).reshape(tt.shape + (n,))
        out = vals @ coef
        return _demote(out, scalar)

    def g(self, t, n_terms: Optional[int] = None):
        """The blended profile: series below 1/2, exactly 1 on [1, 2]."""
        tt, scalar = _promote(t)
        base = np.atleast_1d(np.asarray(self.series(tt, n_terms)))
        s = np.atleast_1d(np.asarray(smoothstep_flat((tt - 0.5) / 0.5)))
        out = (1.0 - s) * base + s
        return _demote(out, scalar)


@dataclass(frozen=True)
class RadialW:
    """Radial profile w(x) = g(|x|) on the ball of radius 2.

    Vanishes exactly at 0 (and on the truncation plateau, see GSeries),
    is positive elsewhere, equals 1 on the annulus 1 <= |x| <= 2, and its
    sup over the ball of radius 1/(i+1) is at most beta_(i-1).
    """

    gseries: GSeries
    dim: int = 5

    def radial(self, t):
        return self.gseries.g(t)

    def __call__(self, x):
        pts = np.asarray(x, dtype=float)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != self.dim:
            raise DomainError(
                f"radialW: point has {pts.shape[-1]} coordinates, expected {self.dim}"
            )
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        if np.any(r > 2.0):
            v = float(r[np.argmax(r > 2.0)])
            raise DomainError(f"radialW: |x|={v!r} outside the ball of radius 2")
        out = np.atleast_1d(np.asarray(self.gseries.g(r)))
        return float(out[0]) if scalar else out

    def handle(self) -> SmoothFn:
        return SmoothFn(
            kind="radialW",
            domain_dim=self.dim,
            params={"dim": self.dim, "n_terms": self.gseries.n_terms},
            impl=self.__call__,
        )


def build_w(betas: Sequence[float], dim: int = 5, n_terms: int = 60) -> RadialW:
    """Build the radial slow-down profile from a decreasing beta ladder.

    A short user ladder is extended geometrically (continuing its last
    ratio) out to ``n_terms`` coefficients so the profile is positive on
    all but a tiny plateau around 0. The extension only tightens the
    per-ball sup bounds, never loosens them.
    """
    b = list(float(v) for v in betas)
    if not b:
        raise DomainError("build_w: betas must be nonempty")
    if b[0] != 1.0:
        raise DomainError(f"build_w: betas[0]={b[0]!r} must equal 1")
    for k in range(1, len(b)):
        if not (0.0 < b[k] < b[k - 1]):
            raise DomainError(
                f"build_w: betas[{k}]={b[k]!r} breaks strict positive decrease"
            )
    ratio = b[-1] / b[-2] if len(b) >= 2 else 0.5
    ratio = min(max(ratio, 1e-6), 0.9)
    while len(b) < n_terms:
        b.append(b[-1] * ratio)
    gs = GSeries(betas=tuple(b), cs=tuple(_default_cs(len(b))))
    return RadialW(gseries=gs, dim=dim)


def make_radial_w(betas: Sequence[float], dim: int = 5, n_terms: int = 60) -> SmoothFn:
    return build_w(betas, dim=dim, n_terms=n_terms).handle()


# ---------------------------------------------------------------------------
# Finite differences and flatness audits

_STENCILS = {
    1: ((-1, 0, 1), (-0.5, 0.0, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def deriv(f: SmoothFn, x, order: int = 1, step: float = 1e-3, direction=None):
    """Central finite difference of ``f`` at ``x``.

    ``direction`` picks the 1D line for multivariate handles (defaults to
    the first axis). The stencil must stay inside the handle's domain,
    otherwise the offending point is rejected.
    """
    if order not in _STENCILS:
        raise DomainError(f"deriv: order={order} not in 1..4")
    if step <= 0.0:
        raise DomainError(f"deriv: step={step!r} must be positive")
    offsets, coefs = _STENCILS[order]
    if f.domain_dim == 1:
        base = float(np.asarray(x, dtype=float))
        pts = [base + k * step for k in offsets]
        vals = [float(f(p)) for p in pts]
    else:
        base = np.asarray(x, dtype=float).reshape(f.domain_dim)
        if direction is None:
            d = np.zeros(f.domain_dim)
            d[0] = 1.0
        else:
            d = np.asarray(direction, dtype=float).reshape(f.domain_dim)
            nd = np.linalg.norm(d)
            if nd == 0.0:
                raise DomainError("deriv: direction must be nonzero")
            d = d / nd
        vals = [float(f(base + (k * step) * d)) for k in offsets]
    acc = sum(c * v for c, v in zip(coefs, vals))
    return acc / step**order


@dataclass(frozen=True)
class FlatnessReport:
    """Finite-difference magnitudes at shrinking steps, with a pass flag.

    ``magnitudes[k]`` lists |order-(k+1) difference| for each step. A
    sequence passes when every entry is at most 10 times its step.
    """

    point: tuple
    orders: tuple
    steps: tuple
    magnitudes: tuple  # tuple of tuples, one row per order
    passed: bool


def flatness_report(
    f: SmoothFn,
    x,
    max_order: int = 3,
    steps: Sequence[float] = (1e-2, 1e-3, 1e-4),
    direction=None,
) -> FlatnessReport:
    """Audit that all differences through ``max_order`` collapse at ``x``."""
    if not 1 <= max_order <= 4:
        raise DomainError(f"flatness_report: max_order={max_order} not in 1..4")
    rows = []
    ok = True
    for order in range(1, max_order + 1):
        row = []
        for h in steps:
            mag = abs(deriv(f, x, order=order, step=h, direction=direction))
            row.append(mag)
            if mag > 10.0 * h:
                ok = False
        rows.append(tuple(row))
    pt = np.atleast_1d(np.asarray(x, dtype=float))
    return FlatnessReport(
        point=tuple(float(v) for v in pt),
        orders=tuple(range(1, max_order + 1)),
        steps=tuple(steps),
        magnitudes=tuple(rows),
        passed=ok,
    )


# ---------------------------------------------------------------------------
# Reciprocal integrals over balls


def ball_volume(dim: int, radius: float) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0) * radius**dim


def sphere_area(dim: int, radius: float) -> float:
    """Surface area of the (dim-1)-sphere bounding a dim-ball."""
    return dim * ball_volume(dim, 1.0) * radius ** (dim - 1)


def _refine_levels(estimate_fn, resolution: int, levels: int):
    vals = [estimate_fn(resolution * (2**k)) for k in range(levels)]
    for v in vals:
        if not math.isfinite(v):
            raise DivergenceSignal(
                "integral_reciprocal: estimate overflowed during refinement"
            )
    incs = [vals[k] - vals[k - 1] for k in range(1, levels)]
    growing = 0
    for k in range(1, len(incs)):
        if incs[k] > 0.0 and incs[k] >= 0.6 * incs[k - 1]:
            growing += 1
        else:
            growing = 0
    tail = abs(incs[-1]) if incs else 0.0
    if growing >= 3 and tail > 1e-9 * max(1.0, abs(vals[-1])):
        raise DivergenceSignal(
            "integral_reciprocal: increments not decaying "
            f"(last levels {[f'{v:.6g}' for v in vals[-4:]]})"
        )
    return vals[-1]


def integral_reciprocal(
    f: SmoothFn, ball_radius: float, resolution: int = 256, levels: int = 6
) -> float:
    """Estimate the integral of 1/f over a ball, shell by shell.

    Radial kinds (omegaHat1, radialW, constant) integrate over the ball
    of the given radius centered at 0. The eta kind integrates over the
    axis cylinder {|x1| <= 1, transverse radius <= ball_radius} around
    its vanishing segment, which is where integrability is at stake.

    Uses midpoint shells (never evaluating on the zero set), doubling the
    resolution per level. Raises :class:`DivergenceSignal` when the
    refinements keep growing instead of settling.
    """
    if ball_radius <= 0.0:
        raise DomainError(f"integral_reciprocal: ball_radius={ball_radius!r} <= 0")
    dim = f.domain_dim
    if f.kind in ("omegaHat1", "radialW", "constant"):

        def estimate(n):
            h = ball_radius / n
            r = (np.arange(n) + 0.5) * h
            pts = np.zeros((n, dim))
            pts[:, 0] = r
            vals = np.atleast_1d(np.asarray(f(pts)))
            with np.errstate(divide="ignore", over="ignore"):
                integrand = sphere_area(dim, 1.0) * r ** (dim - 1) / vals
            return float(np.sum(integrand) * h)

        return _refine_levels(estimate, resolution, levels)

    if f.kind == "eta":
        tdim = dim - 1  # transverse dimension around the vanishing segment
        n_axis = 129

        def estimate(n):
            ha = 2.0 / n_axis
            x1 = -1.0 + (np.arange(n_axis) + 0.5) * ha
            hr = ball_radius / n
            rho = (np.arange(n) + 0.5) * hr
            pts = np.zeros((n_axis, n, dim))
            pts[:, :, 0] = x1[:, None]
            pts[:, :, 1] = rho[None, :]
            vals = np.atleast_1d(np.asarray(f(pts.reshape(-1, dim)))).reshape(
                n_axis, n
            )
            with np.errstate(divide="ignore", over="ignore"):
                shell = sphere_area(tdim, 1.0) * rho ** (tdim - 1)
                integrand = shell[None, :] / vals
            return float(np.sum(integrand) * ha * hr)

        return _refine_levels(estimate, resolution, levels)

    raise DomainError(
        f"integral_reciprocal: unsupported kind {f.kind!r}; "
        "expected omegaHat1, radialW, constant, or eta"
    )


# ---------------------------------------------------------------------------
# The fiber-blend weight vhat0


def adaptive_simpson(fn, a: float, b: float, rtol: float = 1e-8, max_depth: int = 30):
    """Classic adaptive Simpson quadrature of a scalar function."""
    if b <= a:
        return 0.0

    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, depth, tol):
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = fn(lm)
        frm = fn(rm)
        left = simpson(lo, mid, flo, flm, fmid)
        right = simpson(mid, hi, fmid, frm, fhi)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(lo, mid, flo, flm, fmid, left, depth + 1, tol / 2.0) + recurse(
            mid, hi, fmid, frm, fhi, right, depth + 1, tol / 2.0
        )

    fa, fb = fn(a), fn(b)
    m = 0.5 * (a + b)
    fm = fn(m)
    whole = simpson(a, b, fa, fm, fb)
    scale = max(abs(whole), 1e-300)
    return recurse(a, b, fa, fm, fb, whole, 0, rtol * scale)


def _v0_values(G, s):
    """The fiber-blend integrand on G < s < 4, exact 0 outside.

    The exponent 1/(G - s) + 1/(s - 4) is assembled first and
    exponentiated once (log-space evaluation), so the value underflows to
    0 cleanly near both endpoints instead of producing 0 * inf.
    """
    G = np.asarray(G, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros(np.broadcast(G, s).shape)
    Gb = np.broadcast_to(G, out.shape)
    sb = np.broadcast_to(s, out.shape)
    inside = (sb > Gb) & (sb < 4.0)
    if np.any(inside):
        with np.errstate(under="ignore"):
            expo = 1.0 / (Gb[inside] - sb[inside]) + 1.0 / (sb[inside] - 4.0)
            out[inside] = np.exp(expo)
    return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _v0_integral_gauss(G, lo):
    """Integral of the blend integrand from lo to 4, batched over lo.

    Fixed-order Gauss-Legendre; the integrand is flat at both endpoints,
    so a 48-node rule is accurate to roundoff. Cross-checked in the test
    suite against adaptive Simpson at rtol 1e-8.
    """
    G = np.asarray(G, dtype=float)
    lo = np.asarray(lo, dtype=float)
    shape = np.broadcast(G, lo).shape
    Gb = np.broadcast_to(G, shape).reshape(-1)
    lob = np.broadcast_to(lo, shape).reshape(-1)
    lob = np.minimum(np.maximum(lob, Gb), 4.0)
    half = 0.5 * (4.0 - lob)
    mid = 0.5 * (4.0 + lob)
    s = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = _v0_values(Gb[:, None], s)
    res = (vals @ _GL_WEIGHTS) * half
    return res.reshape(shape)


def vhat0(x1, x2, method: str = "gauss"):
    """Fiber-blend weight in [0, 1].

    Equals 1 for |x2| <= gamma0(x1), 0 for |x2| >= 2, and in between is
    the tail mass of the blend integrand from x2^2 to 4 normalized by the
    mass from gamma0(x1)^2 to 4. Flat in x2 at both clause boundaries.

    ``method`` selects the quadrature: "gauss" (fixed 48-node, batched,
    used on hot paths) or "simpson" (adaptive, rtol 1e-8). Both agree to
    well below 1e-8; the suite checks this.
    """
    xx1, s1 = _promote(x1)
    xx2, s2 = _promote(x2)
    shape = np.broadcast(xx1, xx2).shape
    a1 = np.broadcast_to(xx1, shape).astype(float)
    a2 = np.broadcast_to(xx2, shape).astype(float)
    G = np.atleast_1d(np.asarray(gamma0(a1))) ** 2
    u = a2 * a2
    out = np.zeros(shape)
    ones = u <= G
    out[ones] = 1.0
    mid = ~ones & (u < 4.0)
    if np.any(mid):
        if method == "gauss":
            num = _v0_integral_gauss(G[mid], u[mid])
            den = _v0_integral_gauss(G[mid], G[mid])
        elif method == "simpson":
            num = np.empty(int(np.sum(mid)))
            den = np.empty_like(num)
            Gm = G[mid]
            um = u[mid]
            for k in range(num.size):
                gk = float(Gm[k])
                fn = lambda s: float(_v0_values(gk, s))
                num[k] = adaptive_simpson(fn, float(um[k]), 4.0)
                den[k] = adaptive_simpson(fn, gk, 4.0)
        else:
            raise DomainError(f"vhat0: unknown method {method!r}")
        out[mid] = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    scalar = s1 and s2
    return float(out.reshape(-1)[0]) if scalar and out.size == 1 else out


def make_vhat0(method: str = "simpson") -> SmoothFn:
    """Handle for :func:`vhat0` on R^2 (x1, x2)."""

    def impl(x):
        pts = np.asarray(x, dtype=float)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != 2:
            raise DomainError(
                f"vhat0: point has {pts.shape[-1]} coordinates, expected 2"
            )
        out = np.atleast_1d(np.asarray(vhat0(pts[:, 0], pts[:, 1], method=method)))
        return float(out[0]) if scalar else out

    return SmoothFn(kind="vhat0", domain_dim=2, params={"method": method}, impl=impl)
