"""Suspension flows over circle and torus maps, with time reparameterization.

A point of the suspension is an array (y_1, ..., y_d, s): base coordinates
wrapped into [0, 1) and a fiber coordinate s in [0, roof). The gluing sends
(y, roof) to (f(y), 0), so the unit-speed vertical flow is exact arithmetic:
advance s, apply the base map once per roof crossing. Everything here leans
on that exactness; the generic integrator is only a fallback interface.

Reparameterized flows keep the same orbits and rescale time fiber by fiber.
The transit time of a fiber is the integral of the reciprocal speed, which
near a slow-down center grows past any floating range; once the local speed
drops below the stagnation floor the transit is reported as infinite rather
than trusting overflowed arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .bumps import adaptive_simpson
from .errors import DomainError
from .kernels import greedy_separated

__all__ = [
    "GOLDEN_ANGLE",
    "CAT_MATRIX",
    "BaseMap",
    "circle_rotation",
    "torus_automorphism",
    "custom_map",
    "SuspensionSpace",
    "suspend",
    "SlowDownSpec",
    "ReparamFlow",
    "reparam",
    "theta",
    "AdditiveFunctionSample",
    "sample_additive",
    "gamma_return",
    "SuspendedMeasureEstimate",
    "suspended_average",
    "AbramovResult",
    "abramov_check",
    "min_ball_frequency",
    "RegionBox",
    "occupation_fraction_series",
]

GOLDEN_ANGLE = (math.sqrt(5.0) - 1.0) / 2.0
CAT_MATRIX = ((2, 1), (1, 1))

_STAGNATION_FLOOR = 1e-300


@dataclass(frozen=True)
class BaseMap:
    """Self-map of the d-torus: a circle rotation, an integer matrix with
    determinant of modulus one, or a user-supplied callable. Coordinates
    live in [0, 1)^d and every application wraps back into the box."""

    variant: str
    dim: int
    angle: Optional[float] = None
    matrix: Optional[tuple] = None
    fn: Optional[Callable] = None

    def apply(self, y):
        """One application; vectorized over leading axes of y."""
        y = np.asarray(y, dtype=float)
        if self.variant == "circle-rotation":
            return (y + self.angle) % 1.0
        if self.variant == "torus-automorphism":
            m = np.asarray(self.matrix, dtype=float)
            return (y @ m.T) % 1.0
        out = np.asarray(self.fn(y), dtype=float)
        if out.shape != y.shape:
            raise DomainError("BaseMap: custom map changed the shape of its input")
        return out % 1.0

    def iterate(self, y, n: int):
        y = np.asarray(y, dtype=float) % 1.0
        for _ in range(int(n)):
            y = self.apply(y)
        return y


def circle_rotation(angle: float) -> BaseMap:
    angle = float(angle)
    if not 0.0 < angle < 1.0:
        raise DomainError(f"circle_rotation: angle={angle!r} must lie in (0, 1)")
    return BaseMap(variant="circle-rotation", dim=1, angle=angle)


def torus_automorphism(matrix) -> BaseMap:
    m = np.asarray(matrix)
    if m.shape != (2, 2) or not np.all(m == np.round(m)):
        raise DomainError("torus_automorphism: need a 2x2 integer matrix")
    m = m.astype(int)
    det = int(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    if abs(det) != 1:
        raise DomainError(
            f"torus_automorphism: determinant {det} is not of modulus one"
        )
    return BaseMap(
        variant="torus-automorphism",
        dim=2,
        matrix=tuple(tuple(int(v) for v in row) for row in m),
    )


def custom_map(fn: Callable, dim: int) -> BaseMap:
    if dim < 1:
        raise DomainError(f"custom_map: dim={dim!r} must be at least 1")
    return BaseMap(variant="custom", dim=int(dim), fn=fn)


@dataclass(frozen=True)
class SuspensionSpace:
    """Mapping torus of a base map: base coordinates in [0, 1)^d glued to
    a fiber of height roof by (y, roof) ~ (f(y), 0). The wrap metric on
    the base and the interval metric on the fiber combine as a product;
    across the seam a point's second representative (f(y), s - roof)
    enters the distance."""

    base: BaseMap
    roof: float = 1.0

    @property
    def dim(self) -> int:
        return self.base.dim + 1

    def wrap(self, x):
        """Canonical representative: base mod 1, fiber folded into
        [0, roof) with one base application per deck shift."""
        x = np.asarray(x, dtype=float).copy()
        y, s = x[:-1] % 1.0, float(x[-1])
        k = math.floor(s / self.roof)
        if k != 0:
            y = self.base.iterate(y, k) if k > 0 else y
            if k < 0:
                raise DomainError("SuspensionSpace.wrap: fiber coordinate below 0")
            s -= k * self.roof
        return np.concatenate([y, [s]])

    def flow(self, x, t: float):
        """Unit-speed evolution by time t >= 0, exactly."""
        x = np.asarray(x, dtype=float)
        if not t >= 0.0:
            raise DomainError(f"SuspensionSpace.flow: t={t!r} must be nonnegative")
        y, s = x[:-1] % 1.0, float(x[-1])
        total = s + t
        k = math.floor(total / self.roof)
        # guard the float edge where total/roof rounds up to a new deck
        if k * self.roof > total:
            k -= 1
        y = self.base.iterate(y, k)
        return np.concatenate([y, [total - k * self.roof]])

    def time_one(self, y):
        """Time-one map applied to a zero-fiber point (base coordinates)."""
        out = self.flow(np.concatenate([np.asarray(y, float), [0.0]]), 1.0)
        return out

    def periods(self) -> np.ndarray:
        """Per-coordinate wrap lengths for the kernel metric: base 1, fiber 0
        (the seam is in the lift, not a plain wrap)."""
        return np.array([1.0] * self.base.dim + [0.0])

    def lift(self, pts):
        """Second representative of each point across the seam:
        (f(y), s - roof). pts has points along the last axis."""
        pts = np.asarray(pts, dtype=float)
        y = pts[..., :-1]
        s = pts[..., -1:]
        return np.concatenate([self.base.apply(y), s - self.roof], axis=-1)

    def distance(self, p, q) -> float:
        """Quotient metric: best of the four representative pairings with
        wrapped base coordinates."""
        reps_p = [np.asarray(p, float), self.lift(p)]
        reps_q = [np.asarray(q, float), self.lift(q)]
        per = self.periods()
        best = math.inf
        for a in reps_p:
            for b in reps_q:
                d = np.abs(a - b)
                wrapped = np.where(per > 0.0, np.minimum(d % 1.0, 1.0 - d % 1.0), d)
                best = min(best, float(np.sqrt(np.sum(wrapped**2))))
        return best


def suspend(base: BaseMap, roof: float = 1.0) -> SuspensionSpace:
    if not roof > 0.0:
        raise DomainError(f"suspend: roof={roof!r} must be positive")
    return SuspensionSpace(base=base, roof=float(roof))


# ---------------------------------------------------------------------------
# Time reparameterization


@dataclass(frozen=True)
class SlowDownSpec:
    """Radial speed well around a marked point of the suspension.

    The speed at x is radial.radial(2 * dist(x, center) / chart_radius):
    the profile's own variable runs over [0, 2] and equals 1 from 1 on,
    so the well occupies the ball of radius chart_radius / 2 and the
    speed is exactly 1 outside it. betas of the profile bound the speed
    on the nested balls and are what the slow-down audits read."""

    center: tuple
    radial: object
    chart_radius: float

    def __post_init__(self):
        if not self.chart_radius > 0.0:
            raise DomainError("SlowDownSpec: chart_radius must be positive")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

    def speed_of_distance(self, dist):
        u = np.clip(np.asarray(dist, dtype=float) * (2.0 / self.chart_radius),
                    0.0, 2.0)
        return self.radial.radial(u)

    def alpha(self, x) -> float:
        x = np.asarray(x, dtype=float)
        c = np.asarray(self.center)
        d = np.abs(x - c)
        d[:-1] = np.minimum(d[:-1] % 1.0, 1.0 - d[:-1] % 1.0)
        return float(self.speed_of_distance(float(np.sqrt(np.sum(d**2)))))

    @property
    def betas(self) -> tuple:
        """The beta ladder of the profile (the per-ball sup bounds)."""
        ladder = getattr(self.radial, "gseries", self.radial)
        return tuple(ladder.betas)

    def ball_bounds(self):
        """(radius, bound) pairs: the speed on the ball of each radius
        around the center stays at or below the bound."""
        betas = self.betas
        out = []
        for i in range(1, len(betas)):
            out.append((self.chart_radius * 0.5 / (i + 1), betas[i - 1]))
        return tuple(out)


# Shared fiber quadrature: the dip of every fiber sits at the same s (the
# center's fiber coordinate), so one node ladder serves all passes. Panels
# refine geometrically toward the dip; each carries a Gauss-Legendre rule.
_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def _fiber_rule(roof: float, s_dip: float, half_width: float):
    cuts = {0.0, roof}
    for j in range(45):
        off = half_width * 2.0**-j
        for s in (s_dip - off, s_dip + off):
            if 0.0 < s < roof:
                cuts.add(s)
    for frac in np.linspace(0.0, 1.0, 9)[1:-1]:
        cuts.add(roof * float(frac))
    edges = np.array(sorted(cuts))
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL8_X[None, :]).ravel()
    weights = (half[:, None] * _GL8_W[None, :]).ravel()
    return nodes, weights


class ReparamFlow:
    """Speed-changed suspension flow: same orbits, time rescaled by the
    pointwise speed. Callable as a chart-level field (t, x) -> vector for
    the generic integrator; the fiber-exact methods are the fast path."""

    def __init__(self, space: SuspensionSpace, alpha: Callable,
                 spec: Optional[SlowDownSpec] = None):
        self.space = space
        self.alpha = alpha
        self.spec = spec
        if spec is not None:
            self._nodes, self._weights = _fiber_rule(
                space.roof, float(spec.center[-1]), 0.5 * spec.chart_radius
            )
        else:
            self._nodes, self._weights = _fiber_rule(space.roof, 0.5 * space.roof,
                                                     0.5 * space.roof)

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        out[-1] = self.alpha(x)
        return out

    def _point(self, y, s):
        return np.concatenate([np.asarray(y, float), [s]])

    def speeds_on_fiber(self, y) -> np.ndarray:
        """Speed at the shared quadrature nodes of the fiber over y."""
        if self.spec is not None:
            c = np.asarray(self.spec.center[:-1])
            d = np.abs(np.asarray(y, float) - c)
            d = np.minimum(d % 1.0, 1.0 - d % 1.0)
            rho2 = float(np.sum(d**2))
            dist = np.sqrt(rho2 + (self._nodes - self.spec.center[-1]) ** 2)
            return np.asarray(self.spec.speed_of_distance(dist), dtype=float)
        return np.array([float(self.alpha(self._point(y, s)))
                         for s in self._nodes])

    def fiber_transit(self, y) -> float:
        """Time to cross the whole fiber over y; inf once the speed dips
        below the stagnation floor."""
        a = self.speeds_on_fiber(y)
        if float(np.min(a)) < _STAGNATION_FLOOR:
            return math.inf
        with np.errstate(over="ignore"):
            total = float(np.sum(self._weights / a))
        return total if math.isfinite(total) else math.inf

    def transit_between(self, y, s0: float, s1: float, rtol: float = 1e-10) -> float:
        """Time from (y, s0) to (y, s1) along the fiber, 0 <= s0 <= s1."""
        if not 0.0 <= s0 <= s1 <= self.space.roof + 1e-12:
            raise DomainError("transit_between: need 0 <= s0 <= s1 <= roof")
        if s1 == s0:
            return 0.0
        fn = lambda s: 1.0 / max(self.alpha(self._point(y, s)), _STAGNATION_FLOOR)
        return adaptive_simpson(fn, s0, s1, rtol=rtol)

    def evolve(self, x, t: float, max_fibers: int = 100_000):
        """Follow the reparameterized flow for time t.

        Returns (point, parked): parked is True when the orbit entered a
        stagnating fiber (infinite transit) and stopped advancing there.
        """
        x = self.space.wrap(x)
        y, s = x[:-1], float(x[-1])
        remaining = float(t)
        for _ in range(max_fibers):
            if remaining <= 0.0:
                break
            tail = self.transit_to_roof(y, s)
            if not math.isfinite(tail):
                return self._point(y, s), True
            if tail > remaining:
                s = self._invert_transit(y, s, remaining)
                remaining = 0.0
                break
            remaining -= tail
            y = self.space.base.apply(y)
            s = 0.0
        return self._point(y, s), False

    def transit_to_roof(self, y, s: float) -> float:
        if s <= 0.0:
            return self.fiber_transit(y)
        a = self.speeds_on_fiber(y)
        mask = self._nodes >= s
        if np.any(a[mask] < _STAGNATION_FLOOR):
            return math.inf
        with np.errstate(over="ignore"):
            total = float(np.sum(self._weights[mask] / a[mask]))
        return total if math.isfinite(total) else math.inf

    def _invert_transit(self, y, s0: float, budget: float) -> float:
        # bisect for the fiber height reached after the given time
        lo, hi = s0, self.space.roof
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            if self.transit_between(y, s0, mid) > budget:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-13 * max(1.0, self.space.roof):
                break
        return 0.5 * (lo + hi)


def reparam(space: SuspensionSpace, speed) -> ReparamFlow:
    """Wrap the suspension in a pointwise speed in (0, 1].

    speed may be a SlowDownSpec, a scalar, or a callable on points.
    Negative values anywhere on a probe grid are rejected; zeros are
    allowed only as the isolated marked-point wells of a SlowDownSpec.
    """
    if isinstance(speed, SlowDownSpec):
        probe = speed.alpha
        flow = ReparamFlow(space, speed.alpha, spec=speed)
    else:
        if np.isscalar(speed):
            val = float(speed)
            alpha = lambda x: val
        else:
            alpha = lambda x: float(speed(x))
        probe = alpha
        flow = ReparamFlow(space, alpha)
    grid = np.linspace(0.0, 1.0, 7)[:-1]
    for s in np.linspace(0.0, space.roof, 7)[:-1]:
        for combo in np.stack(
            np.meshgrid(*([grid] * space.base.dim)), axis=-1
        ).reshape(-1, space.base.dim):
            v = probe(np.concatenate([combo, [s]]))
            if v < 0.0:
                raise DomainError(f"reparam: speed {v} < 0 at a probe point")
            if v > 1.0 + 1e-12:
                raise DomainError(f"reparam: speed {v} > 1 at a probe point")
    return flow


# ---------------------------------------------------------------------------
# Additive functions and suspended averages


def theta(a: Callable, space: SuspensionSpace, x, t: float,
          rtol: float = 1e-10) -> float:
    """Integral of the observable along the unit-speed orbit of x over
    [0, t], fiber by fiber."""
    if not t >= 0.0:
        raise DomainError(f"theta: t={t!r} must be nonnegative")
    x = space.wrap(np.asarray(x, dtype=float))
    y, s = x[:-1], float(x[-1])
    roof = space.roof
    total = 0.0
    remaining = float(t)
    while remaining > 0.0:
        s_end = min(roof, s + remaining)
        if s_end <= s:
            break  # remainder below float resolution of the fiber coordinate
        total += adaptive_simpson(
            lambda u: float(a(np.concatenate([y, [u]]))), s, s_end, rtol=rtol
        )
        remaining -= s_end - s
        if s_end >= roof:
            y = space.base.apply(y)
            s = 0.0
        else:
            break
    return total


@dataclass(frozen=True)
class AdditiveFunctionSample:
    """Values of an additive function on a time grid for one seed, with
    the Birkhoff mean of the observable it integrates."""

    ts: tuple
    values: tuple
    mean_estimate: float


def sample_additive(a: Callable, space: SuspensionSpace, x, ts) -> AdditiveFunctionSample:
    ts = sorted(float(t) for t in ts)
    if not ts or ts[0] < 0.0:
        raise DomainError("sample_additive: need nonnegative sample times")
    vals = [theta(a, space, x, t) for t in ts]
    horizon = ts[-1]
    mean = vals[-1] / horizon if horizon > 0.0 else 0.0
    return AdditiveFunctionSample(ts=tuple(ts), values=tuple(vals),
                                  mean_estimate=mean)


@dataclass(frozen=True)
class SuspendedMeasureEstimate:
    """Birkhoff estimate of an observable average under the suspended
    measure: value = (time average of g * a) / (time average of a). The
    low_confidence flag trips when the half-orbit estimate disagrees."""

    value: float
    normalizer: float
    orbit_length: float
    low_confidence: bool

    def __float__(self):
        return self.value


def suspended_average(space: SuspensionSpace, a: Callable, g: Callable,
                      orbit_length: float, x0=None) -> SuspendedMeasureEstimate:
    if not orbit_length > 0.0:
        raise DomainError("suspended_average: orbit_length must be positive")
    if x0 is None:
        x0 = np.array([0.1234567] * space.base.dim + [0.0])
    x0 = np.asarray(x0, dtype=float)

    # the estimator needs the normalizing observable bounded away from 0
    probe = np.linspace(0.0, space.roof, 17)[:-1]
    for s in probe:
        if float(a(space.flow(x0, float(s)))) <= 0.0:
            raise DomainError("suspended_average: observable a must stay positive")

    ga = lambda p: float(g(p)) * float(a(p))
    num_full = theta(ga, space, x0, orbit_length)
    den_full = theta(a, space, x0, orbit_length)
    value = num_full / den_full
    half = orbit_length / 2.0
    num_half = theta(ga, space, x0, half)
    den_half = theta(a, space, x0, half)
    value_half = num_half / den_half
    low = abs(value - value_half) > 0.05 * max(1.0, abs(value))
    return SuspendedMeasureEstimate(
        value=value,
        normalizer=den_full / orbit_length,
        orbit_length=float(orbit_length),
        low_confidence=low,
    )


# ---------------------------------------------------------------------------
# Return times under a slow-down


def gamma_return(flow: ReparamFlow, y) -> float:
    """Time for the reparameterized flow to carry (y, 0) to (f(y), 0):
    one full fiber. Infinite when the fiber stagnates."""
    y = np.asarray(y, dtype=float) % 1.0
    return flow.fiber_transit(y)


# ---------------------------------------------------------------------------
# Entropy estimates and the constant-roof scaling law


def _entropy_estimate(samples, lifted, periods, t, eps_grid):
    """Max over the eps grid of log(greedy cardinality) / t; returns the
    winning (h, eps, cardinality)."""
    best = None
    for eps in eps_grid:
        kept = greedy_separated(samples, lifted=lifted, periods=periods, eps=eps)
        h = math.log(len(kept)) / t
        if best is None or h > best[0]:
            best = (h, float(eps), int(len(kept)))
    return best


def _flow_samples(space: SuspensionSpace, cloud: np.ndarray, t: float):
    """Orbit samples of zero-fiber seeds at integer times, with the seam
    lift of each sample."""
    n_times = math.floor(t) + 1
    n, d = cloud.shape
    samples = np.empty((n, n_times, d + 1))
    lifted = np.empty_like(samples)
    y = cloud.copy()
    applied = 0
    for k in range(n_times):
        need = math.floor(k / space.roof)
        while applied < need:
            y = space.base.apply(y)
            applied += 1
        s = k - applied * space.roof
        samples[:, k, :d] = y
        samples[:, k, d] = s
        lifted[:, k, :d] = space.base.apply(y)
        lifted[:, k, d] = s - space.roof
    return samples, lifted


def _base_samples(base: BaseMap, cloud: np.ndarray, t: float):
    n_times = math.floor(t) + 1
    n, d = cloud.shape
    samples = np.empty((n, n_times, d))
    y = cloud.copy()
    for k in range(n_times):
        samples[:, k] = y
        y = base.apply(y)
    return samples


@dataclass(frozen=True)
class AbramovResult:
    """Separated-set entropy of a constant-roof suspension against its
    base: ratio = h_flow * roof / h_base, which the constant time change
    predicts to sit near 1."""

    h_flow: float
    h_base: float
    ratio: float
    roof: float
    low_confidence: bool
    sample_size: int
    eps_grid: tuple


def _cloud(center, radius: float, n: int, rng) -> np.ndarray:
    center = np.asarray(center, dtype=float)
    pts = np.empty((n, center.size))
    have = 0
    while have < n:
        cand = rng.uniform(-radius, radius, size=(2 * n, center.size))
        cand = cand[np.sum(cand**2, axis=1) <= radius**2]
        take = min(n - have, len(cand))
        pts[have:have + take] = center + cand[:take]
        have += take
    return pts % 1.0


def abramov_check(
    base: BaseMap,
    roof_constant: float,
    sample_size: int = 4096,
    t: float = 10.0,
    eps_grid: Sequence[float] = (0.1, 0.07, 0.05),
    cloud_radius: float = 0.015,
    cloud_center=(0.313, 0.271),
    rng_seed: int = 0,
) -> AbramovResult:
    """Compare the entropy of the roof-c suspension flow with the base map.

    Both estimates run the same protocol: a localized seed cloud on the
    zero fiber, orbit samples at integer times, greedy separated subsets,
    max over the eps grid. The cloud is kept smaller than the smallest
    eps so a zero-entropy base genuinely reports (near) zero, while the
    scan window t at the cap sample size bounds what any estimate can
    reach; the ratio h_flow * c / h_base then reads the time-change law.
    """
    if base.variant != "torus-automorphism":
        raise DomainError("abramov_check: base must be a torus automorphism")
    c = float(roof_constant)
    if not 0.25 <= c <= 4.0:
        raise DomainError(f"abramov_check: roof {c!r} outside [1/4, 4]")
    if sample_size < 8:
        raise DomainError("abramov_check: sample_size too small to estimate")

    rng = np.random.default_rng(rng_seed)
    cloud = _cloud(cloud_center, cloud_radius, sample_size, rng)
    space = suspend(base, roof=c)

    flow_s, flow_l = _flow_samples(space, cloud, t)
    h_flow, eps_flow, card_flow = _entropy_estimate(
        flow_s, flow_l, space.periods(), t, eps_grid
    )
    base_s = _base_samples(base, cloud, t)
    h_base, _, card_base = _entropy_estimate(
        base_s, None, np.ones(base.dim), t, eps_grid
    )

    # still growing at the cap: the winning cardinality roughly doubles
    # when the second half of the cloud is added
    half = sample_size // 2
    card_half = len(greedy_separated(
        flow_s[:half], lifted=flow_l[:half], periods=space.periods(),
        eps=eps_flow,
    ))
    low = card_flow > 1.5 * card_half

    # 0/0 for a zero-entropy base: report nan, not a fake ratio
    ratio = (h_flow * c / h_base) if h_base > 0.0 else math.nan
    return AbramovResult(
        h_flow=h_flow,
        h_base=h_base,
        ratio=ratio,
        roof=c,
        low_confidence=low,
        sample_size=sample_size,
        eps_grid=tuple(float(e) for e in eps_grid),
    )


def min_ball_frequency(base: BaseMap, eps: float, orbit_length: int,
                       y0: float = 0.0) -> float:
    """Worst empirical visit frequency of an eps-ball over a center grid,
    along one orbit of a circle rotation."""
    if base.variant != "circle-rotation":
        raise DomainError("min_ball_frequency: base must be a circle rotation")
    if not 0.0 < eps <= 0.5:
        raise DomainError(f"min_ball_frequency: eps={eps!r} outside (0, 1/2]")
    n = int(orbit_length)
    if n < 1:
        raise DomainError("min_ball_frequency: orbit_length must be positive")
    orbit = (float(y0) + base.angle * np.arange(n)) % 1.0
    n_centers = max(8, int(math.ceil(4.0 / eps)))
    centers = np.arange(n_centers) / n_centers
    d = np.abs(orbit[None, :] - centers[:, None])
    d = np.minimum(d, 1.0 - d)
    # closed balls: at eps = 1/2 the ball is the whole circle
    freq = np.mean(d <= eps, axis=1)
    return float(np.min(freq))


# ---------------------------------------------------------------------------
# Occupation fractions under a slow-down


@dataclass(frozen=True)
class RegionBox:
    """Axis box in the suspension chart: base interval per coordinate
    (within [0, 1), no wrap straddling) and a fiber interval."""

    base_lo: tuple
    base_hi: tuple
    s_lo: float
    s_hi: float

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.base_lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.base_hi))
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise DomainError("RegionBox: need base_lo < base_hi per coordinate")
        if not self.s_lo < self.s_hi:
            raise DomainError("RegionBox: need s_lo < s_hi")
        object.__setattr__(self, "base_lo", lo)
        object.__setattr__(self, "base_hi", hi)

    def contains_base(self, y) -> bool:
        y = np.atleast_1d(np.asarray(y, float))
        return bool(np.all((y >= self.base_lo) & (y < self.base_hi)))


def occupation_fraction_series(flow: ReparamFlow, y0, ts, region: RegionBox,
                               max_passes: int = 400_000):
    """J(t)/t for each requested t, event-driven: fibers are crossed one
    at a time with their transit and in-region times read off the shared
    quadrature rule; an infinite transit parks the orbit for good, after
    which the in-region time is frozen.
    """
    ts = sorted(float(t) for t in ts)
    if not ts or ts[0] <= 0.0:
        raise DomainError("occupation_fraction_series: need positive times")
    space = flow.space
    y = np.asarray(y0, dtype=float) % 1.0
    nodes, weights = flow._nodes, flow._weights
    in_s = (nodes >= region.s_lo) & (nodes < region.s_hi)

    fractions = []
    t_acc = 0.0
    j_acc = 0.0
    idx = 0
    for _ in range(max_passes):
        if idx >= len(ts):
            break
        a = flow.speeds_on_fiber(y)
        stagnant = float(np.min(a)) < _STAGNATION_FLOOR
        if stagnant:
            gamma = math.inf
            u = 0.0
        else:
            with np.errstate(over="ignore"):
                contrib = weights / a
            gamma = float(np.sum(contrib))
            if not math.isfinite(gamma):
                gamma = math.inf
            u = (
                float(np.sum(contrib[in_s]))
                if region.contains_base(y) and math.isfinite(gamma)
                else 0.0
            )
        if math.isinf(gamma):
            # parked: region time frozen at j_acc for every later horizon
            while idx < len(ts):
                fractions.append(j_acc / ts[idx])
                idx += 1
            break
        while idx < len(ts) and t_acc + gamma >= ts[idx]:
            # horizon lands inside this pass: prorate by cumulative transit
            budget = ts[idx] - t_acc
            order = np.argsort(nodes)
            cum = np.cumsum(contrib[order])
            k = int(np.searchsorted(cum, budget))
            part_mask = np.zeros_like(in_s)
            part_mask[order[:k]] = True
            u_part = (
                float(np.sum(contrib[part_mask & in_s]))
                if region.contains_base(y)
                else 0.0
            )
            fractions.append((j_acc + min(u_part, u)) / ts[idx])
            idx += 1
        t_acc += gamma
        j_acc += u
        y = space.base.apply(y)
    else:
        raise DomainError("occupation_fraction_series: pass budget exhausted")
    return fractions
