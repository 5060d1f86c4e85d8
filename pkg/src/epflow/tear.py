"""Tear charts: curve-aligned planar fields, their rotations, embeddings.

The chart lives on the strip -2 < x1 < 2 and stacks three bands of
curves over the x1-axis: scaled copies of the flat bump (a gamma0, for
0 <= a <= 1), shifted copies (gamma0 + b, for 0 <= b <= 1), and an
interpolating family that flattens onto the horizontal line at height 2
(for 1 <= b <= 2). A point is classified by inverting the family
through it; every field evaluation starts from that inversion and moves
the point along its own curve at a transverse-vanishing speed, so the
closed tongue under the graph of gamma0 consists of rest points.

Variant "Z" keeps the three case formulas as they stand; variant "Z1"
re-blends the top band through the fiber weight ``vhat0`` so the slope
released there is continuous in x2 all the way to the flat ceiling.
Rotating either field about the x1-axis gives the high-dimensional
versions, and `ProjectionDelta` collapses curves to horizontal lines,
which turns the flow into a straight height-frozen motion of x1. The
collapse is exact for variant Z along every curve; the reported
residuals therefore read as integrator error.

`EmbeddedDiskFields` is the separate carrier construction: a planar
disk field glued into R^dim so that the flat unit disk is invariant,
everything strictly between the disk and the ball of radius sqrt(2)
escapes upward, and the ambient damped rotation continues outside.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bumps import (
    SmoothFn,
    make_alpha0,
    make_eta,
    make_gamma0,
    smoothstep_flat,
    vhat0,
)
from .disk import CircleLadder, build_ladder
from .errors import DomainError
from .flow import (
    AmbientField,
    EventSpec,
    integrate,
    make_ambient_field,
    speed_profile,
)

STRIP_HALF = 2.0
SECTION_X1 = 3.0  # entry plane x1 = -3, exit plane x1 = +3
_CHART_EXIT = 1.95  # orbit comparisons stop short of the open strip edge
_SQRT2 = math.sqrt(2.0)
_PASS_RAMP = 0.1  # ambient matching shell width outside the sqrt(2) ball
_SHELL_GAP = 0.6  # disk-distance where the disk weight reaches 0


# ---------------------------------------------------------------------------
# Scalar kernels
#
# The integrator calls the field thousands of times per orbit, so the
# chart arithmetic is done on plain floats here. The vectorized handles
# in bumps stay the exported description; the suite pins both paths to
# each other.


def _g0(x1: float) -> float:
    if abs(x1) >= 1.0:
        return 0.0
    return math.exp(1.0 / (x1 * x1 - 1.0))


def _g0p(x1: float) -> float:
    if abs(x1) >= 1.0:
        return 0.0
    d = x1 * x1 - 1.0
    return math.exp(1.0 / d) * (-2.0 * x1 / (d * d))


def _eta_branch(x1: float, u: float) -> float:
    out = (u * u) ** 1.5
    if abs(x1) > 1.0:
        out += math.exp(-1.0 / (x1 * x1 - 1.0))
    return out


def _eta2(x1: float, u: float) -> float:
    """Transverse weight at the padded point (x1, u, 0, ..., 0)."""
    nrm = math.sqrt(x1 * x1 + u * u)
    if nrm >= 4.0:
        return 1.0
    if nrm <= 2.0:
        return _eta_branch(x1, u)
    f = 2.0 / nrm
    s = float(smoothstep_flat((nrm - 2.0) / 2.0))
    return (1.0 - s) * _eta_branch(x1 * f, u * f) + s


# Same 48-node rule as the vectorized vhat0; rebuilt here so the scalar
# path below allocates one 48-vector per call instead of running the
# broadcasting machinery. The suite pins both paths to each other.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _gl_tail(G: float, lo: float) -> float:
    half = 0.5 * (4.0 - lo)
    mid = 0.5 * (4.0 + lo)
    s = mid + half * _GL_NODES
    # nodes are interior, but a degenerate interval can round one onto
    # an endpoint where the exponent blows up; the integrand is 0 there
    inside = (s > G) & (s < 4.0)
    vals = np.zeros(s.size)
    if np.any(inside):
        with np.errstate(under="ignore"):
            vals[inside] = np.exp(
                1.0 / (G - s[inside]) + 1.0 / (s[inside] - 4.0)
            )
    return float(vals @ _GL_WEIGHTS) * half


def _vhat(x1: float, x2: float) -> float:
    g = _g0(x1)
    G = g * g
    u = x2 * x2
    if u <= G:
        return 1.0
    if u >= 4.0:
        return 0.0
    den = _gl_tail(G, G)
    return _gl_tail(G, u) / den if den > 0.0 else 0.0


# ---------------------------------------------------------------------------
# Chart and classification


@dataclass(frozen=True)
class Classification:
    """Region label with the inverted curve parameter (nan outside)."""

    label: str  # "U1", "V1", "W1", "outside"
    param: float


@dataclass(frozen=True)
class TearChart:
    """Three curve bands over the strip, described by bump handles.

    ``gamma0`` and ``eta`` are the exported vectorized handles; the
    methods below run the same formulas on scalars. Boundary ties go to
    the lower band, so the graph of gamma0 itself belongs to the bottom
    family and the flat ceiling at height 2 to the top one.
    """

    gamma0: SmoothFn = field(repr=False)
    eta: SmoothFn = field(repr=False)
    dim: int = 5

    def g0(self, x1) -> float:
        return _g0(float(x1))

    def g0p(self, x1) -> float:
        return _g0p(float(x1))

    def eta_axis(self, x1) -> float:
        """eta at the axis pad (x1, 0, ..., 0)."""
        return _eta2(float(x1), 0.0)

    def eta_pad(self, x1, u) -> float:
        """eta at the planar pad (x1, u, 0, ..., 0)."""
        return _eta2(float(x1), float(u))

    def rho_curve(self, a: float, s) -> np.ndarray:
        """Point of the bottom-family curve at parameter s."""
        a = float(a)
        s = float(s)
        if not 0.0 <= a <= 1.0:
            raise DomainError(f"rho_curve: a={a!r} outside [0, 1]")
        if not -STRIP_HALF < s < STRIP_HALF:
            raise DomainError(f"rho_curve: s={s!r} outside the strip")
        return np.array([s, a * _g0(s)])

    def sigma_curve(self, b: float, s) -> np.ndarray:
        """Point of the shifted or interpolating curve at parameter s."""
        b = float(b)
        s = float(s)
        if not 0.0 <= b <= 2.0:
            raise DomainError(f"sigma_curve: b={b!r} outside [0, 2]")
        if not -STRIP_HALF < s < STRIP_HALF:
            raise DomainError(f"sigma_curve: s={s!r} outside the strip")
        g = _g0(s)
        if b <= 1.0:
            return np.array([s, g + b])
        return np.array([s, (2.0 - b) * (g + 1.0) + 2.0 * (b - 1.0)])

    def classify(self, p) -> Classification:
        x1, x2 = float(p[0]), float(p[1])
        if not (-STRIP_HALF < x1 < STRIP_HALF) or x2 < 0.0 or x2 > 2.0:
            return Classification("outside", math.nan)
        g = _g0(x1)
        if x2 == 0.0:
            return Classification("U1", 0.0)
        if g > 0.0 and x2 <= g:
            return Classification("U1", x2 / g)
        if x2 <= g + 1.0:
            return Classification("V1", x2 - g)
        # 1 - g never vanishes: the bump peaks at exp(-1)
        return Classification("W1", (x2 - 2.0 * g) / (1.0 - g))


def make_tear_chart(dim: int = 5) -> TearChart:
    if dim < 2:
        raise DomainError(f"make_tear_chart: dim={dim} must be >= 2")
    return TearChart(gamma0=make_gamma0(), eta=make_eta(dim=dim), dim=dim)


def classify(chart: TearChart, p) -> Classification:
    """Region label of a planar point (module-level alias)."""
    return chart.classify(p)


# ---------------------------------------------------------------------------
# Planar fields


@dataclass(frozen=True)
class TearField:
    """Curve-aligned slope field on the plane.

    The first component is the transverse weight eta evaluated at the
    curve parameter of the point, the second is that weight times the
    slope of the curve through it, so orbits ride their own curve and
    the flow is conjugate to a straight horizontal motion band by band.

    Variant "Z1" replaces both upper-band formulas with the single
    vhat0-blended one. The fiber weight is flat-1 at the graph of
    gamma0 and flat-0 at height 2, which are exactly the edges of the
    union of the two bands; blending only the top band would leave a
    jump at their shared border (the weight is strictly below 1 there)
    and a jump violates everything the variant is for: orbits crossing
    the border get absorbed and come back with the wrong transverse
    coordinate. Blended this way the field is smooth above the tongue
    and the mirror identity survives.
    """

    variant: str
    chart: TearChart

    def value(self, p) -> np.ndarray:
        x1, x2 = float(p[0]), float(p[1])
        c = self.chart.classify((x1, x2))
        if c.label == "U1":
            e = _eta2(x1, 0.0)
            return np.array([e, e * c.param * _g0p(x1)])
        if self.variant == "Z1" and c.label in ("V1", "W1"):
            v = _vhat(x1, x2)
            e = _eta2(x1, x2 - v * _g0(x1))
            return np.array([e, e * v * _g0p(x1)])
        if c.label == "V1":
            e = _eta2(x1, c.param)
            return np.array([e, e * _g0p(x1)])
        if c.label == "W1":
            e = _eta2(x1, c.param)
            return np.array([e, e * (2.0 - c.param) * _g0p(x1)])
        e = _eta2(x1, x2)
        return np.array([e, 0.0])

    def __call__(self, t, p) -> np.ndarray:
        return self.value(p)


def make_tear_field(variant: str = "Z", chart: Optional[TearChart] = None) -> TearField:
    if variant not in ("Z", "Z1"):
        raise DomainError(f"make_tear_field: unknown variant {variant!r}")
    return TearField(variant=variant, chart=chart if chart is not None else make_tear_chart())


def z_eval(tf: TearField, p) -> np.ndarray:
    """Planar field value (module-level alias)."""
    return tf.value(p)


# ---------------------------------------------------------------------------
# Rotation about the x1-axis


@dataclass(frozen=True)
class RotatedField:
    """Planar tear field spun around the x1-axis into R^dim.

    Evaluation reduces the point to (x1, rho) with rho the transverse
    radius and pushes the planar value back along the radial direction.
    The axis is its own branch: the radial frame degenerates there and
    the field points straight along x1.
    """

    planar: TearField
    dim: int = 5

    def value(self, p) -> np.ndarray:
        x = np.asarray(p, dtype=float)
        if x.shape != (self.dim,):
            raise DomainError(
                f"rotated field expects {self.dim} coordinates, got {x.shape}"
            )
        out = np.zeros(self.dim)
        tail = x[1:]
        rho = math.sqrt(float(tail @ tail))
        if rho == 0.0:
            out[0] = _eta2(float(x[0]), 0.0)
            return out
        v = self.planar.value((float(x[0]), rho))
        out[0] = v[0]
        out[1:] = (v[1] / rho) * tail
        return out

    def __call__(self, t, p) -> np.ndarray:
        return self.value(p)


def rotate_field(planar: TearField, dim: int = 5) -> RotatedField:
    if dim < 2:
        raise DomainError(f"rotate_field: dim={dim} must be >= 2")
    return RotatedField(planar=planar, dim=dim)


def rotate_eval(rf: RotatedField, p) -> np.ndarray:
    """Rotated field value (module-level alias)."""
    return rf.value(p)


# ---------------------------------------------------------------------------
# Projections


@dataclass(frozen=True)
class ProjectionDelta:
    """Curve-collapsing projection and its rotational lift.

    The bottom band collapses to height 0 and each upper curve to the
    horizontal line at its own parameter; where the bands end (past the
    strip or above the ceiling) the height is the coordinate itself,
    which matches the band formulas in the limit since gamma0 vanishes
    there. The lift applies the same rule to the transverse radius and
    keeps the transverse direction.
    """

    chart: TearChart

    def height(self, x1: float, x2: float) -> float:
        c = self.chart.classify((x1, x2))
        if c.label == "U1":
            return 0.0
        if c.label == "outside":
            return x2
        return c.param

    def planar(self, p) -> np.ndarray:
        x1, x2 = float(p[0]), float(p[1])
        return np.array([x1, self.height(x1, x2)])

    def lifted(self, p) -> np.ndarray:
        x = np.asarray(p, dtype=float)
        out = np.zeros(x.size)
        out[0] = x[0]
        tail = x[1:]
        rho = math.sqrt(float(tail @ tail))
        if rho > 0.0:
            out[1:] = (self.height(float(x[0]), rho) / rho) * tail
        return out

    def __call__(self, p) -> np.ndarray:
        x = np.asarray(p, dtype=float)
        if x.size == 2:
            return self.planar(x)
        return self.lifted(x)


def make_projection(chart: Optional[TearChart] = None) -> ProjectionDelta:
    return ProjectionDelta(chart=chart if chart is not None else make_tear_chart())


# ---------------------------------------------------------------------------
# Semiconjugacy measurement


@dataclass(frozen=True)
class SemiconjugacyReport:
    """Sup deviation between the projected orbit and the straight flow."""

    residual: float
    excluded: int
    compared: int
    t_max: float

    def __float__(self) -> float:
        return float(self.residual)


def _map_samples(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def residual_grids(chart: Optional[TearChart] = None, n: int = 21) -> dict:
    """The three reference grids for the projection comparison.

    "axis" walks the base curve itself, "sigma" rides half a unit above
    the bump (the curve of constant offset b = 1/2), and "rho" follows
    the half-height curve inside the tongue. The first two span most of
    the strip; the tongue curve stays under the bump's support.
    """
    if chart is None:
        chart = make_tear_chart()
    if n < 2:
        raise DomainError(f"residual_grids: n={n} must be >= 2")
    span = np.linspace(-1.9, 1.9, n)
    half = np.linspace(-0.95, 0.95, n)
    return {
        "axis": [(float(s), 0.0) for s in span],
        "sigma": [(float(s), chart.g0(s) + 0.5) for s in span],
        "rho": [(float(s), chart.g0(s) / 2.0) for s in half],
    }


def semiconjugacy_residual(
    fieldlike,
    t_max: float,
    grid,
    tol: float = 1e-9,
    n_times: int = 33,
    threads: int = 1,
) -> SemiconjugacyReport:
    """Compare the projected orbit against the height-frozen motion.

    For each grid point the field orbit and the one-dimensional
    reference (x1 moving at the weight of the frozen height) are
    integrated side by side at the same tolerance and sampled at
    ``n_times`` times; the report holds the sup deviation of the
    projection across all kept samples. An orbit reaching |x1| = 1.95
    before t_max has left the region the curve bands describe, so that
    sample is dropped and counted instead. Samples are independent;
    ``threads`` only splits the loop, the reduction order is fixed.
    """
    if t_max <= 0.0:
        raise DomainError(f"semiconjugacy_residual: t_max={t_max!r} must be positive")
    if n_times < 2:
        raise DomainError(f"semiconjugacy_residual: n_times={n_times} must be >= 2")
    pts = [np.asarray(p, dtype=float) for p in grid]
    if not pts:
        raise DomainError("semiconjugacy_residual: empty grid")
    rotated = isinstance(fieldlike, RotatedField)
    chart = fieldlike.planar.chart if rotated else fieldlike.chart
    proj = ProjectionDelta(chart)
    exit_ev = EventSpec(
        fn=lambda t, y: _CHART_EXIT - abs(float(y[0])), direction=-1, terminal=True
    )
    ts = np.linspace(0.0, float(t_max), n_times)

    def one(x):
        if rotated:
            if x.shape != (fieldlike.dim,):
                raise DomainError(
                    f"semiconjugacy_residual: point has {x.shape} coordinates, "
                    f"expected ({fieldlike.dim},)"
                )
            tail = x[1:]
            rho = math.sqrt(float(tail @ tail))
            x1 = float(x[0])
            h = proj.height(x1, rho)
            target_tail = (h / rho) * tail if rho > 0.0 else np.zeros(x.size - 1)
        else:
            x1, x2 = float(x[0]), float(x[1])
            h = proj.height(x1, x2)
        traj = integrate(fieldlike, x, (0.0, float(t_max)), tol=tol, events=[exit_ev])
        if traj.status != "done":
            return None
        ref = integrate(
            lambda t, y: np.array([_eta2(float(y[0]), h)]),
            np.array([x1]),
            (0.0, float(t_max)),
            tol=tol,
            events=[exit_ev],
        )
        if ref.status != "done":
            return None
        ys = traj(ts)
        rs = ref(ts)
        dev = 0.0
        for k in range(len(ts)):
            if rotated:
                lift = proj.lifted(ys[k])
                dev = max(dev, abs(lift[0] - float(rs[k][0])))
                dev = max(dev, float(np.max(np.abs(lift[1:] - target_tail))))
            else:
                d = proj.planar(ys[k])
                dev = max(dev, abs(float(d[0]) - float(rs[k][0])))
                dev = max(dev, abs(float(d[1]) - h))
        return dev

    results = _map_samples(one, pts, threads)
    kept = [r for r in results if r is not None]
    if not kept:
        raise DomainError("semiconjugacy_residual: every sample left the chart")
    return SemiconjugacyReport(
        residual=max(kept),
        excluded=len(results) - len(kept),
        compared=len(kept),
        t_max=float(t_max),
    )


# ---------------------------------------------------------------------------
# Section crossings


def _crossing(fieldlike, seed, t_max, tol):
    """Integrate to the exit plane; (time, endpoint) or (None, None)."""
    ev = EventSpec(
        fn=lambda t, y: float(y[0]) - SECTION_X1, direction=1, terminal=True
    )
    traj = integrate(
        fieldlike, np.asarray(seed, dtype=float), (0.0, float(t_max)), tol=tol,
        events=[ev],
    )
    if traj.status != "event":
        return None, None
    return traj.t_end, traj.y_end


def _check_entry(seed):
    s = np.asarray(seed, dtype=float)
    if abs(float(s[0]) + SECTION_X1) > 1e-9:
        raise DomainError(
            f"entry seeds sit on x1 = {-SECTION_X1}; got x1 = {float(s[0])!r}"
        )
    return s


def section_samples(
    count: int,
    rho_min: float = 0.3,
    rho_max: float = 2.5,
    dim: int = 5,
    rng_seed: int = 0,
) -> np.ndarray:
    """Seeds on the entry plane with transverse radii in a band.

    Radii are spread evenly over [rho_min, rho_max] and directions drawn
    from the seeded generator. The crossing slows like the cube of the
    radius, so the lower cutoff keeps transit times bounded.
    """
    if count < 1:
        raise DomainError(f"section_samples: count={count} must be >= 1")
    if not 0.0 < rho_min <= rho_max:
        raise DomainError(
            f"section_samples: need 0 < rho_min <= rho_max, got "
            f"({rho_min!r}, {rho_max!r})"
        )
    if dim < 2:
        raise DomainError(f"section_samples: dim={dim} must be >= 2")
    rng = np.random.default_rng(rng_seed)
    radii = np.linspace(rho_min, rho_max, count) if count > 1 else np.array([rho_min])
    out = np.zeros((count, dim))
    out[:, 0] = -SECTION_X1
    for i in range(count):
        d = rng.normal(size=dim - 1)
        n = math.sqrt(float(d @ d))
        while n < 1e-12:
            d = rng.normal(size=dim - 1)
            n = math.sqrt(float(d @ d))
        out[i, 1:] = (radii[i] / n) * d
    return out


@dataclass(frozen=True)
class ReturnRatioReport:
    """Crossing-time ratios between two fields over shared seeds."""

    min_ratio: float
    max_ratio: float
    excluded: int
    compared: int


def return_ratio(
    field_a,
    field_b,
    samples,
    t_max: float = 400.0,
    tol: float = 1e-9,
    threads: int = 1,
) -> ReturnRatioReport:
    """Ratios tau_B / tau_A of entry-to-exit crossing times.

    Seeds sit on the entry plane; a seed that fails to reach the exit
    plane under either field within t_max (stagnation near the tongue,
    or a stiffness stop) is excluded and counted.
    """
    if t_max <= 0.0:
        raise DomainError(f"return_ratio: t_max={t_max!r} must be positive")
    seeds = [_check_entry(s) for s in samples]
    if not seeds:
        raise DomainError("return_ratio: no samples")

    def one(s):
        ta, _ = _crossing(field_a, s, t_max, tol)
        tb, _ = _crossing(field_b, s, t_max, tol)
        if ta is None or tb is None:
            return None
        return tb / ta

    results = _map_samples(one, seeds, threads)
    ratios = [r for r in results if r is not None]
    if not ratios:
        raise DomainError("return_ratio: every sample failed to cross")
    return ReturnRatioReport(
        min_ratio=min(ratios),
        max_ratio=max(ratios),
        excluded=len(results) - len(ratios),
        compared=len(ratios),
    )


@dataclass(frozen=True)
class MirrorReport:
    """Worst transverse displacement between entry and exit."""

    worst: float
    excluded: int
    compared: int


def mirror_return(
    fieldlike,
    samples,
    t_max: float = 400.0,
    tol: float = 1e-9,
    threads: int = 1,
) -> MirrorReport:
    """Transverse coordinates at the exit plane against the entry ones.

    The slope field is odd in x1 while the speed is even, so the exact
    crossing returns every transverse coordinate to its entry value; the
    report's worst case reads as integrator and event-refinement error.
    """
    if t_max <= 0.0:
        raise DomainError(f"mirror_return: t_max={t_max!r} must be positive")
    seeds = [_check_entry(s) for s in samples]
    if not seeds:
        raise DomainError("mirror_return: no samples")

    def one(s):
        _, end = _crossing(fieldlike, s, t_max, tol)
        if end is None:
            return None
        return float(np.max(np.abs(end[1:] - s[1:])))

    results = _map_samples(one, seeds, threads)
    kept = [r for r in results if r is not None]
    if not kept:
        raise DomainError("mirror_return: every sample failed to cross")
    return MirrorReport(
        worst=max(kept), excluded=len(results) - len(kept), compared=len(kept)
    )


# ---------------------------------------------------------------------------
# Embedded disk carriers


@dataclass(frozen=True)
class EmbeddedDiskFields:
    """Disk field glued into R^dim with an escape layer and ambient skin.

    Inside the flat unit disk the first two components reproduce the
    planar disk field bit for bit and the rest vanish. Between the disk
    and the open ball of radius sqrt(2) every trailing component equals
    the escape profile ``varsigma`` scaled by the positive speed blend,
    so the coordinate sum x3 + ... + xdim grows strictly and nothing
    recurs there. From the ball outward the field hands over to the
    ambient damped rotation across a matching shell of width 0.1.

    The profiles are cubed-hinge blends in the squared distance measure
    s = q^2 + (r^2 - 1)_+^3 (q the off-plane norm, r the planar
    radius): s vanishes exactly on the disk and stays above 0.615
    outside the ball, so the disk weight w = (1 - (s/0.6)^2)_+^3 is 1
    on the disk, 0 outside the ball, and the contact is C^2 at both
    ends without any exponential underflow.
    """

    variant: str  # "X1" (inverse-square strip speeds) or "X2" (dyadic)
    ladder: CircleLadder
    scaling: str
    dim: int
    alpha: SmoothFn = field(repr=False, default=None)
    ambient: AmbientField = field(repr=False, default=None)

    def _split(self, p):
        x = np.asarray(p, dtype=float)
        if x.shape != (self.dim,):
            raise DomainError(
                f"embedded field expects {self.dim} coordinates, got {x.shape}"
            )
        r2 = float(x[0]) ** 2 + float(x[1]) ** 2
        q2 = float(np.sum(x[2:] ** 2))
        return x, r2, q2

    def disk_distance(self, p) -> float:
        """Squared-scale separation from the flat unit disk."""
        _, r2, q2 = self._split(p)
        return q2 + max(r2 - 1.0, 0.0) ** 3

    def disk_weight(self, p) -> float:
        """1 exactly on the disk, 0 from distance 0.6 on."""
        v = self.disk_distance(p) / _SHELL_GAP
        if v >= 1.0:
            return 0.0
        return (1.0 - v * v) ** 3

    def varsigma(self, p) -> float:
        """Escape profile: 0 on the disk and outside the ball, positive between."""
        _, r2, q2 = self._split(p)
        s = q2 + max(r2 - 1.0, 0.0) ** 3
        cap = max(2.0 - (r2 + q2), 0.0)
        return s**1.5 * cap**3

    def beta_hat(self, p) -> float:
        """Speed blend: the strip profile on the disk, 1 outside the ball."""
        x, r2, q2 = self._split(p)
        v = (q2 + max(r2 - 1.0, 0.0) ** 3) / _SHELL_GAP
        if v >= 1.0:
            return 1.0
        w = (1.0 - v * v) ** 3
        prof = float(speed_profile(self.ladder, self.scaling, math.sqrt(r2)))
        return (1.0 - w) + w * prof

    def value(self, p) -> np.ndarray:
        x, r2, q2 = self._split(p)
        s = q2 + max(r2 - 1.0, 0.0) ** 3
        v = s / _SHELL_GAP
        w = 0.0 if v >= 1.0 else (1.0 - v * v) ** 3
        out = np.zeros(self.dim)
        if w > 0.0:
            b = (1.0 - w) + w * float(
                speed_profile(self.ladder, self.scaling, math.sqrt(r2))
            )
            a = float(self.alpha(min(r2, 1.0)))
            x1, x2 = float(x[0]), float(x[1])
            out[0] = b * (w * (-x2 + a * x1))
            out[1] = b * (w * (x1 + a * x2))
        else:
            b = 1.0
        cap = max(2.0 - (r2 + q2), 0.0)
        if cap > 0.0 and s > 0.0:
            out[2:] = b * (s**1.5 * cap**3)
        g = float(smoothstep_flat((math.sqrt(r2 + q2) - _SQRT2) / _PASS_RAMP))
        if g > 0.0:
            out += g * self.ambient.value(x)
        return out

    def __call__(self, t, p) -> np.ndarray:
        return self.value(p)


def make_embedded_field(
    variant: str = "X1",
    ladder: Optional[CircleLadder] = None,
    dim: int = 5,
) -> EmbeddedDiskFields:
    """Carrier for one of the two disk variants in R^dim (dim >= 3)."""
    if variant not in ("X1", "X2"):
        raise DomainError(f"make_embedded_field: unknown variant {variant!r}")
    if dim < 3:
        raise DomainError(f"make_embedded_field: dim={dim} must be >= 3")
    lad = ladder if ladder is not None else build_ladder()
    scaling = "inverse-square" if variant == "X1" else "dyadic"
    return EmbeddedDiskFields(
        variant=variant,
        ladder=lad,
        scaling=scaling,
        dim=dim,
        alpha=make_alpha0(lad),
        ambient=make_ambient_field(lad, scaling, dim),
    )


def embedded_eval(e: EmbeddedDiskFields, p) -> np.ndarray:
    """Embedded field value (module-level alias)."""
    return e.value(p)
