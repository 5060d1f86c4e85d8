"""Nested circle ladder in the unit disk and its orbit bookkeeping.

The ladder places a strip around each radius 1/i (i >= 2) and fills it
with a doubly exponential grid of concentric circles. Every circle is an
exact rational radius; census arithmetic runs on exact integer counts, so
the doubly exponential growth never loses precision. Floating-point views
of the ladder collapse grids whose spacing falls below float resolution,
and the collapse is tracked per strip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DomainError

__all__ = [
    "Strip",
    "CircleLadder",
    "CensusEntry",
    "radius",
    "halfwidth",
    "grid_count",
    "grid_spacing",
    "grid_radii",
    "strip_interval",
    "build_ladder",
    "strip_period",
    "census_entries",
    "orbit_census",
    "sphere_census",
    "ep_rate",
    "ep_curve",
    "SCALINGS",
]

SCALINGS = ("unit", "inverse-square", "dyadic")

# Exact enumeration of a strip grid is quadratic-exponential in i; past
# this index the count exceeds 10^9 and only collapsed float views exist.
_ENUM_LIMIT = 4


def radius(i: int) -> Fraction:
    """Center radius of strip i (i >= 2): exactly 1/i."""
    if i < 2:
        raise DomainError(f"radius: strip index {i} must be >= 2")
    return Fraction(1, i)


def halfwidth(i: int) -> Fraction:
    """Width scale l_i: the smaller gap to a neighboring center radius.

    l_2 = 1/6; for i >= 3 the inward gap 1/(i(i+1)) is the smaller one.
    """
    if i < 2:
        raise DomainError(f"halfwidth: strip index {i} must be >= 2")
    inward = radius(i) - Fraction(1, i + 1)
    outward = (Fraction(1, 1) if i == 2 else radius(i - 1)) - radius(i)
    return min(inward, outward)


def grid_count(i: int) -> int:
    """Number of grid circles in strip i: 2^(2^i + 1) + 1."""
    if i < 2:
        raise DomainError(f"grid_count: strip index {i} must be >= 2")
    return 2 ** (2**i + 1) + 1


def grid_spacing(i: int) -> Fraction:
    """Exact gap between neighboring grid circles: l_i / 2^(2^(i+2))."""
    return halfwidth(i) / 2 ** (2 ** (i + 2))


def grid_radii(i: int) -> list:
    """All grid radii of strip i, exact and decreasing.

    Only available through i = 4 (131073 circles); larger strips are
    astronomically large and must be consumed through counts or the
    collapsed float view.
    """
    if i > _ENUM_LIMIT:
        raise DomainError(
            f"grid_radii: strip {i} holds {grid_count(i)} circles; "
            f"exact enumeration stops at i = {_ENUM_LIMIT}"
        )
    a = radius(i)
    s = grid_spacing(i)
    jmax = 2**2**i
    return [a + j * s for j in range(jmax, -jmax - 1, -1)]


def strip_interval(i: int) -> tuple:
    """Exact closed interval [a_i - l_i/4, a_i + l_i/4] of strip i."""
    a = radius(i)
    q = halfwidth(i) / 4
    return (a - q, a + q)


@dataclass(frozen=True)
class Strip:
    """One ladder strip: its exact geometry plus the collapsed float view.

    ``floats`` holds the distinct float radii of the grid, descending.
    ``collapsed`` is set when that list is shorter than the exact count.
    """

    index: int
    center: Fraction
    width: Fraction
    spacing: Fraction
    count: int
    floats: tuple
    collapsed: bool

    @property
    def interval(self) -> tuple:
        q = self.width / 4
        return (self.center - q, self.center + q)


def _float_grid(i: int) -> tuple:
    """Distinct float radii of strip i, descending."""
    if i <= _ENUM_LIMIT and grid_count(i) <= 2**17 + 1:
        vals = sorted({float(b) for b in grid_radii(i)}, reverse=True)
        return tuple(vals)
    # Spacing is far below one ulp here, so the grid covers every
    # representable float between its exact endpoints.
    a = radius(i)
    extent = (2**2**i) * grid_spacing(i)
    lo = float(a - extent)
    hi = float(a + extent)
    vals = []
    v = hi
    while v >= lo:
        vals.append(v)
        v = np.nextafter(v, -np.inf)
    return tuple(vals)


@lru_cache(maxsize=None)
def build_ladder(i_max: int = 6) -> "CircleLadder":
    """Ladder with strips 2..i_max (inclusive). Ladders are immutable and
    construction of the wide strips is not free, so results are cached."""
    if i_max < 2:
        raise DomainError(f"build_ladder: i_max={i_max} must be >= 2")
    strips = []
    for i in range(2, i_max + 1):
        floats = _float_grid(i)
        strips.append(
            Strip(
                index=i,
                center=radius(i),
                width=halfwidth(i),
                spacing=grid_spacing(i),
                count=grid_count(i),
                floats=floats,
                collapsed=len(floats) < grid_count(i),
            )
        )
    return CircleLadder(i_max=i_max, strips=tuple(strips))


@dataclass(frozen=True)
class CircleLadder:
    """Strips 2..i_max plus the unit boundary circle."""

    i_max: int
    strips: tuple

    def strip(self, i: int) -> Strip:
        if not 2 <= i <= self.i_max:
            raise DomainError(f"strip index {i} outside 2..{self.i_max}")
        return self.strips[i - 2]

    def total_grid_circles(self) -> int:
        return sum(s.count for s in self.strips)

    def float_circles(self) -> np.ndarray:
        """Distinct float radii of every circle, descending, with 1.0."""
        vals = [1.0]
        for s in self.strips:
            vals.extend(s.floats)
        return np.asarray(vals)

    def circle_squares(self) -> np.ndarray:
        """Ascending squares of the float circles, with 0.0 and 1.0.

        This is the breakpoint array the radial speed factor brackets
        its argument against; 0.0 stands in for the accumulation point
        of the untruncated ladder.
        """
        sq = sorted({float(v) * float(v) for v in self.float_circles()})
        return np.asarray([0.0] + sq[:-1] + [1.0])

    def strip_of(self, r: float) -> Optional[int]:
        """Index of the strip whose closed interval contains r, if any."""
        for s in self.strips:
            lo, hi = s.interval
            if float(lo) <= r <= float(hi):
                return s.index
        return None


# ---------------------------------------------------------------------------
# Orbit census


def strip_period(i: int, scaling: str) -> float:
    """Closed-orbit period on the circles of strip i under a speed scaling.

    unit: every circle turns in 2*pi. inverse-square: the strip speed is
    (1/i)^2, stretching the period to 2*pi*i^2. dyadic: the strip speed
    is 2^(-2^i), stretching it to 2*pi*2^(2^i) (inf once that overflows).
    """
    if i < 2:
        raise DomainError(f"strip_period: strip index {i} must be >= 2")
    if scaling == "unit":
        return 2.0 * math.pi
    if scaling == "inverse-square":
        return 2.0 * math.pi * i * i
    if scaling == "dyadic":
        try:
            return 2.0 * math.pi * float(2 ** 2**i)
        except OverflowError:
            return math.inf
    raise DomainError(f"strip_period: unknown scaling {scaling!r}; use {SCALINGS}")


@dataclass(frozen=True)
class CensusEntry:
    kind: str  # "strip", "boundary", or "origin"
    index: Optional[int]
    period: float
    count: int


def census_entries(
    ladder: CircleLadder,
    scaling: str,
    t: float,
    include_origin: bool = True,
    include_boundary: bool = True,
) -> list:
    """Orbit families with period at most t, one entry per family.

    The origin is a rest point and counts from t = 0 when included. The
    unit boundary circle always turns at unit speed (the speed profile
    is 1 outside the strips), so it enters at t = 2*pi.
    """
    if not t >= 0.0:
        raise DomainError(f"census_entries: t={t!r} must be nonnegative")
    out = []
    if include_origin:
        out.append(CensusEntry(kind="origin", index=None, period=0.0, count=1))
    if include_boundary and t >= 2.0 * math.pi:
        out.append(
            CensusEntry(kind="boundary", index=None, period=2.0 * math.pi, count=1)
        )
    for s in ladder.strips:
        p = strip_period(s.index, scaling)
        if p <= t:
            out.append(
                CensusEntry(kind="strip", index=s.index, period=p, count=s.count)
            )
    return out


def orbit_census(
    ladder: CircleLadder,
    scaling: str,
    t: float,
    include_origin: bool = True,
    include_boundary: bool = True,
) -> int:
    """Total orbit count with period at most t (exact integer)."""
    return sum(
        e.count
        for e in census_entries(
            ladder,
            scaling,
            t,
            include_origin=include_origin,
            include_boundary=include_boundary,
        )
    )


def sphere_census(ladder: CircleLadder, scaling: str, t: float) -> int:
    """Census after doubling the disk across its boundary.

    Interior circles appear in both hemispheres, the boundary becomes a
    single equator, and the two disk centers become the poles.
    """
    interior = orbit_census(
        ladder, scaling, t, include_origin=False, include_boundary=False
    )
    equator = 1 if t >= 2.0 * math.pi else 0
    return 2 * interior + equator + 2


def ep_rate(
    ladder: CircleLadder,
    scaling: str,
    t: float,
    sphere: bool = False,
) -> float:
    """Exponential growth reading log(census(t)) / t.

    The census is at least 1 for every t >= 0 (the rest points), so the
    logarithm is always defined; the rate at t = 0 is reported as 0.
    """
    if t <= 0.0:
        if t == 0.0:
            return 0.0
        raise DomainError(f"ep_rate: t={t!r} must be nonnegative")
    n = (
        sphere_census(ladder, scaling, t)
        if sphere
        else orbit_census(ladder, scaling, t)
    )
    # math.log accepts arbitrarily large exact integers
    return math.log(n) / t if n > 0 else 0.0


def ep_curve(ladder: CircleLadder, scaling: str, ts, sphere: bool = False):
    """Vector of growth readings over a time grid."""
    return np.asarray([ep_rate(ladder, scaling, float(t), sphere=sphere) for t in ts])
