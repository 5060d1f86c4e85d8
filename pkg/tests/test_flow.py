"""Integrator behavior, disk fields, ambient extension, orbit readings."""

import math

import numpy as np
import pytest

import epflow.flow as flow
from epflow.disk import build_ladder
from epflow.errors import DomainError
from epflow.flow import (
    EventSpec,
    ambient_flatness,
    integrate,
    make_ambient_field,
    make_disk_field,
    orbit_period,
    radial_drift,
    speed_profile,
)


def test_tableau_consistency():
    # row sums of the stage matrix reproduce the nodes; both weight rows
    # sum to one
    for s in range(1, 7):
        assert float(np.sum(flow._A[s])) == pytest.approx(float(flow._C[s]), abs=1e-15)
    assert float(np.sum(flow._B5)) == pytest.approx(1.0, abs=1e-15)
    assert float(np.sum(flow._B4)) == pytest.approx(1.0, abs=1e-15)
    # the pair differs, otherwise there is no error estimate
    assert float(np.max(np.abs(flow._B5 - flow._B4))) > 1e-3


def test_integrate_exponential():
    traj = integrate(lambda t, y: y, np.array([1.0]), (0.0, 2.0), tol=1e-10)
    assert traj.status == "done"
    assert traj.y_end[0] == pytest.approx(math.exp(2.0), rel=1e-8)


def test_integrate_harmonic_return():
    f = lambda t, y: np.array([-y[1], y[0]])
    traj = integrate(f, np.array([1.0, 0.0]), (0.0, 2 * math.pi), tol=1e-11)
    assert traj.status == "done"
    assert traj.y_end == pytest.approx([1.0, 0.0], abs=1e-8)


def test_integrate_tolerance_scaling():
    f = lambda t, y: np.array([-y[1], y[0]])
    errs = []
    for tol in (1e-6, 1e-9):
        traj = integrate(f, np.array([1.0, 0.0]), (0.0, 2 * math.pi), tol=tol)
        errs.append(float(np.linalg.norm(traj.y_end - [1.0, 0.0])))
    assert errs[1] < errs[0]


def test_dense_output_between_nodes():
    # the dense interpolant is cubic, so its accuracy is set by step
    # size, not by the integration tolerance
    f = lambda t, y: np.array([math.cos(t)])
    traj = integrate(f, np.array([0.0]), (0.0, 3.0), tol=1e-9)
    ts = np.linspace(0.0, 3.0, 101)
    vals = traj(ts)[:, 0]
    assert np.allclose(vals, np.sin(ts), atol=1e-5)
    assert traj(1.5)[0] == pytest.approx(math.sin(1.5), abs=1e-5)
    # a step-size cap tightens it to the fourth power of the cap
    traj = integrate(f, np.array([0.0]), (0.0, 3.0), tol=1e-9, h_max=0.05)
    vals = traj(ts)[:, 0]
    assert np.allclose(vals, np.sin(ts), atol=1e-8)


def test_dense_output_domain_guard():
    traj = integrate(lambda t, y: y, np.array([1.0]), (0.0, 1.0))
    with pytest.raises(DomainError):
        traj(2.0)


def test_integrate_guards():
    with pytest.raises(DomainError):
        integrate(lambda t, y: y, np.array([1.0]), (1.0, 0.0))
    with pytest.raises(DomainError):
        integrate(lambda t, y: y, np.array([1.0]), (0.0, 1.0), tol=0.0)
    with pytest.raises(DomainError):
        integrate(lambda t, y: y, np.array([[1.0]]), (0.0, 1.0))


def test_left_domain_keeps_first_outside_point():
    traj = integrate(
        lambda t, y: np.array([1.0]),
        np.array([0.0]),
        (0.0, 10.0),
        inside=lambda y: y[0] < 0.5,
    )
    assert traj.status == "left-domain"
    assert traj.y_end[0] >= 0.5
    # everything before the exit node was still inside
    assert np.all(traj.ys[:-1, 0] < 0.5)


def test_stiffness_flag_near_blowup():
    f = lambda t, y: np.array([1.0 / (1.0 - t) ** 2])
    traj = integrate(f, np.array([0.0]), (0.0, 2.0), tol=1e-10, max_steps=200000)
    assert traj.status == "stiff"
    assert traj.t_end < 1.0


def test_max_steps_status():
    f = lambda t, y: np.array([-y[1], y[0]])
    traj = integrate(f, np.array([1.0, 0.0]), (0.0, 1e6), tol=1e-9, max_steps=50)
    assert traj.status == "max-steps"


def test_event_crossing():
    ev = EventSpec(fn=lambda t, y: y[0] - 1.0, direction=1, terminal=True)
    traj = integrate(
        lambda t, y: np.array([1.0]), np.array([0.0]), (0.0, 5.0), events=[ev]
    )
    assert traj.status == "event"
    assert traj.t_end == pytest.approx(1.0, abs=1e-9)
    assert len(traj.events) == 1


def test_event_direction_filter():
    # oscillator crosses y=0 twice per turn; falling-only sees one of them
    f = lambda t, y: np.array([-y[1], y[0]])
    ev = EventSpec(fn=lambda t, y: y[1], direction=-1, terminal=True)
    traj = integrate(f, np.array([1.0, 0.0]), (0.0, 10.0), tol=1e-10,
                     h_max=0.05, events=[ev])
    assert traj.status == "event"
    # first falling crossing of y[1] happens half a turn in
    assert traj.t_end == pytest.approx(math.pi, abs=1e-7)


def test_nonterminal_events_recorded():
    f = lambda t, y: np.array([-y[1], y[0]])
    ev = EventSpec(fn=lambda t, y: y[1], direction=0, terminal=False)
    traj = integrate(f, np.array([1.0, 0.0]), (0.0, 2 * math.pi), tol=1e-10,
                     events=[ev])
    assert traj.status == "done"
    assert len(traj.events) == 2


# ---------------------------------------------------------------------------
# Speed profiles


def test_speed_profile_unit():
    lad = build_ladder(4)
    rs = np.linspace(0.0, 1.0, 41)
    assert np.all(speed_profile(lad, "unit", rs) == 1.0)


def test_speed_profile_strip_values():
    lad = build_ladder(4)
    assert speed_profile(lad, "inverse-square", 0.5) == 0.25
    assert speed_profile(lad, "inverse-square", 1.0 / 3.0) == pytest.approx(1.0 / 9.0)
    assert speed_profile(lad, "dyadic", 0.5) == 2.0**-4
    assert speed_profile(lad, "dyadic", 0.25) == 2.0**-16
    # outside all strips and their ramps
    assert speed_profile(lad, "inverse-square", 0.42) == 1.0
    assert speed_profile(lad, "inverse-square", 0.9) == 1.0
    # 0.45 sits on the ramp of the outermost strip
    v = speed_profile(lad, "inverse-square", 0.45)
    assert 0.25 < v < 1.0


def test_speed_profile_ramp_monotone():
    lad = build_ladder(4)
    # walk outward from the strip at 1/2 through its ramp
    l = 1.0 / 6.0
    rs = np.linspace(0.5 + l / 4.0, 0.5 + 3.0 * l / 8.0, 33)
    vals = speed_profile(lad, "inverse-square", rs)
    assert vals[0] == 0.25
    assert vals[-1] == 1.0
    assert np.all(np.diff(vals) >= 0.0)


def test_speed_profile_guard():
    lad = build_ladder(4)
    with pytest.raises(DomainError):
        speed_profile(lad, "cubic", 0.5)


# ---------------------------------------------------------------------------
# Disk fields


def test_disk_field_value_on_center_circle():
    lad = build_ladder(4)
    z1 = make_disk_field(lad, "inverse-square")
    v = z1.value(np.array([0.5, 0.0]))
    assert v[0] == 0.0
    assert v[1] == 0.125  # exact: quarter speed times radius one-half


def test_disk_field_unit_value():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    v = z0.value(np.array([0.5, 0.0]))
    assert v[0] == 0.0 and v[1] == 0.5
    # origin is a rest point
    assert np.all(z0.value(np.zeros(2)) == 0.0)
    # boundary circle turns at unit speed
    v = z0.value(np.array([0.0, 1.0]))
    assert v == pytest.approx([-1.0, 0.0], abs=1e-15)


def test_orbit_period_unit():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    T, gap = orbit_period(z0, np.array([0.5, 0.0]), tol=1e-11)
    assert T == pytest.approx(2 * math.pi, rel=1e-8)
    assert gap < 1e-7


def test_orbit_period_inverse_square():
    lad = build_ladder(4)
    z1 = make_disk_field(lad, "inverse-square")
    T, gap = orbit_period(z1, np.array([0.5, 0.0]), tol=1e-11)
    assert T == pytest.approx(8 * math.pi, rel=1e-8)
    assert gap < 1e-6


def test_orbit_period_boundary():
    lad = build_ladder(4)
    z1 = make_disk_field(lad, "inverse-square")
    T, gap = orbit_period(z1, np.array([1.0, 0.0]), tol=1e-11)
    assert T == pytest.approx(2 * math.pi, rel=1e-8)


def test_circle_orbit_stays_circular():
    lad = build_ladder(4)
    z1 = make_disk_field(lad, "inverse-square")
    traj = integrate(z1, np.array([0.5, 0.0]), (0.0, 8 * math.pi), tol=1e-11)
    assert radial_drift(traj) < 1e-8


def test_between_circles_spirals_outward():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    traj = integrate(z0, np.array([0.7, 0.0]), (0.0, 2 * math.pi), tol=1e-10)
    r_end = float(np.linalg.norm(traj.y_end))
    assert r_end > 0.7 + 1e-5
    assert r_end < 1.0


def test_orbit_period_guard():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    with pytest.raises(DomainError):
        orbit_period(z0, np.zeros(2))


# ---------------------------------------------------------------------------
# Ambient extension


def test_ambient_restricts_to_planar():
    lad = build_ladder(4)
    z1 = make_disk_field(lad, "inverse-square")
    az = make_ambient_field(lad, "inverse-square", dim=4)
    for xy in ([0.5, 0.0], [0.3, 0.2], [0.0, 0.9]):
        planar = z1.value(np.array(xy))
        amb = az.value(np.array(xy + [0.0, 0.0]))
        assert amb[:2] == pytest.approx(planar, abs=1e-15)
        assert np.all(amb[2:] == 0.0)


def test_ambient_trailing_components_zero():
    lad = build_ladder(4)
    az = make_ambient_field(lad, "unit", dim=5)
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.normal(scale=0.8, size=5)
        assert np.all(az.value(x)[2:] == 0.0)


def test_ambient_vanishes_far_away():
    lad = build_ladder(4)
    az = make_ambient_field(lad, "unit", dim=3)
    x = np.array([0.5, 0.0, 4.5])
    assert np.all(az.value(x) == 0.0)


def test_ambient_damps_off_disk():
    lad = build_ladder(4)
    az = make_ambient_field(lad, "unit", dim=3)
    on = np.linalg.norm(az.value(np.array([0.5, 0.0, 0.0])))
    off = np.linalg.norm(az.value(np.array([0.5, 0.0, 1.0])))
    assert off < on
    assert off == pytest.approx(on * math.exp(-1.0), rel=1e-6)


def test_ambient_flatness_reading():
    lad = build_ladder(4)
    az = make_ambient_field(lad, "inverse-square", dim=4)
    # the deviation scales as h^2, so the scaled reading stays bounded
    dev = ambient_flatness(az, (0.5, 0.0), h=1e-4)
    assert dev < 1.0


def test_ambient_guards():
    lad = build_ladder(4)
    with pytest.raises(DomainError):
        make_ambient_field(lad, "unit", dim=2)
    az = make_ambient_field(lad, "unit", dim=3)
    with pytest.raises(DomainError):
        az.value(np.zeros(4))


# ---------------------------------------------------------------------------
# Period detection and sections


def test_detect_period_strip_orbit():
    lad = build_ladder(6)
    z1 = make_disk_field(lad, "inverse-square")
    T = flow.detect_period(z1, (0.5, 0.0), 25.0, tol=1e-6)
    assert T == pytest.approx(8 * math.pi, rel=1e-6)


def test_detect_period_boundary_orbit():
    lad = build_ladder(6)
    z0 = make_disk_field(lad, "unit")
    T = flow.detect_period(z0, (1.0, 0.0), 6.0, tol=1e-6)
    assert T == pytest.approx(2 * math.pi, abs=1e-6)


def test_detect_period_fixed_point():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    assert flow.detect_period(z0, (0.0, 0.0), 5.0) == 0.0


def test_detect_period_non_returning():
    drift = lambda t, y: np.array([1.0, 0.0])
    assert flow.detect_period(drift, (0.0, 0.0), 5.0) is None


def test_detect_period_closure_stable_under_tol():
    # halving the closure tolerance must never worsen the actual closure
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    errs = []
    tol = 1e-5
    for _ in range(4):
        T = flow.detect_period(z0, (1.0, 0.0), 6.0, tol=tol)
        traj = integrate(z0, np.array([1.0, 0.0]), (0.0, T), tol=1e-12,
                         h_max=0.01)
        errs.append(float(np.linalg.norm(traj.y_end - np.array([1.0, 0.0]))))
        tol /= 2
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_detect_period_guards():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    with pytest.raises(DomainError):
        flow.detect_period(z0, (1.0, 0.0), 0.0)
    with pytest.raises(DomainError):
        flow.detect_period(z0, (1.0, 0.0), 6.0, tol=0.0)


def test_section_spec_guards():
    with pytest.raises(DomainError):
        flow.SectionSpec(normal=(1.0, 1.0))
    with pytest.raises(DomainError):
        flow.SectionSpec(normal=(1.0, 0.0), orientation=2)


def test_first_return_half_rotation():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    sec = flow.SectionSpec(normal=(0.0, 1.0), offset=0.0, orientation=-1)
    res = flow.first_return(z0, (1.0, 0.0), sec, 20.0)
    assert res.status == "hit"
    assert res.tau == pytest.approx(math.pi, abs=1e-6)
    assert res.point == pytest.approx([-1.0, 0.0], abs=1e-6)
    # the rising crossing is the full turn
    sec_up = flow.SectionSpec(normal=(0.0, 1.0), offset=0.0, orientation=1)
    res_up = flow.first_return(z0, (1.0, 0.0), sec_up, 20.0)
    assert res_up.tau == pytest.approx(2 * math.pi, abs=1e-6)


def test_first_return_constant_transit():
    left = lambda t, y: np.array([-1.0, 0.0, 0.0])
    sec = flow.SectionSpec(normal=(1.0, 0.0, 0.0), offset=-3.0, orientation=-1)
    res = flow.first_return(left, (3.0, 0.0, 0.0), sec, 10.0)
    assert res.status == "hit"
    assert res.tau == pytest.approx(6.0, abs=1e-9)
    assert res.point == pytest.approx([-3.0, 0.0, 0.0], abs=1e-9)


def test_first_return_stagnation():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    sec = flow.SectionSpec(normal=(0.0, 1.0))
    res = flow.first_return(z0, (0.0, 0.0), sec, 5.0)
    assert res.status == "stagnation"
    assert res.point is None and res.tau is None


def test_first_return_no_crossing():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    sec = flow.SectionSpec(normal=(1.0, 0.0), offset=3.0)
    assert flow.first_return(z0, (1.0, 0.0), sec, 10.0).status == "none"


# ---------------------------------------------------------------------------
# Occupation times


def test_occupation_whole_chart():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    res = flow.occupation(z0, (1.0, 0.0), 5.0, lambda y: True)
    assert res.j == pytest.approx(5.0, abs=1e-9)
    assert res.lam is None


def test_occupation_upper_half_turn():
    # uniform rotation spends half of each turn above the axis
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    res = flow.occupation(z0, (1.0, 0.0), 2 * math.pi, lambda y: y[1] > 0.0)
    assert res.j == pytest.approx(math.pi, abs=1e-6)
    assert 0.0 <= res.j <= res.t_total


def test_occupation_additive_over_disjoint_regions():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    x0, t = (1.0, 0.0), 7.3
    in_a = lambda y: y[1] > 0.0
    in_b = lambda y: y[1] <= 0.0 and y[0] < 0.0
    union = lambda y: in_a(y) or in_b(y)
    ja = flow.occupation(z0, x0, t, in_a).j
    jb = flow.occupation(z0, x0, t, in_b).j
    ju = flow.occupation(z0, x0, t, union).j
    assert ju == pytest.approx(ja + jb, abs=1e-8)


def test_occupation_constant_slowdown_weighting():
    # scaling the field by 1/20 inside the region stretches exactly the
    # inside pieces by 20
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    t = 2 * math.pi
    region = lambda y: y[1] > 0.0
    plain = flow.occupation(z0, (1.0, 0.0), t, region)
    slowed = flow.occupation(z0, (1.0, 0.0), t, region,
                             speed_factor=lambda y: 1.0 / 20.0)
    assert slowed.lam == pytest.approx(20.0 * plain.j + (t - plain.j), rel=1e-9)
    assert slowed.lam >= plain.j / 20.0


def test_occupation_guards():
    lad = build_ladder(4)
    z0 = make_disk_field(lad, "unit")
    with pytest.raises(DomainError):
        flow.occupation(z0, (1.0, 0.0), 0.0, lambda y: True)
    with pytest.raises(DomainError):
        flow.occupation(z0, (1.0, 0.0), 1.0, lambda y: True,
                        speed_factor=lambda y: 0.0)


def test_flow_semigroup_property():
    # integrate(s + t) lands where integrate(s) then integrate(t) lands
    lad = build_ladder(6)
    z1 = make_disk_field(lad, "inverse-square")
    rng = np.random.default_rng(7)
    tol = 1e-9
    for _ in range(8):
        th = rng.uniform(0.0, 2 * np.pi)
        r = rng.uniform(0.3, 0.95)
        x0 = np.array([r * np.cos(th), r * np.sin(th)])
        s, t = rng.uniform(0.5, 3.0, 2)
        whole = integrate(z1, x0, (0.0, s + t), tol=tol)
        part = integrate(z1, x0, (0.0, s), tol=tol)
        rest = integrate(z1, part.y_end, (0.0, t), tol=tol)
        assert np.linalg.norm(whole.y_end - rest.y_end) <= 10.0 * tol


# ---------------------------------------------------------------------------
# Separated-set estimates


def _rigid_rotation(t, y):
    return np.array([-y[1], y[0]])


def test_separated_isometric_rotation_decays_in_t():
    ang = np.linspace(0.0, 2 * np.pi, 17)[:-1]
    seeds = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    hs = []
    for t in (2.0, 4.0, 8.0):
        est = flow.separated_entropy(_rigid_rotation, seeds, t, 0.2)
        assert est.h_estimate <= math.log(len(seeds)) / t + 1e-12
        hs.append(est.h_estimate)
    assert hs[0] > hs[1] > hs[2]


def test_separated_single_seed():
    est = flow.separated_entropy(_rigid_rotation, [[1.0, 0.0]], 3.0, 0.1)
    assert est.cardinality == 1
    assert est.h_estimate == 0.0
    assert est.indices == (0,)


def test_separated_monotone_in_eps_and_t():
    hyperbolic = lambda t, y: np.array([y[0], -y[1]])
    rng = np.random.default_rng(11)
    seeds = rng.uniform(0.5, 1.5, size=(40, 2))
    cards_eps = [
        flow.separated_entropy(hyperbolic, seeds, 2.0, eps).cardinality
        for eps in (0.1, 0.3, 0.9)
    ]
    assert cards_eps == sorted(cards_eps, reverse=True)
    cards_t = [
        flow.separated_entropy(hyperbolic, seeds, t, 0.9).cardinality
        for t in (1.0, 2.0, 4.0)
    ]
    assert cards_t == sorted(cards_t)


def test_separated_exact_sampler_matches_integration():
    rng = np.random.default_rng(3)
    ang = rng.uniform(0.0, 2 * np.pi, size=12)
    seeds = np.stack([np.cos(ang), np.sin(ang)], axis=1)

    def sampler(pts, times):
        th = np.arctan2(pts[:, 1], pts[:, 0])[:, None] + times[None, :]
        return np.stack([np.cos(th), np.sin(th)], axis=2)

    exact = flow.separated_entropy(_rigid_rotation, seeds, 5.0, 0.25,
                                   sampler=sampler)
    numeric = flow.separated_entropy(_rigid_rotation, seeds, 5.0, 0.25)
    assert exact.indices == numeric.indices
    assert exact.cardinality == numeric.cardinality


def test_separated_guards():
    with pytest.raises(DomainError):
        flow.separated_entropy(_rigid_rotation, [[1.0, 0.0]], 0.5, 0.1)
    with pytest.raises(DomainError):
        flow.separated_entropy(_rigid_rotation, [[1.0, 0.0]], 2.0, 0.0)
    with pytest.raises(DomainError):
        flow.separated_entropy(_rigid_rotation, np.empty((0, 2)), 2.0, 0.1)
