"""Bump-function toolkit: closed forms, flatness, profiles, integrals."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epflow.bumps import (
    FlatnessReport,
    GSeries,
    SmoothFn,
    adaptive_simpson,
    ball_volume,
    build_w,
    deriv,
    flatness_report,
    gamma0,
    gamma0_prime,
    integral_reciprocal,
    make_constant,
    make_eta,
    make_gamma0,
    make_omega_hat1,
    make_psi,
    make_radial_w,
    make_vhat0,
    psi,
    smoothstep_flat,
    smoothstep_quintic,
    sphere_area,
    vhat0,
)
from epflow.errors import DivergenceSignal, DomainError

# Reference scalar transcriptions, kept deliberately naive. The module
# implementations must agree with these everywhere they are defined.


def _psi_ref(t):
    return math.exp(-1.0 / t) if t > 0 else 0.0


def _gamma0_ref(s):
    return math.exp(1.0 / (s * s - 1.0)) if abs(s) < 1 else 0.0


def _g_ref(t, betas):
    total = 0.0
    for i in range(1, len(betas) + 1):
        c = 1.0 / (i + 1)
        total += 2.0 ** (-i - 1) * betas[i - 1] * _psi_ref(t - c)
    return total


def test_psi_matches_reference():
    ts = np.linspace(-0.5, 1.0, 301)
    got = psi(ts)
    want = [_psi_ref(float(t)) for t in ts]
    # vector exp and libm exp may differ in the last bit
    assert np.allclose(got, want, rtol=5e-16, atol=0)


def test_psi_values():
    assert psi(0.0) == 0.0
    assert psi(-0.3) == 0.0
    assert psi(1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    # d/dt exp(-1/t) at t = 1/2 is 4 exp(-2)
    fd = (psi(0.5 + 1e-6) - psi(0.5 - 1e-6)) / 2e-6
    assert fd == pytest.approx(4.0 * math.exp(-2.0), rel=1e-8)


def test_gamma0_matches_reference():
    ss = np.linspace(-1.5, 1.5, 301)
    got = gamma0(ss)
    want = [_gamma0_ref(float(s)) for s in ss]
    assert np.allclose(got, want, rtol=5e-16, atol=0)


def test_gamma0_peak_and_support():
    assert gamma0(0.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert gamma0(1.0) == 0.0
    assert gamma0(-1.0) == 0.0
    assert gamma0(2.0) == 0.0
    assert gamma0(0.99) > 0.0
    # closer to the edge the exponent underflows to an exact zero
    assert gamma0(0.999999) == 0.0


def test_gamma0_prime_matches_finite_difference():
    for s in (-0.9, -0.5, 0.0, 0.3, 0.7):
        fd = (gamma0(s + 1e-6) - gamma0(s - 1e-6)) / 2e-6
        assert gamma0_prime(s) == pytest.approx(fd, rel=1e-7, abs=1e-12)
    assert gamma0_prime(1.5) == 0.0


def test_gamma0_prime_sign():
    # increasing left of the peak, decreasing right of it
    assert gamma0_prime(-0.5) > 0.0
    assert gamma0_prime(0.5) < 0.0
    assert gamma0_prime(0.0) == 0.0


@given(st.floats(min_value=1e-6, max_value=1.0), st.floats(min_value=1e-6, max_value=1.0))
def test_psi_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert psi(lo) <= psi(hi)


def test_smoothstep_flat_clauses():
    assert smoothstep_flat(0.0) == 0.0
    assert smoothstep_flat(-2.0) == 0.0
    assert smoothstep_flat(1.0) == 1.0
    assert smoothstep_flat(3.0) == 1.0
    assert smoothstep_flat(0.5) == pytest.approx(0.5, rel=1e-15)
    us = np.linspace(-0.2, 1.2, 57)
    vals = smoothstep_flat(us)
    assert np.all(np.diff(vals) >= 0.0)
    # complementary symmetry
    assert np.allclose(vals + smoothstep_flat(1.0 - us), 1.0, atol=1e-14)


def test_smoothstep_flat_is_flat_at_ends():
    h = SmoothFn(kind="step", domain_dim=1, impl=smoothstep_flat)
    for x in (0.0, 1.0):
        rep = flatness_report(h, x, max_order=3)
        assert isinstance(rep, FlatnessReport)
        assert rep.passed, rep


def test_smoothstep_quintic():
    assert smoothstep_quintic(0.0) == 0.0
    assert smoothstep_quintic(1.0) == 1.0
    assert smoothstep_quintic(0.5) == pytest.approx(0.5, rel=1e-15)
    # first derivative vanishes at both ends
    for x in (0.0, 1.0):
        fd = (smoothstep_quintic(x + 1e-5) - smoothstep_quintic(x - 1e-5)) / 2e-5
        assert abs(fd) < 1e-8


def test_psi_handle_domain():
    h = make_psi()
    assert h(0.5) == pytest.approx(_psi_ref(0.5), rel=1e-15)
    with pytest.raises(DomainError):
        h(-1.0)
    with pytest.raises(DomainError):
        h(1.5)


def test_psi_handle_flat_at_zero():
    rep = flatness_report(make_psi(), 0.0, max_order=3)
    assert rep.passed


def test_gamma0_handle_flat_at_support_edge():
    rep = flatness_report(make_gamma0(), 1.0, max_order=3)
    assert rep.passed
    rep = flatness_report(make_gamma0(), -1.0, max_order=3)
    assert rep.passed


def test_deriv_orders():
    h = make_gamma0()
    assert deriv(h, 0.3, order=1, step=1e-5) == pytest.approx(
        gamma0_prime(0.3), rel=1e-6
    )
    with pytest.raises(DomainError):
        deriv(h, 0.3, order=5)
    with pytest.raises(DomainError):
        deriv(h, 0.3, step=0.0)


def test_deriv_multivariate_direction():
    h = make_omega_hat1(dim=5)
    x = np.array([0.2, 0.0, 0.0, 0.0, 0.0])
    # inside radius 1/2 the function is exactly |x|^2
    assert deriv(h, x, order=1, step=1e-5) == pytest.approx(0.4, rel=1e-6)
    d = np.array([0.0, 1.0, 0.0, 0.0, 0.0])
    assert deriv(h, x, order=1, step=1e-5, direction=d) == pytest.approx(
        0.0, abs=1e-9
    )


# ---------------------------------------------------------------------------
# GSeries / RadialW


def test_gseries_validation():
    with pytest.raises(DomainError):
        GSeries(betas=(0.5, 0.25), cs=(0.5, 1.0 / 3.0))
    with pytest.raises(DomainError):
        GSeries(betas=(1.0, 1.0), cs=(0.5, 1.0 / 3.0))
    with pytest.raises(DomainError):
        GSeries(betas=(1.0, -0.5), cs=(0.5, 1.0 / 3.0))
    with pytest.raises(DomainError):
        GSeries(betas=(1.0, 0.5), cs=(0.5,))


def test_gseries_matches_reference():
    betas = (1.0, 0.5, 0.25, 0.125)
    gs = GSeries(betas=betas, cs=tuple(1.0 / (i + 1) for i in range(1, 5)))
    for t in np.linspace(0.0, 0.5, 41):
        assert gs.series(float(t)) == pytest.approx(
            _g_ref(float(t), betas), rel=1e-14, abs=1e-300
        )


def test_gseries_truncation_monotone():
    betas = (1.0, 0.5, 0.25, 0.125, 0.0625)
    gs = GSeries(betas=betas, cs=tuple(1.0 / (i + 1) for i in range(1, 6)))
    t = 0.4
    vals = [gs.series(t, n_terms=n) for n in range(1, 6)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_gseries_blend_reaches_one():
    gs = GSeries(betas=(1.0, 0.5), cs=(0.5, 1.0 / 3.0))
    assert gs.g(1.0) == 1.0
    assert gs.g(1.7) == 1.0
    assert gs.g(2.0) == 1.0
    # below the blend the series value is unchanged
    assert gs.g(0.3) == gs.series(0.3)


def test_build_w_ball_bounds():
    betas = (1.0, 0.5, 0.25, 0.125)
    w = build_w(betas, dim=5)
    # sup over the ball of radius 1/(i+1) stays at or below beta_(i-1)
    for i, bound in ((1, 1.0), (2, 0.5), (3, 0.25), (4, 0.125)):
        radius = 1.0 / (i + 1)
        ts = np.linspace(0.0, radius, 2001)
        sup = float(np.max(np.asarray(w.radial(ts))))
        assert sup <= bound + 1e-15, (i, sup, bound)


def test_build_w_positive_off_plateau():
    w = build_w((1.0, 0.5), dim=5, n_terms=60)
    ts = np.linspace(0.02, 2.0, 500)
    assert np.all(np.asarray(w.radial(ts)) > 0.0)
    # truncation plateau: exact zero below the smallest shift
    assert w.radial(0.005) == 0.0
    assert w.radial(0.0) == 0.0


def test_build_w_equals_one_outside_unit_ball():
    w = build_w((1.0, 0.5), dim=5)
    for t in (1.0, 1.3, 2.0):
        assert w.radial(t) == 1.0


def test_radial_w_domain_and_handle():
    w = build_w((1.0, 0.5), dim=3)
    h = w.handle()
    x = np.array([0.2, 0.1, -0.05])
    assert h(x) == pytest.approx(float(w.radial(np.linalg.norm(x))), rel=1e-15)
    with pytest.raises(DomainError):
        h(np.array([3.0, 0.0, 0.0]))
    with pytest.raises(DomainError):
        h(np.array([0.1, 0.2]))


def test_build_w_validation():
    with pytest.raises(DomainError):
        build_w(())
    with pytest.raises(DomainError):
        build_w((0.9, 0.5))
    with pytest.raises(DomainError):
        build_w((1.0, 1.1))


def test_make_radial_w_kind():
    h = make_radial_w((1.0, 0.5), dim=5)
    assert h.kind == "radialW"
    assert h.domain_dim == 5


# ---------------------------------------------------------------------------
# eta and omegaHat1


def test_omega_hat1_clauses():
    h = make_omega_hat1(dim=5)
    x = np.zeros(5)
    assert h(x) == 0.0
    x[0] = 0.3
    assert h(x) == pytest.approx(0.09, rel=1e-15)
    x[0] = 1.5
    assert h(x) == 1.0
    x[0] = 0.75
    assert 0.25 < h(x) < 2.0


def test_omega_hat1_flat_across_joins():
    h = make_omega_hat1(dim=5)
    for r in (0.5, 1.0):
        x = np.zeros(5)
        x[0] = r
        rep = flatness_report(h, x, max_order=2, steps=(1e-3, 1e-4))
        # value derivative need not vanish at the joins; what must hold is
        # continuity of low-order differences, checked via small magnitudes
        assert all(m < 10.0 for row in rep.magnitudes for m in row)


def test_eta_dim_guard():
    with pytest.raises(DomainError):
        make_eta(dim=1)
    h = make_eta(dim=5)
    with pytest.raises(DomainError):
        h(np.zeros(4))


def test_eta_vanishes_on_segment_only():
    h = make_eta(dim=5)
    for x1 in (-1.0, -0.5, 0.0, 0.7, 1.0):
        p = np.zeros(5)
        p[0] = x1
        assert h(p) == 0.0
    # off the segment the value is positive
    p = np.zeros(5)
    p[0] = 0.5
    p[1] = 1e-3
    assert h(p) == pytest.approx(1e-9, rel=1e-12)
    p[0] = 1.2
    p[1] = 0.0
    assert h(p) > 0.0  # beyond |x1| = 1 the axis term turns on


def test_eta_far_field_and_bounds():
    h = make_eta(dim=5)
    p = np.zeros(5)
    p[0] = 4.0
    assert h(p) == 1.0
    p = np.full(5, 2.0)  # norm ~ 4.47
    assert h(p) == 1.0
    # ring values stay within the declared band
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(200, 5))
    nrm = np.linalg.norm(pts, axis=1, keepdims=True)
    radii = rng.uniform(2.0, 4.0, size=(200, 1))
    ring = pts / nrm * radii
    vals = h(ring)
    assert np.all(vals > 1.0 / 20.0), float(np.min(vals))
    assert np.all(vals < 20.0), float(np.max(vals))


def test_eta_repaired_vs_printed_branch():
    good = make_eta(dim=5, repaired=True)
    p = np.zeros(5)
    p[0] = 1.0001
    assert good(p) < 1.0  # flat exponential, tiny just past the edge
    bad = make_eta(dim=5, repaired=False)
    with np.errstate(over="ignore"):
        v = bad(p)
    assert not np.isfinite(v) or v > 1e100


# ---------------------------------------------------------------------------
# Reciprocal integrals


def test_integral_reciprocal_constant_matches_volume():
    h = make_constant(1.0, dim=3)
    got = integral_reciprocal(h, 1.0)
    assert got == pytest.approx(ball_volume(3, 1.0), rel=1e-3)


def test_omega_hat1_reciprocal_integral_dim3():
    # 1/|x|^2 over the ball of radius 1/2 in three coordinates: the
    # shell areas cancel the weight, leaving 4*pi*(1/2) = 2*pi.
    h = make_omega_hat1(dim=3)
    got = integral_reciprocal(h, 0.5)
    assert got == pytest.approx(2.0 * math.pi, rel=1e-6)


def test_eta_reciprocal_integral_dim5():
    # transverse shells are 2*pi^2*rho^3 against a rho^3 denominator;
    # the cylinder of transverse radius 1/2 over the segment gives 2*pi^2
    h = make_eta(dim=5)
    got = integral_reciprocal(h, 0.5)
    assert got == pytest.approx(2.0 * math.pi**2, rel=1e-6)


def test_eta_reciprocal_integral_dim4_diverges():
    h = make_eta(dim=4)
    with pytest.raises(DivergenceSignal):
        integral_reciprocal(h, 0.5)


def test_radial_w_reciprocal_integral_diverges():
    h = make_radial_w((1.0, 0.5), dim=3)
    with pytest.raises(DivergenceSignal):
        integral_reciprocal(h, 0.5)


def test_integral_reciprocal_guards():
    h = make_omega_hat1(dim=3)
    with pytest.raises(DomainError):
        integral_reciprocal(h, -1.0)
    with pytest.raises(DomainError):
        integral_reciprocal(make_psi(), 0.5)


def test_sphere_area_values():
    assert sphere_area(3, 1.0) == pytest.approx(4.0 * math.pi, rel=1e-15)
    assert sphere_area(4, 1.0) == pytest.approx(2.0 * math.pi**2, rel=1e-15)
    assert ball_volume(2, 1.0) == pytest.approx(math.pi, rel=1e-15)


# ---------------------------------------------------------------------------
# vhat0


def test_adaptive_simpson_polynomial():
    got = adaptive_simpson(lambda s: s * s, 0.0, 2.0)
    assert got == pytest.approx(8.0 / 3.0, rel=1e-10)
    assert adaptive_simpson(lambda s: s, 1.0, 1.0) == 0.0


def test_vhat0_clauses():
    # inside the bump graph the weight is exactly one
    assert vhat0(0.0, 0.0) == 1.0
    assert vhat0(0.0, 0.3) == 1.0  # 0.3 < gamma0(0) ~ 0.3679
    assert vhat0(0.0, -0.3) == 1.0
    # at and beyond |x2| = 2 it is exactly zero
    assert vhat0(0.0, 2.0) == 0.0
    assert vhat0(0.5, 5.0) == 0.0
    # strictly between in the blend band
    v = vhat0(0.0, 1.0)
    assert 0.0 < v < 1.0


def test_vhat0_monotone_in_x2():
    x2 = np.linspace(0.0, 2.0, 101)
    vals = vhat0(0.0, x2)
    # monotone up to quadrature noise near the flat ends
    assert np.all(np.diff(vals) <= 1e-11)
    assert vals[0] == 1.0
    assert vals[-1] == 0.0


def test_vhat0_symmetries():
    for (a, b) in ((0.3, 1.2), (0.9, 0.7), (0.0, 1.9)):
        v = vhat0(a, b)
        assert vhat0(-a, b) == pytest.approx(v, rel=1e-13)
        assert vhat0(a, -b) == pytest.approx(v, rel=1e-13)


def test_vhat0_outside_bump_column():
    # where gamma0 = 0 the blend runs over the whole window
    assert vhat0(1.5, 0.0) == 1.0
    v = vhat0(1.5, 1.0)
    assert 0.0 < v < 1.0
    assert vhat0(1.5, 2.0) == 0.0


def test_vhat0_gauss_agrees_with_simpson():
    pts = [(0.0, 0.5), (0.0, 1.0), (0.0, 1.7), (0.4, 0.9), (1.5, 1.3)]
    for (a, b) in pts:
        g = vhat0(a, b, method="gauss")
        s = vhat0(a, b, method="simpson")
        assert g == pytest.approx(s, abs=1e-8), (a, b)


def test_vhat0_flat_at_clause_boundaries():
    h = make_vhat0(method="gauss")
    # flat in x2 where the weight saturates at 1 and at 0
    g0 = gamma0(0.0)
    rep = flatness_report(
        h, np.array([0.0, g0]), max_order=2, steps=(1e-3, 1e-4),
        direction=np.array([0.0, 1.0]),
    )
    assert rep.passed, rep
    rep = flatness_report(
        h, np.array([0.0, 2.0]), max_order=2, steps=(1e-3, 1e-4),
        direction=np.array([0.0, 1.0]),
    )
    assert rep.passed, rep


def test_vhat0_handle_guard():
    h = make_vhat0()
    with pytest.raises(DomainError):
        h(np.zeros(3))
    with pytest.raises(DomainError):
        vhat0(0.0, 1.0, method="trapezoid")


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=-2.0, max_value=2.0),
    st.floats(min_value=-3.0, max_value=3.0),
)
def test_vhat0_range(x1, x2):
    v = vhat0(x1, x2)
    assert 0.0 <= v <= 1.0
