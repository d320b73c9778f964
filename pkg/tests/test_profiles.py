import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from solitonglue import profiles


def test_paraboloid_series_starts_like_a_bowl():
    v = profiles.paraboloid_series(5)
    assert v[1] == pytest.approx(0.5)
    assert v[3] == pytest.approx(1 / 32)


def test_paraboloid_profile_solves_the_ode():
    prof = profiles.paraboloid_profile((1e-3, 60.0))
    r = np.geomspace(1e-3, 60, 300)
    assert np.max(prof.relative_residual(r)) < 1e-9
    # the slope grows like r minus 1/r
    assert prof(60.0) == pytest.approx(60 - 1 / 60, rel=1e-4)


def test_profile_rejects_radii_outside_its_domain():
    prof = profiles.integrate_profile(1.0, 1.0, (0.5, 2.0))
    with pytest.raises(ValueError):
        prof(3.0)


def test_integrate_profile_matches_solution_through_both_directions():
    prof = profiles.integrate_profile(0.3, 1.0, (0.5, 2.0))
    assert prof(1.0) == pytest.approx(0.3, abs=1e-13)
    assert np.max(np.abs(prof.residual(np.linspace(0.5, 2.0, 50)))) < 1e-9


def test_primitive_differentiates_back_to_the_slope():
    prof = profiles.primitive(profiles.paraboloid_profile((1e-3, 5.0)), 0.0)
    r = np.linspace(1.0, 4.0, 7)
    h = 1e-4
    du = (prof.primitive_at(r + h) - prof.primitive_at(r - h)) / (2 * h)
    assert np.allclose(du, prof(r), rtol=1e-7)


@given(st.floats(-6.0, -0.5), st.floats(0.1, 10.0))
def test_decay_exponent_recovers_exact_power(p, c):
    r = np.geomspace(10, 200, 30)
    fit = profiles.decay_exponent(r, c * r**p)
    assert fit.slope == pytest.approx(p, abs=1e-10)
    # linregress derives its standard error from 1 - r^2, so roundoff shows up near 1e-8
    assert fit.width < 1e-6


def test_decay_exponent_needs_a_decade():
    with pytest.raises(ValueError):
        profiles.decay_exponent(np.linspace(10, 20, 20), np.ones(20))


@pytest.mark.parametrize("n", [0, 1, 2])
def test_large_scale_deviation_rates(n):
    r = np.geomspace(10, 200, 40)
    dev, _ = profiles.large_scale_deviations([n], r)
    fit = profiles.decay_exponent(r, dev[n])
    assert abs(fit.slope + (2 * n + 1)) <= 0.15


@given(st.floats(1e-20, 1.0), st.floats(1.0, 1e6), st.floats(0.5, 20.0), st.floats(0.05, 0.95))
def test_admissibility_is_exactly_the_two_sided_window(eps, A, Delta, eta):
    adm = profiles.admissibility(eps, A, Delta, eta, 2.0, 1.0)
    upper = eps * A ** (4 + eta) + A ** (-(1 - eta)) <= 1 / Delta
    lower = eps * A ** (5 - eta) >= Delta
    assert adm.admissible == (upper and lower)
    assert (len(adm.violations()) == 0) == adm.admissible


def test_admissibility_of_the_derived_tuple():
    assert profiles.admissibility(3e-14, 1000.0, 10.0, 0.1, 2.0, 1.0).admissible


@given(st.floats(1e-20, 1.0), st.floats(1.0, 1e6))
def test_half_and_two_is_never_admissible(eps, A):
    assert not profiles.admissibility(eps, A, 2.0, 0.5, 2.0, 1.0).admissible


def test_admissibility_validates_inputs():
    with pytest.raises(ValueError):
        profiles.admissibility(1e-6, 20.0, 1.0, 1.5, 2.0, 1.0)


@given(st.floats(1e-7, 1e-5), st.floats(5.0, 50.0), st.floats(-3.0, 3.0))
def test_small_scale_coordinates_are_inverse(eps, A, x):
    P = profiles.GrimParameters(eps, A)
    assert P.x_of_r(P.r_of_x(x)) == pytest.approx(x, abs=1e-12)


def test_contraction_solver_agrees_with_direct_integration():
    P = profiles.GrimParameters(1e-6, 20.0, 1.0)
    exact = profiles.exact_small_scale(1, P)
    con = profiles.contraction_solve(1, P)
    x = np.linspace(0, P.x_max, 300)
    assert np.max(np.abs(exact.at_x(x) - con.profile.at_x(x))) <= 1e-8
    assert con.contraction_factor < 0.5


def test_strict_mode_rejects_inadmissible_parameters():
    with pytest.raises(ValueError):
        profiles.exact_small_scale(1, profiles.GrimParameters(1e-2, 20.0), relaxed=False)


@pytest.mark.parametrize("c", [0.5, 1.0, 1.5])
def test_jacobi_field_is_scaled_c_derivative(c):
    P = profiles.GrimParameters(1e-6, 20.0, c)
    J = profiles.jacobi_field_small_scale(1, P)
    x = np.linspace(0, P.x_max, 200)
    w = J.at_x(x)
    d = profiles.c_derivative(1, P, x)
    assert np.max(np.abs(w - J.normalization * d)) <= 1e-6 * np.max(np.abs(w))


@given(st.floats(0.05, 1.0), st.floats(-1.0, 2.0), st.floats(1e-3, 1.0))
def test_ordered_initial_values_stay_ordered(r0, v, gap):
    ordered, noninc, g = profiles.ordered_pair_check(v, v + gap, r0)
    assert ordered and noninc
    assert g[-1] <= g[0]
