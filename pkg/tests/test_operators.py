import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solitonglue import operators as ops
from solitonglue.greens import random_band_limited


@pytest.fixture(scope="module")
def op0():
    return ops.mode_operator(0.0, 0, 0.05, 200.0)


def test_potential_plateau_is_minus_a_quarter(op0):
    c = ops.conjugated_coeffs(op0.meta["geometry"], 0.0)
    assert c["plateau"] == -0.25
    assert abs(c["potential"][-1] + 0.25) < 0.01


def test_potential_remainder_is_bounded_by_c_over_rho(op0):
    g = op0.meta["geometry"]
    rem = np.abs(ops.conjugated_coeffs(g, 0.0)["remainder"])
    far = g.rho > 5
    assert np.max(g.rho[far] * rem[far]) < 0.5


def test_discrete_kernel_residual_is_second_order():
    k = [ops.discrete_kernel_residual(h) for h in (0.1, 0.05, 0.025)]
    assert 3.5 < k[0] / k[1] < 4.5
    assert 3.5 < k[1] / k[2] < 4.5


@settings(max_examples=12)
@given(st.integers(0, 8), st.sampled_from([-0.1, 0.0, 0.1]), st.integers(0, 2**31 - 1))
def test_mode_solver_roundtrip(m, gamma, seed):
    op = ops.mode_operator(gamma, m, 0.05, 100.0)
    g = random_band_limited(op.x, np.random.default_rng(seed), support=(op.x[0], op.x[-1]))
    f = ops.solve_mode(op, g)
    assert np.max(np.abs(op.apply(f) - g)) <= 1e-8 * np.max(np.abs(g))


def test_inverse_norm_is_stable_under_truncation():
    for m in (0, 3):
        a = ops.inverse_norm_estimate(ops.mode_operator(0.1, m, 0.05, 100.0))
        b = ops.inverse_norm_estimate(ops.mode_operator(0.1, m, 0.05, 200.0))
        assert max(a / b, b / a) < 2


def test_inverse_norm_estimate_is_a_lower_bound_on_a_small_matrix():
    op = ops.mode_operator(0.0, 1, 0.5, 20.0)
    inv = np.linalg.inv(op.matrix().toarray())
    exact = np.max(np.sum(np.abs(inv), axis=1))
    est = ops.inverse_norm_estimate(op)
    assert est <= exact * (1 + 1e-10)
    assert est >= 0.3 * exact


def test_short_truncation_is_rejected():
    with pytest.raises(ops.PlateauUndetected):
        ops.mode_operator(0.0, 0, 0.05, 5.0)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_conjugation_formula_matches_direct_composition(a, b, c):
    x = np.linspace(0.5, 2.0, 7)
    P, Q, W = 1 + 0 * x, a / x, b + 0 * x
    psi, dpsi, d2psi = np.exp(c * x), c * np.exp(c * x), c * c * np.exp(c * x)
    p, q, w = ops.conjugate_radial(P, Q, W, psi, dpsi, d2psi)
    # test on f = x^2: psi^-1 L(psi f) against p f'' + q f' + w f
    F, dF, d2F = psi * x**2, dpsi * x**2 + 2 * x * psi, d2psi * x**2 + 4 * x * dpsi + 2 * psi
    lhs = (P * d2F + Q * dF + W * F) / psi
    assert np.allclose(lhs, p * 2 + q * 2 * x + w * x**2)


@given(st.integers(0, 6), st.floats(0.5, 3.0))
def test_harmonic_extension_reproduces_harmonic_polynomials(m, radius):
    t = 2 * np.pi * np.arange(64) / 64
    data = radius**m * np.cos(m * t)
    x = np.array([0.1, -0.3]) * radius
    y = np.array([0.2, 0.4]) * radius
    exact = np.real((x + 1j * y) ** m)
    assert np.allclose(ops.harmonic_extension(data, radius, x, y), exact, atol=1e-10 * radius**m)


@given(st.integers(1, 6))
def test_symmetrized_field_is_invariant(order):
    f = ops.symmetrize(lambda x, y: x**3 + 2 * y + x * y, order)
    a = 2 * np.pi / order
    x, y = 0.3, -0.7
    assert f(x, y) == pytest.approx(f(np.cos(a) * x - np.sin(a) * y, np.sin(a) * x + np.cos(a) * y), abs=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_gradient_at_origin_is_exact_for_linear_functions(a, b):
    g = ops.gradient_at_origin(lambda x, y: a * x + b * y + 1.0)
    assert np.allclose(g, [a, b], atol=1e-9)


def test_power_law_fits_are_exact_on_exact_data():
    x = np.geomspace(1, 10, 8)
    assert ops.fit_power_law(x, 3 * x**-1.7)[0] == pytest.approx(-1.7)
    eps = np.array([1e-6, 1e-6, 4e-6, 4e-6])
    A = np.array([10.0, 20.0, 10.0, 20.0])
    a, b = ops.fit_two_exponents(eps, A, 2 * eps**-0.5 * A**-2.5)
    assert (a, b) == (pytest.approx(-0.5), pytest.approx(-2.5))


def test_closed_form_of_inner_ball_lp_norm_matches_quadrature():
    eps, A, c, p = 1e-3, 5.0, 1.0, 4.0
    ra = eps * A
    r = np.linspace(0, ra, 4001)
    k = 2 * c * c / (eps**2 * A**4)
    quad = (2 * np.pi * np.trapezoid((k * r) ** p * r, r)) ** (1 / p)
    assert ops.E_lp_closed_form_ball(eps, A, c, p) == pytest.approx(quad, rel=1e-6)
