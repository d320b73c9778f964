import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from solitonglue import surgery


@pytest.fixture(scope="module")
def glued():
    return surgery.build_glued_surface(0.4, 20.0**-4.5, 20.0)


@given(st.floats(0.01, 100.0), st.floats(0.0, 3.0))
def test_cutoff_shape(a, t):
    chi = surgery.cutoff(a)
    v = float(chi(t * a))
    assert 0.0 <= v <= 1.0
    if t <= 1:
        assert v == 1.0
    if t >= 2:
        assert v == 0.0
    assert float(chi.derivative(t * a)) <= 0.0


@given(st.floats(1.05, 1.95))
def test_cutoff_derivative_matches_difference_quotient(t):
    chi = surgery.cutoff(2.0)
    r = 2.0 * t
    h = 1e-6
    fd = (chi(r + h) - chi(r - h)) / (2 * h)
    assert float(chi.derivative(r)) == pytest.approx(float(fd), rel=1e-6, abs=1e-9)


def test_cutoff_derivative_bounds_scale_like_inverse_powers():
    a, b = surgery.cutoff(1.0), surgery.cutoff(10.0)
    for n in (1, 2, 3):
        assert b.sup_derivative(n) == pytest.approx(a.sup_derivative(n) * 10.0**-n, rel=1e-3)


def test_cutoff_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        surgery.cutoff(0.0)


def test_glued_surface_is_exact_away_from_the_transition(glued):
    reg = glued.residual_by_region()
    eps = glued.epsilon
    for tag in ("upper", "lower"):
        # the catenoid core is minimal and the Grim end a translator
        assert reg[f"core/{tag}"]["sup_minus_eps_mu"] < 1e-12
        assert reg[f"far/{tag}"]["sup_abs"] < 1e-12 * max(1.0, eps * 1e6)
        assert reg[f"transition/{tag}"]["sup_abs"] > reg[f"far/{tag}"]["sup_abs"]


def test_joined_end_is_exactly_each_piece_outside_the_annulus(glued):
    end = glued.upper
    r_in = np.linspace(1.0, end.R, 20)
    r_out = np.linspace(2 * end.R, 4 * end.R, 20)
    assert np.array_equal(end.jets(r_in), end.F.jets(r_in))
    assert np.array_equal(end.jets(r_out), end.G.jets(r_out))


def test_join_detects_mismatched_leading_data(glued):
    F = glued.upper.F
    G = glued.lower.G
    with pytest.raises(surgery.LeadingDataMismatch):
        surgery.join(F, G, glued.R)


def test_residual_scales_linearly_in_epsilon():
    vals = [surgery.build_glued_surface(0.4, e, 20.0).weighted_residual() for e in (1e-5, 1e-4)]
    assert vals[1] / vals[0] == pytest.approx(10.0, rel=0.05)


def test_deficiency_field_x_lives_inside_twice_the_gluing_radius(glued):
    F = surgery.deficiency_fields(glued)
    inside = np.geomspace(2 * glued.extension_radius, 2 * glued.R, 500)
    outside = np.geomspace(2.05 * glued.R, 0.5 * glued.r_max, 500)
    for s in (1, -1):
        sup = np.max(np.abs(F.X[s](inside)))
        assert sup > 0
        assert np.max(np.abs(F.X[s](outside))) <= 1e-7 * sup
    assert surgery.weighted_norm_X(glued, F)["max"] > 0


def test_core_cutoffs_must_fit_inside_the_core():
    with pytest.raises(ValueError):
        surgery.build_glued_surface(1.0, 1e-6, 4.0)
