import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from solitonglue import norms


@given(st.floats(-5, 5), st.floats(0.05, 0.95))
def test_holder_seminorm_of_constant_is_zero(c, alpha):
    x = np.linspace(0, 1, 50)
    assert norms.holder_seminorm(np.full(50, c), x, alpha) == 0.0


@given(st.floats(-4, 4, allow_subnormal=False))
def test_lipschitz_quotient_of_linear_function(a):
    x = np.linspace(0, 2, 40)
    assert norms.holder_seminorm(a * x, x, 1.0) == pytest.approx(abs(a), rel=1e-12, abs=1e-12)


@given(st.floats(0.1, 0.4), st.floats(0.5, 0.9), st.integers(0, 50))
def test_interpolation_on_a_common_pair_set(a, b, seed):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(0, 1, 60))
    f = np.sin(7 * x) + rng.normal(0, 0.1, 60)
    pairs = norms.sample_pairs(x, 128, seed)
    t = 0.5
    mid = (1 - t) * a + t * b
    lhs = norms.holder_seminorm(f, x, mid, pairs)
    rhs = norms.holder_seminorm(f, x, a, pairs) ** (1 - t) * norms.holder_seminorm(f, x, b, pairs) ** t
    assert lhs <= rhs * (1 + 1e-12)


def test_empty_ball_raises():
    x = np.linspace(0, 1, 10)
    with pytest.raises(ValueError):
        norms.ball_seminorm(x, x, 0.5, [5.0], 0.1)


def test_sampled_seminorm_is_a_lower_bound():
    x = np.linspace(0, 1, 800)
    f = np.sqrt(x)
    full = norms.holder_seminorm(f, x, 0.5, norms.all_pairs(800))
    sampled = norms.holder_seminorm(f, x, 0.5)
    assert sampled <= full + 1e-15


def test_weighted_norm_of_power_is_scale_invariant():
    spec = norms.NormSpec(order=1, weight=1.5)

    def norm(lo):
        r = np.geomspace(lo, 100 * lo, 3000)
        return norms.weighted_norm(r, r**-1.5, spec, derivs=[r**-1.5, -1.5 * r**-2.5])

    base = norm(1.0)
    # r^delta |f| = 1 and r^{1+delta} |f'| = 1.5 before the Hölder part
    assert base >= 2.5
    assert norm(10.0) == pytest.approx(base, rel=1e-9)
    r = np.geomspace(1, 100, 3000)
    f = r**-1.5
    assert norms.sup_weighted(r, f, spec) == pytest.approx(1.0)


def test_sobolev_norm_matches_closed_form():
    r = np.geomspace(1, 1e3, 20001)
    spec = norms.NormSpec(order=0, weight=0.0)
    # cylindrical volume 2 pi r^-1 dr, f = r^-1: integral of r^-3 from 1 to 1e3
    val = norms.sobolev_norm(r, 1 / r, spec, derivs=[1 / r])
    assert val == pytest.approx(math.sqrt(2 * math.pi * 0.5 * (1 - 1e-6)), rel=1e-6)


@pytest.mark.parametrize("m,a", [(0, -1.0), (1, -0.5), (2, -2.0)])
def test_cylindrical_log_integral(m, a):
    T = 50.0
    L = math.log(T)
    exact = {0: (T**a - 1) / a, 1: (L * T**a) / a - (T**a - 1) / a**2}.get(m)
    got = norms.cylindrical_log_integral(m, a, T)
    if exact is not None:
        assert got == pytest.approx(2 * math.pi * exact, rel=1e-6)
    assert got > 0


def test_max_log_power_at_interior_critical_point():
    a = -0.5
    assert norms.max_log_power(a, 1e6) == pytest.approx(1 / (math.e * 0.5), rel=1e-6)


def test_first_order_bridge_reports_a_ratio():
    r = np.geomspace(1, 50, 2000)
    rep = norms.sobolev_first_order_bridge(r, np.exp(-r / 5), norms.NormSpec(weight=0.5))
    assert rep.holder_c2 > 0 and rep.bound > 0
    assert rep.ratio == pytest.approx(rep.first_derivative / rep.bound)


def test_spec_validation():
    with pytest.raises(ValueError):
        norms.NormSpec(alpha=1.0)
    with pytest.raises(ValueError):
        norms.NormSpec(kind="other")
