from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from solitonglue import formal_series as fs

fracs = st.fractions(min_value=-20, max_value=20, max_denominator=50)
polys = st.lists(fracs, max_size=5).map(lambda c: fs.XPoly(tuple(c)))


@pytest.mark.parametrize("n", range(0, 11))
def test_laurent_leading_coefficients_and_residual_order(n):
    v = fs.laurent_recurrence(n)
    assert v[1] == 1
    if n >= 1:
        assert v[-1] == -1
    assert all(v[m] == 0 for m in range(-2 * n - 2, 4, 2))
    assert fs.apply_G_laurent(v).order == 1 - 2 * n


def test_laurent_truncations_are_nested():
    top = fs.laurent_recurrence(8)
    for n in range(8):
        low = fs.laurent_recurrence(n)
        assert all(low[m] == top[m] for m in range(1 - 2 * n, 2))


def test_laurent_series_matches_its_float_evaluation():
    v = fs.laurent_recurrence(4)
    r = np.array([3.0, 7.0])
    direct = sum(float(v[m]) * r**m for m in range(-9, 2))
    assert np.allclose(fs.eval_large(v, r), direct, rtol=1e-14)


@given(polys, polys, polys)
def test_xpoly_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    assert a - a == fs.XPoly()


@given(polys, fracs)
def test_xpoly_evaluation_is_a_homomorphism(a, x):
    b = a * a + a
    assert b.at(x) == a.at(x) ** 2 + a.at(x)


@given(st.integers(-3, 3), polys)
def test_poly_ode_solution_satisfies_the_equation(lam, rhs):
    init = 2 if lam == 0 else None
    if lam == 0:
        Q = fs.solve_poly_ode(lam, rhs, init)
        assert Q.at(0) == 2
    else:
        Q = fs.solve_poly_ode(lam, rhs)
    assert Q.derivative() + Q * lam == rhs


@pytest.mark.parametrize("k", range(0, 4))
def test_small_scale_series_structure(k):
    V = fs.bivariate_recurrence(k)
    assert V[(0, 1)] == fs.XPoly.const(1)
    assert V[(1, 0)] == fs.XPoly.const(Fraction(1, 2))
    assert fs.parity_holds(V)
    assert fs.degree_bound_holds(V)
    assert not fs.apply_G_small(V).terms


def test_small_scale_residual_appears_beyond_the_guaranteed_order():
    V = fs.bivariate_recurrence(1)
    res = fs.apply_G_small(V, order=5)
    assert res.terms
    assert res.valuation() > 3


def test_jacobi_series_is_annihilated_to_order():
    V = fs.bivariate_recurrence(2)
    W = fs.jacobi_series(V)
    assert not fs.jacobi_residual(V, W).terms


def test_csv_tables_round_trip_exactly():
    v = fs.laurent_recurrence(3)
    rows = fs.laurent_csv(v).strip().splitlines()
    assert rows[0] == "degree,numerator,denominator,exact"
    for row in rows[1:]:
        m, num, den, exact = row.split(",")
        assert fs.parse_exact(exact) == Fraction(int(num), int(den)) == v[int(m)]
    assert any(row.startswith("-5,") for row in rows)
    table = fs.bivariate_csv(fs.bivariate_recurrence(1)).splitlines()
    assert table[0].startswith("p,q,x_degree")
