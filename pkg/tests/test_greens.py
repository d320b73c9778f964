import numpy as np
import pytest

from solitonglue import greens


@pytest.fixture(scope="module")
def machine():
    return greens.build_machine(R=10.0, m_max=2)


def test_neumann_series_matches_direct_solve():
    rng = np.random.default_rng(1)
    M = 0.3 * rng.standard_normal((20, 20)) / np.sqrt(20)
    x = rng.standard_normal(20)
    a = greens.neumann_Q(M, x, "neumann")
    b = greens.neumann_Q(M, x, "solve")
    assert np.allclose(a, b, atol=1e-12)
    assert np.allclose(a - M @ a, x)


def test_neumann_series_refuses_an_expansion():
    with pytest.raises(greens.ContractionFailure):
        greens.neumann_Q(2.0 * np.eye(3), np.ones(3), "neumann")


def test_composites_contract(machine):
    for m in machine.modes:
        n = machine.contraction_norms(m)
        assert n["BA"] < 1 and n["AB"] < 1


def test_right_inverse_identity(machine):
    rng = np.random.default_rng(3)
    for m in machine.modes:
        f = greens.random_band_limited(machine.s, rng)
        assert machine.identity_residual(m, f) <= 1e-6


def test_supports_of_the_partial_errors(machine):
    for m in machine.modes:
        leaks = machine.support_leaks(m)
        assert leaks["A"] <= 1e-10
        assert leaks["B"] <= 1e-10


def test_symmetric_modes_respect_the_order():
    assert greens.symmetric_modes(0, 3) == [0, 1, 2, 3]
    assert greens.symmetric_modes(1, 4) == [0, 2, 4]
    assert greens.symmetric_modes(2, 8) == [0, 3, 6]


def test_refinement_reduces_the_residual():
    M = greens.build_machine(R=20.0, m_max=0)
    rep = greens.refine_soliton(M, iterations=3)
    assert rep.reduction <= 0.1
    assert all(np.isfinite(rep.residual_norms))
