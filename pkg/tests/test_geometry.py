import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from solitonglue import geometry as geo
from solitonglue import profiles
from solitonglue.verify import grim_reaper_chart


@given(st.floats(-1.4, 1.4), st.floats(-10, 10))
def test_grim_reaper_graph_is_a_translator(x, y):
    ch = grim_reaper_chart()
    assert abs(float(geo.mcfs_residual(ch, np.array([x]), np.array([y]))[0])) <= 1e-10


@given(st.floats(0.5, 4.0), st.floats(-1.4, 1.4))
def test_scaled_grim_reaper_translates_at_scaled_speed(eps, x):
    u = lambda X, Y: -np.log(np.cos(eps * X)) / eps + 0 * Y
    g = lambda X, Y: np.stack([np.tan(eps * X), 0 * Y])
    h = lambda X, Y: np.stack([np.stack([eps / np.cos(eps * X) ** 2, 0 * X]), np.stack([0 * X, 0 * X])])
    ch = geo.GraphChart(geo.ScalarField(u, g, h), eps)
    xs = np.array([x / eps])
    assert abs(float(geo.mcfs_residual(ch, xs, 0 * xs)[0])) <= 1e-9 * max(1.0, eps)


def test_plane_is_minimal_but_not_a_translator():
    ch = geo.GraphChart(geo.ScalarField(lambda x, y: 0 * x, lambda x, y: np.stack([0 * x, 0 * y]),
                                        lambda x, y: np.zeros((2, 2) + np.shape(x))), epsilon=0.7)
    x = np.linspace(-1, 1, 5)
    assert np.allclose(geo.mcfs_residual(ch, x, x), 0.7)


def test_sphere_cap_has_mean_curvature_two():
    u = lambda x, y: -np.sqrt(1 - x * x - y * y)
    ch = geo.GraphChart(geo.ScalarField(u, h=1e-4, richardson=True), epsilon=0.0)
    x = np.array([0.0, 0.2, -0.3])
    y = np.array([0.1, -0.2, 0.4])
    F = geo.graph_fields(ch, x, y)
    assert np.allclose(np.abs(F.mean_curvature), 2.0, rtol=1e-7)
    assert np.allclose(F.norm_A_squared, 2.0, rtol=1e-6)


def test_fd_derivatives_of_a_quadratic_are_exact():
    f = lambda x, y: 3 * x * x - 2 * x * y + y * y
    _, g, H = geo.fd_derivatives(f, np.array([0.3]), np.array([-0.4]), 1e-3)
    assert np.allclose(g[:, 0], [3 * 0.6 + 0.8, -0.6 - 0.8], atol=1e-8)
    assert np.allclose(H[:, :, 0], [[6, -2], [-2, 2]], atol=1e-5)


def test_revolution_curvatures_of_the_bowl_agree_with_the_graph():
    S = geo.RevolutionSurface.from_profile(profiles.paraboloid_profile((1e-3, 6.0)))
    r = np.array([0.5, 1.0, 3.0])
    k1, k2, mu = geo.revolution_curvatures(S, r)
    ch = S.chart(1.0)
    F = geo.graph_fields(ch, r, 0 * r)
    assert np.allclose(k1 + k2, F.mean_curvature, rtol=1e-10)
    assert np.allclose(mu, F.mu)
    # the bowl is a unit-speed translator
    assert np.allclose(k1 + k2 + mu, 0.0, atol=1e-10)
    assert np.allclose(geo.circle_curvature(S, r), mu / r)


def test_finite_differenced_residual_converges_at_second_order():
    ch = grim_reaper_chart()
    x = np.linspace(-1, 1, 9)
    errs = [np.max(np.abs(geo.mcfs_residual(ch.with_height(ch.height.finite_differenced(h)), x, 0 * x)))
            for h in (1 / 50, 1 / 100, 1 / 200)]
    assert 3.0 <= errs[0] / errs[1] <= 5.0
    assert 3.0 <= errs[1] / errs[2] <= 5.0


def test_height_linearisation_matches_difference_quotient():
    ch = grim_reaper_chart()
    u = ch.height

    def f(x, y):
        return np.exp(-(x * x + y * y))

    def fg(x, y):
        return np.stack([-2 * x * f(x, y), -2 * y * f(x, y)])

    def fh(x, y):
        e = f(x, y)
        return np.stack([np.stack([(4 * x * x - 2) * e, 4 * x * y * e]), np.stack([4 * x * y * e, (4 * y * y - 2) * e])])

    def shifted(t):
        return geo.GraphChart(geo.ScalarField(lambda X, Y: u.f(X, Y) + t * f(X, Y),
                                              lambda X, Y: u.grad(X, Y) + t * fg(X, Y),
                                              lambda X, Y: u.hess(X, Y) + t * fh(X, Y)), 1.0)

    x = np.array([0.2, -0.5])
    y = np.array([0.3, 1.0])
    t = 1e-6
    mu = geo.graph_fields(ch, x, y).mu
    fd = -(geo.mcfs_residual(shifted(t), x, y) - geo.mcfs_residual(shifted(-t), x, y)) / (2 * t) / mu
    lin = geo.height_jacobi_apply(ch, geo.ScalarField(f, fg, fh), x, y)
    assert np.allclose(lin, fd, rtol=1e-8, atol=1e-9)


@pytest.mark.parametrize("n_theta", [3, 8])
def test_curve_mesh_counts_and_obj_export(tmp_path, n_theta):
    s = np.linspace(-1, 1, 11)
    m = geo.curve_mesh(np.cosh(s), s, n_theta)
    assert m.vertices.shape == (11 * n_theta, 3)
    assert m.n_triangles == 2 * 10 * n_theta
    assert m.connected_components() == 1
    path = m.write_obj(tmp_path / "c.obj")
    lines = path.read_text().splitlines()
    assert sum(ln.startswith("v ") for ln in lines) == 11 * n_theta
    assert sum(ln.startswith("f ") for ln in lines) == m.n_triangles


def test_polar_mesh_on_a_disk_has_a_fan():
    m = geo.polar_mesh(lambda x, y: x * 0, 0.0, 1.0, 4, 6)
    assert m.n_triangles == 6 + 2 * 6 * 3
