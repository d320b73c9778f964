"""Graphs and surfaces of revolution: metric data, curvature, the soliton functional and its linearisation.

Conventions: the graph of ``u`` carries the upward unit normal
``N = mu (-Du, 1)`` with ``mu = 1/sqrt(1 + |Du|^2) = <N, e_z>``. The second
fundamental form is ``II_ij = -mu u_ij`` and the mean curvature
``H = g^{ij} II_ij = -mu g^{ij} u_ij``. A graph translates upward with speed
``eps`` under mean curvature flow exactly when

    M(u) = H + eps mu = mu (eps - g^{ij} u_ij) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# derivative access
# ---------------------------------------------------------------------------


def fd_derivatives(f: Field, x, y, h: float, richardson: bool = False):
    """Value, gradient and Hessian of ``f`` by centred differences with step ``h``.

    Plain differences are second order; ``richardson`` combines steps
    ``h`` and ``h/2`` into fourth order.
    """
    if richardson:
        v1, g1, H1 = fd_derivatives(f, x, y, h)
        _, g2, H2 = fd_derivatives(f, x, y, h / 2)
        return v1, (4 * g2 - g1) / 3, (4 * H2 - H1) / 3
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f0 = f(x, y)
    fxp, fxm = f(x + h, y), f(x - h, y)
    fyp, fym = f(x, y + h), f(x, y - h)
    fpp, fpm = f(x + h, y + h), f(x + h, y - h)
    fmp, fmm = f(x - h, y + h), f(x - h, y - h)
    grad = np.stack([(fxp - fxm) / (2 * h), (fyp - fym) / (2 * h)])
    fxx = (fxp - 2 * f0 + fxm) / h**2
    fyy = (fyp - 2 * f0 + fym) / h**2
    fxy = (fpp - fpm - fmp + fmm) / (4 * h**2)
    hess = np.stack([np.stack([fxx, fxy]), np.stack([fxy, fyy])])
    return f0, grad, hess


@dataclass(frozen=True)
class ScalarField:
    """A plane function with optional analytic first and second derivatives.

    Missing derivatives are taken by centred differences with step ``h``.
    """

    f: Field
    grad: Callable | None = None
    hess: Callable | None = None
    h: float = 1e-4
    richardson: bool = False

    def derivatives(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.grad is not None and self.hess is not None:
            return self.f(x, y), np.asarray(self.grad(x, y)), np.asarray(self.hess(x, y))
        return fd_derivatives(self.f, x, y, self.h, self.richardson)

    def __call__(self, x, y):
        return self.f(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def finite_differenced(self, h: float, richardson: bool = False) -> "ScalarField":
        return ScalarField(self.f, None, None, h, richardson)


def radial_field(u: Callable, du: Callable, d2u: Callable) -> ScalarField:
    """Plane field ``u(|x|)`` with analytic derivatives from the radial ones."""

    def f(x, y):
        return u(np.hypot(x, y))

    def grad(x, y):
        r = np.hypot(x, y)
        d = du(r) / r
        return np.stack([d * x, d * y])

    def hess(x, y):
        r = np.hypot(x, y)
        a, b = du(r) / r, d2u(r)
        nx, ny = x / r, y / r
        # D^2 u = u'' n n^T + (u'/r)(I - n n^T)
        hxx = b * nx * nx + a * (1 - nx * nx)
        hyy = b * ny * ny + a * (1 - ny * ny)
        hxy = (b - a) * nx * ny
        return np.stack([np.stack([hxx, hxy]), np.stack([hxy, hyy])])

    return ScalarField(f, grad, hess)


@dataclass(frozen=True)
class GraphChart:
    """Height function over a plane region (disk or annulus ``r_inner <= |x| <= r_outer``)."""

    height: ScalarField
    epsilon: float = 1.0
    r_inner: float = 0.0
    r_outer: float = math.inf

    def with_height(self, height: ScalarField) -> "GraphChart":
        return GraphChart(height, self.epsilon, self.r_inner, self.r_outer)


# ---------------------------------------------------------------------------
# graph geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphFields:
    u: np.ndarray
    du: np.ndarray  # (2, ...)
    d2u: np.ndarray  # (2, 2, ...)
    mu: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    christoffel: np.ndarray  # Gamma^k_ij as [k, i, j, ...]
    second_form: np.ndarray  # II_ij
    shape_operator: np.ndarray  # A^i_j
    mean_curvature: np.ndarray
    ez_tangential: np.ndarray  # components of pi^T(e_z) in the coordinate frame
    normal: np.ndarray  # (3, ...)

    @property
    def laplace_first_order(self) -> np.ndarray:
        """``b^k = -g^{ij} Gamma^k_ij`` so that ``Delta f = g^{ij} f_ij + b^k f_k``."""
        return -np.einsum("ij...,kij...->k...", self.g_inv, self.christoffel)

    @property
    def norm_A_squared(self) -> np.ndarray:
        return np.einsum("ik...,jl...,ij...,kl...->...", self.g_inv, self.g_inv, self.second_form, self.second_form)


def graph_fields(chart: GraphChart, x, y) -> GraphFields:
    """All metric and curvature quantities of the graph at the points ``(x, y)``."""
    u, du, d2u = chart.height.derivatives(x, y)
    eye = np.eye(2).reshape((2, 2) + (1,) * np.ndim(u))
    p2 = du[0] ** 2 + du[1] ** 2
    mu = 1 / np.sqrt(1 + p2)
    uu = np.einsum("i...,j...->ij...", du, du)
    g = eye + uu
    g_inv = eye - mu**2 * uu
    # Gamma^k_ij = g^{kp} u_p u_ij
    up = np.einsum("kp...,p...->k...", g_inv, du)
    chris = np.einsum("k...,ij...->kij...", up, d2u)
    II = -mu * d2u
    A = np.einsum("ip...,pj...->ij...", g_inv, II)
    H = np.einsum("ii...->...", A)
    ez_t = mu**2 * du
    normal = np.stack([-mu * du[0], -mu * du[1], mu])
    return GraphFields(u, du, d2u, mu, g, g_inv, chris, II, A, H, ez_t, normal)


def mcfs_residual(chart: GraphChart, x, y) -> np.ndarray:
    """``H + eps <N, e_z>`` of the graph; zero exactly on speed-``eps`` translators."""
    F = graph_fields(chart, x, y)
    return F.mean_curvature + chart.epsilon * F.mu


def laplace_beltrami(F: GraphFields, f_grad, f_hess) -> np.ndarray:
    return np.einsum("ij...,ij...->...", F.g_inv, f_hess) + np.einsum("k...,k...->...", F.laplace_first_order, f_grad)


def _field(f) -> ScalarField:
    return f if isinstance(f, ScalarField) else ScalarField(f, richardson=True, h=1e-3)


def mcfs_jacobi_apply(chart: GraphChart, f, x, y) -> np.ndarray:
    """``J f = Delta f + |A|^2 f + eps <grad f, e_z>`` on the graph."""
    F = graph_fields(chart, x, y)
    fv, fg, fh = _field(f).derivatives(x, y)
    grad_ez = F.mu**2 * np.einsum("k...,k...->...", F.du, fg)
    return laplace_beltrami(F, fg, fh) + F.norm_A_squared * fv + chart.epsilon * grad_ez


def height_jacobi_apply(chart: GraphChart, f, x, y) -> np.ndarray:
    """Linearisation of ``-M / mu`` in the height: ``-(1/mu) d/dt M(u + t f)``, in closed form.

    It equals ``mu^{-1} J (mu f)`` on translators.
    """
    F = graph_fields(chart, x, y)
    fv, fg, fh = _field(f).derivatives(x, y)
    du, d2u, mu = F.du, F.d2u, F.mu
    trace = np.einsum("ij...,ij...->...", F.g_inv, d2u)
    u_f = np.einsum("k...,k...->...", du, fg)
    uuH = np.einsum("i...,j...,ij...->...", du, du, d2u)
    uHf = np.einsum("i...,ij...,j...->...", du, d2u, fg)
    return (np.einsum("ij...,ij...->...", F.g_inv, fh) - mu**2 * trace * u_f
            + 2 * mu**4 * uuH * u_f - 2 * mu**2 * uHf + chart.epsilon * mu**2 * u_f)


def soliton_modified_operator_coeffs(chart: GraphChart, x, y, power: int = 2):
    """Coefficients of ``f -> g^{ij} f_ij - 2 mu^power g^{ip} u_pq u_q f_i``.

    On a translator ``power = 2`` reproduces :func:`height_jacobi_apply`; the
    ``power`` argument exists so the alternative normalisation can be tested.
    Returns ``(a_ij, b_i)``.
    """
    F = graph_fields(chart, x, y)
    b = -2 * F.mu**power * np.einsum("ip...,pq...,q...->i...", F.g_inv, F.d2u, F.du)
    return F.g_inv, b


# ---------------------------------------------------------------------------
# surfaces of revolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RevolutionSurface:
    """Surface generated by rotating the graph of a radial height ``u(r)`` about the vertical axis.

    ``du`` and ``d2u`` are the first two radial derivatives and ``u`` the
    height itself (optional for curvature-only uses).
    """

    du: Callable
    d2u: Callable
    u: Callable | None = None
    r_inner: float = 0.0
    r_outer: float = math.inf

    def check(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_inner) or np.any(r > self.r_outer) or np.any(r <= 0):
            raise ValueError("radius outside the surface's domain")
        return r

    def chart(self, epsilon: float) -> GraphChart:
        if self.u is None:
            raise ValueError("height function required")
        return GraphChart(radial_field(self.u, self.du, self.d2u), epsilon, self.r_inner, self.r_outer)

    @classmethod
    def from_profile(cls, profile, u0: float = 0.0, h: float | None = None) -> "RevolutionSurface":
        """Surface from a :class:`~solitonglue.profiles.RadialProfile` of the slope ``u'``.

        ``u''`` comes from the soliton ODE when the profile came from a Grim
        solver, otherwise from the interpolant.
        """
        from .profiles import grim_rhs, primitive

        p = profile if profile.u_anchor is not None else primitive(profile, u0)
        if p.provenance.startswith(("grim", "paraboloid", "exact-small", "contraction")):
            d2u = lambda r: grim_rhs(r, p(r))
        else:
            d2u = p.derivative
        return cls(p, d2u, p.primitive_at, *p.domain)


def revolution_curvatures(s: RevolutionSurface, r):
    """Principal curvatures ``(c_r, c_theta)`` and ``mu = <N, e_z>`` at radius ``r``."""
    r = s.check(r)
    p = s.du(r)
    q = s.d2u(r)
    w = np.sqrt(1 + p * p)
    return -q / w**3, -p / (r * w), 1 / w


def circle_curvature(s: RevolutionSurface, r):
    """Geodesic curvature of the horizontal circle of radius ``r``: ``mu / r``."""
    r = s.check(r)
    return 1 / (r * np.sqrt(1 + s.du(r) ** 2))


# ---------------------------------------------------------------------------
# mesh export
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (n, 3)
    faces: np.ndarray  # (m, 3), zero-based, counterclockwise seen from the normal side

    @property
    def n_triangles(self) -> int:
        return int(self.faces.shape[0])

    def face_normals(self) -> np.ndarray:
        a, b, c = (self.vertices[self.faces[:, i]] for i in range(3))
        return np.cross(b - a, c - a)

    def write_obj(self, path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            for v in self.vertices:
                fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
            for f in self.faces:
                fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
        return path

    def connected_components(self) -> int:
        parent = list(range(len(self.vertices)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a, b, c in self.faces:
            for p, q in ((a, b), (b, c)):
                rp, rq = find(int(p)), find(int(q))
                if rp != rq:
                    parent[rp] = rq
        used = {find(int(i)) for i in np.unique(self.faces)}
        return len(used)


def polar_mesh(height: Callable, r_lo: float, r_hi: float, n_r: int, n_theta: int) -> Mesh:
    """Triangulated graph of ``height(x, y)`` over a disk (``r_lo = 0``) or annulus.

    Rings sit at ``n_r + 1`` equally spaced radii. Each band between rings
    contributes ``2 n_theta`` triangles; on a disk the innermost band is a fan
    about one centre vertex and contributes ``n_theta``.
    """
    radii = np.linspace(r_lo, r_hi, n_r + 1)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    verts = []
    index = {}
    disk = r_lo == 0
    if disk:
        index[(0, 0)] = 0
        verts.append((0.0, 0.0, float(height(np.array(0.0), np.array(0.0)))))
    for i, r in enumerate(radii):
        if disk and i == 0:
            continue
        x, y = r * np.cos(th), r * np.sin(th)
        z = np.asarray(height(x, y), dtype=float) * np.ones_like(x)
        for j in range(n_theta):
            index[(i, j)] = len(verts)
            verts.append((x[j], y[j], z[j]))
    faces = []
    for i in range(n_r):
        for j in range(n_theta):
            jn = (j + 1) % n_theta
            if disk and i == 0:
                faces.append((index[(0, 0)], index[(1, j)], index[(1, jn)]))
                continue
            a, b = index[(i, j)], index[(i, jn)]
            c, d = index[(i + 1, jn)], index[(i + 1, j)]
            faces.append((a, c, b))
            faces.append((a, d, c))
    return Mesh(np.array(verts, dtype=float), np.array(faces, dtype=int))


def revolution_mesh(s: RevolutionSurface, r_lo: float, r_hi: float, n_r: int, n_theta: int,
                    mirror: bool = False, join_height: float | None = None) -> Mesh:
    """Mesh of a radial graph; with ``mirror`` also the reflected lower sheet ``2 h0 - u`` joined at ``r_lo``."""
    if s.u is None:
        raise ValueError("height function required")
    upper = polar_mesh(lambda x, y: s.u(np.hypot(x, y)), r_lo, r_hi, n_r, n_theta)
    if not mirror:
        return upper
    h0 = float(s.u(np.array(r_lo))) if join_height is None else join_height
    lower_v = upper.vertices.copy()
    lower_v[:, 2] = 2 * h0 - lower_v[:, 2]
    # the first ring is shared; reindex lower vertices beyond it
    n_th = n_theta
    n = len(upper.vertices)
    remap = np.arange(n)
    remap[n_th:] = np.arange(n, n + n - n_th)
    faces_lower = remap[upper.faces[:, [0, 2, 1]]]
    verts = np.vstack([upper.vertices, lower_v[n_th:]])
    return Mesh(verts, np.vstack([upper.faces, faces_lower]))


def curve_mesh(r, z, n_theta: int) -> Mesh:
    """Surface swept by rotating the planar curve ``(r_i, z_i)`` about the vertical axis.

    Consecutive curve samples bound a band of ``2 n_theta`` triangles.
    """
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    verts = np.column_stack([np.outer(r, np.cos(th)).ravel(), np.outer(r, np.sin(th)).ravel(),
                             np.repeat(z, n_theta)])
    i, j = np.meshgrid(np.arange(r.size - 1), np.arange(n_theta), indexing="ij")
    a = i * n_theta + j
    b = i * n_theta + (j + 1) % n_theta
    faces = np.concatenate([np.stack([a, b, b + n_theta], -1).reshape(-1, 3),
                            np.stack([a, b + n_theta, a + n_theta], -1).reshape(-1, 3)])
    return Mesh(verts, faces)
