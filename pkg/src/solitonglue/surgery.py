"""Cutoffs, end profiles and the surgery joining a catenoid to two Grim ends.

A catenoid with neck radius ``c`` has two sheets, which are graphs over
``r > c`` with logarithmic parameters ``+c`` (upper) and ``-c`` (lower).
Each sheet is cut at the radius ``R`` and blended into a Grim end of speed
``eps`` with the same logarithmic parameter and constant term. The whole
two-ended surface is also available as a profile curve ``(r(s), z(s))``
with ``r = c cosh s``: the lower sheet is ``s < 0`` and the neck is
``s = 0``.

Sign conventions. ``mu = <N, e_z>`` for the upward graph normal ``N``, and
the soliton functional of a graph is ``M = mu (eps - g^ij u_ij)``. It vanishes
on translators moving with speed ``eps`` in the ``+e_z`` direction, and equals
``eps mu`` on minimal graphs. Perturbations of a sheet are measured along the
modified normal. This is ``+e_z`` inside ``B(1/eps)`` on the upper sheet and
``-e_z`` on the lower sheet.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .geometry import GraphChart, ScalarField, graph_fields, radial_field
from .profiles import Admissibility, GrimParameters, admissibility, exact_small_scale, grim_rhs

# ---------------------------------------------------------------------------
# cutoff functions
# ---------------------------------------------------------------------------


def _series_mul(a, b):
    out = np.zeros_like(a)
    n = a.shape[0]
    for i in range(n):
        for j in range(n - i):
            out[i + j] += a[i] * b[j]
    return out


def _series_recip(b):
    out = np.zeros_like(b)
    out[0] = 1.0 / b[0]
    for n in range(1, b.shape[0]):
        acc = np.zeros_like(b[0])
        for k in range(1, n + 1):
            acc += b[k] * out[n - k]
        out[n] = -acc * out[0]
    return out


def _bump_series(s, sign):
    """Normalised Taylor coefficients (order 3) in ``t`` of ``exp(-1/s)`` where ``s = s0 + sign*(t - t0)``."""
    s = np.asarray(s, dtype=float)
    pos = s > 0
    ss = np.where(pos, s, 1.0)
    c = np.array([-1 / ss, 1 / ss**2, -1 / ss**3, 1 / ss**4])
    e = np.zeros_like(c)
    with np.errstate(under="ignore"):
        e[0] = np.exp(c[0])
    for n in range(1, 4):
        acc = np.zeros_like(ss)
        for k in range(1, n + 1):
            acc += k * c[k] * e[n - k]
        e[n] = acc / n
    for k in range(4):
        e[k] *= sign**k
    e[:, ~pos] = 0.0
    return e


def _template_jets(t):
    """Value and first three derivatives of the unit cutoff (1 on ``t <= 1``, 0 on ``t >= 2``)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros((4, t.size))
    out[0] = np.where(t <= 1, 1.0, 0.0)
    mid = (t > 1) & (t < 2)
    if np.any(mid):
        tm = t[mid]
        u = _bump_series(2 - tm, -1.0)
        v = _bump_series(tm - 1, 1.0)
        q = _series_mul(u, _series_recip(u + v))
        fact = np.array([1.0, 1.0, 2.0, 6.0])
        out[:, mid] = q * fact[:, None]
        # closed form keeps the sign of the slope exact near the ends of the ramp
        a, b = u[0], v[0]
        out[1, mid] = -a * b * ((2 - tm) ** -2 + (tm - 1) ** -2) / (a + b) ** 2
    return out


@dataclass(frozen=True)
class CutoffFunction:
    """Smooth nonincreasing ``chi(r)`` equal to 1 on ``[0, a]`` and 0 on ``[2a, inf)``.

    Built from ``exp(-1/t)``; derivatives through order 3 are exact.
    """

    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("transition radius must be positive")

    def jets(self, r, order: int = 3) -> np.ndarray:
        """Array of shape ``(order + 1, n)`` with ``d^k chi / dr^k``."""
        r = np.asarray(r, dtype=float)
        j = _template_jets(np.abs(r) / self.a)[: order + 1]
        scale = self.a ** -np.arange(order + 1)
        out = j * scale[:, None]
        if np.ndim(r) == 0:
            return out[:, 0]
        return out.reshape((order + 1,) + r.shape)

    def __call__(self, r):
        return self.jets(r, 0)[0]

    def derivative(self, r, n: int = 1):
        if not 0 <= n <= 3:
            raise ValueError("derivatives are available through order 3")
        return self.jets(r, n)[n]

    def sup_derivative(self, n: int = 1, samples: int = 20001) -> float:
        r = np.linspace(self.a, 2 * self.a, samples)
        return float(np.max(np.abs(self.derivative(r, n))))


def cutoff(a: float) -> CutoffFunction:
    return CutoffFunction(float(a))


# ---------------------------------------------------------------------------
# end profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EndProfile:
    """Height ``h(r)`` of one end with its first three radial derivatives.

    ``jets(r)`` returns an array ``(h, h', h'', h''')``.
    """

    kind: str
    c: float
    A_const: float
    epsilon: float
    r_lo: float
    r_hi: float
    _jets: Callable = field(repr=False, compare=False)
    meta: dict = field(default_factory=dict, repr=False, compare=False)

    def jets(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_lo * (1 - 1e-12)) or np.any(r > self.r_hi * (1 + 1e-12)):
            raise ValueError(f"radius outside end domain [{self.r_lo:.6g}, {self.r_hi:.6g}]")
        return self._jets(r)

    def height(self, r):
        return self.jets(r)[0]

    def slope(self, r):
        return self.jets(r)[1]

    def curvature(self, r):
        return self.jets(r)[2]

    def surface(self):
        """The end as a :class:`~solitonglue.geometry.GraphChart`-ready radial field."""
        return radial_field(self.height, self.slope, self.curvature)

    def chart(self) -> GraphChart:
        return GraphChart(self.surface(), self.epsilon, self.r_lo, self.r_hi)


def catenoid_end_profile(c: float, A_const: float, r_range: tuple[float, float], epsilon: float = 0.0) -> EndProfile:
    """Exact catenoidal end ``A + c (arccosh(r/|c|) - log(2/|c|))``.

    Its expansion is ``A + c log r + O(r^-2)``. With ``c = 0`` it is the
    horizontal plane at height ``A``.
    """
    lo, hi = map(float, r_range)
    if c != 0 and lo <= abs(c):
        raise ValueError("inner radius must exceed |c|")
    if lo <= 0:
        raise ValueError("radii must be positive")
    ac = abs(c)

    def jets(r):
        r = np.asarray(r, dtype=float)
        if c == 0:
            z = np.zeros_like(r)
            return np.array([z + A_const, z, z, z])
        d = r * r - c * c
        sq = np.sqrt(d)
        h = A_const + c * (np.arccosh(r / ac) - math.log(2 / ac))
        return np.array([h, c / sq, -c * r / (d * sq), c * (2 * r * r + c * c) / (d * d * sq)])

    return EndProfile("catenoid", float(c), float(A_const), float(epsilon), lo, hi, jets)


def fit_leading_data(end: EndProfile, lo: float, hi: float, n: int = 256) -> dict:
    """Least-squares fit of the height on ``[lo, hi]`` against ``{1, log r, r^2}``."""
    r = np.geomspace(lo, hi, n)
    basis = np.column_stack([np.ones_like(r), np.log(r), r * r])
    coef, *_ = np.linalg.lstsq(basis, end.height(r), rcond=None)
    fit = basis @ coef
    return {"A_const": float(coef[0]), "c": float(coef[1]), "quadratic": float(coef[2]),
            "max_residual": float(np.max(np.abs(fit - end.height(r))))}


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def grim_end_profile(c: float, A_const: float, epsilon: float, R: float, r_range: tuple[float, float] | None = None,
                     k: int = 2, tol: float = 1e-12, n_nodes: int = 4000, unit_outer: float = 10.0,
                     fitted_constant: float | None = None) -> EndProfile:
    """Grim end of speed ``epsilon`` with logarithmic parameter ``c`` and constant term ``A_const``.

    It is the rescaling ``r -> v(eps r)`` of the small-scale solution with
    scale ``R``. The additive constant is fixed so that the fit against
    ``{1, log r, r^2}`` on ``[R, 2R]`` has constant term ``fitted_constant``
    (default ``A_const``). ``r_range`` defaults to ``[R/8, unit_outer/eps]``.
    """
    lo, hi = (R / 8, unit_outer / epsilon) if r_range is None else map(float, r_range)
    params = GrimParameters(float(epsilon), float(R), float(c))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        prof = exact_small_scale(k, params, tol, relaxed=True,
                                 x_range=(math.log(lo / R), math.log(hi / R)))
    eps = float(epsilon)
    # height by Gauss-Legendre on a geometric node set, then Hermite interpolation
    nodes = np.geomspace(lo, hi, n_nodes)
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    half = 0.5 * (nodes[1:] - nodes[:-1])
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = prof(eps * pts.ravel()).reshape(pts.shape)
    inc = np.sum(vals * _GL_W[None, :], axis=1) * half
    h_nodes = np.concatenate([[0.0], np.cumsum(inc)])
    slope_nodes = prof(eps * nodes)
    spline = CubicHermiteSpline(nodes, h_nodes, slope_nodes)

    def raw_jets(r, offset=0.0):
        r = np.asarray(r, dtype=float)
        y = eps * r
        v = prof(y)
        dv = grim_rhs(y, v)
        # v'' from differentiating y v' = (y - v)(1 + v^2)
        d2v = ((1 - dv) * (1 + v * v) + (y - v) * 2 * v * dv - dv) / y
        return np.array([spline(r) + offset, v, eps * dv, eps * eps * d2v])

    tmp = EndProfile("grim", float(c), 0.0, eps, lo, hi, raw_jets)
    fit = fit_leading_data(tmp, R, 2 * R)
    target = A_const if fitted_constant is None else fitted_constant
    offset = target - fit["A_const"]
    end = EndProfile("grim", float(c), float(A_const), eps, lo, hi, lambda r: raw_jets(r, offset),
                     {"profile": prof, "params": params, "fit": fit, "k": k})
    return end


# ---------------------------------------------------------------------------
# joining
# ---------------------------------------------------------------------------


class LeadingDataMismatch(ValueError):
    pass


@dataclass(frozen=True)
class JoinedEnd:
    """One sheet ``H = chi F + (1 - chi) G`` with ``chi`` the cutoff of ``A(R, 2R)``."""

    F: EndProfile
    G: EndProfile
    R: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def chi(self) -> CutoffFunction:
        return cutoff(self.R)

    def jets(self, r) -> np.ndarray:
        """``(H, H', H'', H''')``: exactly ``F`` below ``R`` and exactly ``G`` above ``2R``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((4, r.size))
        inner = r <= self.R
        outer = r >= 2 * self.R
        mid = ~(inner | outer)
        if np.any(inner):
            out[:, inner] = self.F.jets(r[inner])
        if np.any(outer):
            out[:, outer] = self.G.jets(r[outer])
        if np.any(mid):
            rm = r[mid]
            f = self.F.jets(rm)
            g = self.G.jets(rm)
            x = self.chi.jets(rm)
            d = f - g
            out[0, mid] = g[0] + x[0] * d[0]
            out[1, mid] = g[1] + x[0] * d[1] + x[1] * d[0]
            out[2, mid] = g[2] + x[0] * d[2] + 2 * x[1] * d[1] + x[2] * d[0]
            out[3, mid] = g[3] + x[0] * d[3] + 3 * x[1] * d[2] + 3 * x[2] * d[1] + x[3] * d[0]
        return out

    def height(self, r):
        return self.jets(r)[0]


def join(F: EndProfile, G: EndProfile, R: float, rtol: float = 0.05) -> JoinedEnd:
    """Blend ``F`` into ``G`` across ``A(R, 2R)`` after checking their leading data agree."""
    if F.r_hi < 2 * R or G.r_lo > R:
        raise ValueError("F and G must both cover the transition annulus A(R, 2R)")
    if F.kind == "catenoid" and G.kind == "catenoid" and F is G:
        return JoinedEnd(F, G, float(R), {})
    fF = fit_leading_data(F, R, 2 * R)
    fG = fit_leading_data(G, R, 2 * R)
    scale = max(abs(F.c), 1e-300)
    dc = abs(fF["c"] - fG["c"])
    if F.c != G.c or dc > rtol * scale:
        raise LeadingDataMismatch(f"logarithmic parameters differ: {fF['c']:.6g} vs {fG['c']:.6g}")
    if abs(fF["A_const"] - fG["A_const"]) > 1e-9 * max(1.0, abs(F.A_const)):
        raise LeadingDataMismatch("constant terms differ")
    r = np.linspace(R, 2 * R, 64)
    J = JoinedEnd(F, G, float(R))
    H = J.height(r)
    eps = G.epsilon
    chi = cutoff(R)(r)
    base_R = F.A_const + F.c * math.log(R) + 0.25 * eps * (1 - chi) * r * r
    base_r = F.A_const + F.c * np.log(r) + 0.25 * eps * (1 - chi) * r * r
    diag = {"fit_F": fF, "fit_G": fG,
            "remainder_logR": float(np.max(np.abs(H - base_R))),
            "remainder_logr": float(np.max(np.abs(H - base_r)))}
    return JoinedEnd(F, G, float(R), diag)


def admissible_params(epsilon: float, R: float, Delta: float, eta: float, Cbound: float, c: float) -> Admissibility:
    """The parameter window with the scale parameter taken equal to ``R``."""
    return admissibility(epsilon, R, Delta, eta, Cbound, c)


# ---------------------------------------------------------------------------
# soliton functional of graphs and its linearisation (radial form)
# ---------------------------------------------------------------------------


def graph_mcfs(r, h1, h2, epsilon):
    """``M = mu (eps - mu^2 h'' - h'/r)`` for a radial graph with slope ``h1`` and ``h'' = h2``."""
    mu = 1 / np.sqrt(1 + h1 * h1)
    return mu * (epsilon - mu * mu * h2 - h1 / r)


def graph_mcfs_linearised(r, h1, h2, d1, d2, epsilon):
    """Directional derivative of :func:`graph_mcfs` along a height change with jets ``(d1, d2)``."""
    mu = 1 / np.sqrt(1 + h1 * h1)
    dmu = -h1 * mu**3
    inner = epsilon - mu * mu * h2 - h1 / r
    dM_dh1 = dmu * inner + mu * (-2 * mu * dmu * h2 - 1 / r)
    dM_dh2 = -mu**3
    return dM_dh1 * d1 + dM_dh2 * d2


def graph_jacobi_coefficients(r, h1, h2, epsilon):
    """``(a_rr, b_r)`` of the height linearisation ``-(1/mu) dM`` in radial form.

    The operator is ``a_rr f'' + (1/r + b_r) f' - m^2 f / r^2``; it has no
    zeroth-order term, so constants lie in its kernel on any graph.
    """
    mu2 = 1 / (1 + h1 * h1)
    return mu2, mu2 * h1 * (-3 * mu2 * h2 - h1 / r + epsilon)


# ---------------------------------------------------------------------------
# modified normal
# ---------------------------------------------------------------------------


def modified_normal_coefficients(mu, r, epsilon):
    """``(a, b, psi)`` with ``N_hat = a e_z + b N`` and ``psi = <N_hat, N>``.

    ``cos(theta) = mu`` and ``cos(phi) = (1 - chi) + chi mu`` with ``chi`` the
    cutoff of ``A(1/eps, 2/eps)``.
    """
    mu = np.asarray(mu, dtype=float)
    chi = cutoff(1 / epsilon)(np.asarray(r, dtype=float))
    cos_t = np.clip(mu, -1.0, 1.0)
    cos_p = np.clip((1 - chi) + chi * cos_t, -1.0, 1.0)
    theta = np.arccos(cos_t)
    phi = np.arccos(cos_p)
    sin_t = np.sin(theta)
    small = sin_t < 1e-12
    safe = np.where(small, 1.0, sin_t)
    a = np.where(small, 1.0, np.sin(phi) / safe)
    b = np.where(small, 0.0, np.sin(theta - phi) / safe)
    return a, b, a * cos_t + b


def modified_normal(chart: GraphChart, epsilon: float | None = None):
    """``(x, y) -> N_hat`` (shape ``(3, ...)``) on a graph chart."""
    eps = chart.epsilon if epsilon is None else epsilon

    def field_(x, y):
        F = graph_fields(chart, x, y)
        r = np.hypot(x, y)
        a, b, _ = modified_normal_coefficients(F.mu, r, eps)
        ez = np.zeros_like(F.normal)
        ez[2] = 1.0
        return a * ez + b * F.normal

    return field_


# ---------------------------------------------------------------------------
# glued surface
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GluedSurface:
    """Catenoid of neck radius ``c`` at height ``Z0``, joined at ``R`` to two Grim ends of speed ``epsilon``."""

    c: float
    epsilon: float
    R: float
    Z0: float
    upper: JoinedEnd
    lower: JoinedEnd
    neck_radius: float
    extension_radius: float
    delta: float = 1.5
    gamma: float = 0.05
    alpha: float = 0.05
    symmetry_order: int = 1
    grim_k: int = 2

    @property
    def ends(self) -> dict:
        return {+1: self.upper, -1: self.lower}

    @property
    def r_max(self) -> float:
        return min(self.upper.G.r_hi, self.lower.G.r_hi)

    def sheet_jets(self, sheet: int, r) -> np.ndarray:
        return self.ends[sheet].jets(r)

    def residual(self, sheet: int, r) -> np.ndarray:
        j = self.sheet_jets(sheet, r)
        return graph_mcfs(np.asarray(r, dtype=float), j[1], j[2], self.epsilon)

    def residual_by_region(self, n: int = 400) -> dict:
        """Sup of ``|M|`` and of ``|M - eps mu|`` per region and sheet."""
        R, eps = self.R, self.epsilon
        regions = {"core": (self.neck_radius * 2, R), "transition": (R, 2 * R), "far": (2 * R, self.r_max)}
        out = {}
        for name, (lo, hi) in regions.items():
            r = np.geomspace(lo, hi, n)
            for sheet, tag in ((1, "upper"), (-1, "lower")):
                j = self.sheet_jets(sheet, r)
                M = graph_mcfs(r, j[1], j[2], eps)
                mu = 1 / np.sqrt(1 + j[1] ** 2)
                out[f"{name}/{tag}"] = {"sup_abs": float(np.max(np.abs(M))),
                                        "sup_minus_eps_mu": float(np.max(np.abs(M - eps * mu)))}
        return out

    def weighted_residual(self, n: int = 2000, region: tuple[float, float] | None = None) -> float:
        """Sup of ``r^(2+delta) |M|`` over both sheets of ``B(4R)`` (cylindrical C^0 weight)."""
        lo, hi = (2 * self.neck_radius, 4 * self.R) if region is None else region
        r = np.geomspace(lo, hi, n)
        best = 0.0
        for sheet in (1, -1):
            best = max(best, float(np.max(r ** (2 + self.delta) * np.abs(self.residual(sheet, r)))))
        return best

    # -- profile curve ----------------------------------------------------

    def curve(self, s, catenoid_only: bool = False, sheet_override: EndProfile | None = None) -> dict:
        """Profile curve data at parameters ``s`` (arrays ``r, z`` and their first two ``s``-derivatives).

        ``catenoid_only`` gives the core catenoid itself; ``sheet_override``
        replaces both sheets by a single end profile (used for a Grim end on
        its own).
        """
        s = np.asarray(s, dtype=float)
        c = self.c
        r = c * np.cosh(s)
        rs = c * np.sinh(s)
        rss = r.copy()
        z = self.Z0 + c * s
        zs = np.full_like(s, c)
        zss = np.zeros_like(s)
        if sheet_override is not None:
            j = sheet_override.jets(r)
            z, zs, zss = j[0], j[1] * rs, j[2] * rs * rs + j[1] * rss
        elif not catenoid_only:
            for sheet in (1, -1):
                m = (np.sign(s) == sheet) & (r > self.R)
                if np.any(m):
                    j = self.sheet_jets(sheet, r[m])
                    z[m] = j[0]
                    zs[m] = j[1] * rs[m]
                    zss[m] = j[2] * rs[m] ** 2 + j[1] * rss[m]
        return {"s": s, "r": r, "z": z, "r_s": rs, "z_s": zs, "r_ss": rss, "z_ss": zss}

    # -- deficiency fields ------------------------------------------------

    def extension_cutoff(self) -> CutoffFunction:
        """``1 - eta`` where ``eta`` switches the end perturbations on across ``A(r_ext, 2 r_ext)``."""
        return cutoff(self.extension_radius)


def build_glued_surface(c: float = 0.4, epsilon: float = 1e-6, R: float = 20.0, Z0: float = 0.0,
                        neck_radius: float | None = None, extension_radius: float | None = None,
                        delta: float = 1.5, gamma: float = 0.05, alpha: float = 0.05, symmetry_order: int = 1,
                        grim_k: int = 2, tol: float = 1e-12, unit_outer: float = 10.0) -> GluedSurface:
    """Assemble the catenoid core, both Grim ends and their blends.

    The neck blend of the modified normal uses ``A(1.5c, 3c)`` and the
    extension of end perturbations across the core uses ``A(3c, 6c)`` by
    default; both must lie inside ``B(R/4)``.
    """
    if c <= 0:
        raise ValueError("neck radius c must be positive")
    rn = 1.5 * c if neck_radius is None else float(neck_radius)
    rx = 2 * rn if extension_radius is None else float(extension_radius)
    if 2 * rx >= R / 4:
        raise ValueError("core cutoffs must sit inside B(R/4); increase R or decrease c")
    ends = {}
    for sheet in (1, -1):
        ce = sheet * c
        A_end = Z0 + ce * math.log(2 / c)
        F = catenoid_end_profile(ce, A_end, (c * (1 + 1e-9), unit_outer / epsilon), epsilon)
        G = grim_end_profile(ce, A_end, epsilon, R, k=grim_k, tol=tol, unit_outer=unit_outer,
                             fitted_constant=fit_leading_data(F, R, 2 * R)["A_const"])
        ends[sheet] = join(F, G, R)
    return GluedSurface(float(c), float(epsilon), float(R), float(Z0), ends[1], ends[-1], rn, rx,
                        delta, gamma, alpha, symmetry_order, grim_k)


def vary_end(surface: GluedSurface, sheet: int, dc: float, tol: float = 1e-12) -> JoinedEnd:
    """The joined sheet with logarithmic parameter changed by ``dc`` (constant term kept)."""
    old = surface.ends[sheet]
    ce = old.F.c + dc
    F = catenoid_end_profile(ce, old.F.A_const, (abs(ce) * (1 + 1e-9), old.G.r_hi), surface.epsilon)
    G = grim_end_profile(ce, old.F.A_const, surface.epsilon, surface.R, (old.G.r_lo, old.G.r_hi),
                         k=surface.grim_k, tol=tol, fitted_constant=fit_leading_data(F, surface.R, 2 * surface.R)["A_const"])
    return JoinedEnd(F, G, surface.R)


@dataclass(frozen=True)
class DeficiencyFields:
    """Pointwise ``X`` (logarithmic parameter) and ``Y`` (vertical shift) per sheet as callables of ``r``.

    Values are in the normalisation of the modified Jacobi operator, i.e.
    ``-(1/psi)`` times the variation of the soliton functional, expressed in
    the coordinates of the modified normal.
    """

    X: dict
    Y: dict
    W: dict  # height variations (jets) used for X


def _richardson(fun, h):
    d1 = (fun(h) - fun(-h)) / (2 * h)
    d2 = (fun(2 * h) - fun(-2 * h)) / (4 * h)
    return (4 * d1 - d2) / 3


def deficiency_fields(surface: GluedSurface, h: float | None = None, tol: float = 1e-12) -> DeficiencyFields:
    """Richardson realisations of ``X`` and ``Y`` on both sheets.

    The end perturbations are switched on across ``A(r_ext, 2 r_ext)`` by
    ``eta = 1 - chi_ext``, so both fields vanish near the neck. ``X`` is the
    linearised functional along ``eta dH/dc``. ``Y`` is the same for the
    vertical shift ``eta``. On the lower sheet the modified normal points
    down, so both carry an extra sign there.
    """
    h = 1e-3 * surface.c if h is None else float(h)
    ext = surface.extension_cutoff()
    eps = surface.epsilon
    varied = {}
    for sheet in (1, -1):
        varied[sheet] = {k: vary_end(surface, sheet, k * h, tol) for k in (-2, -1, 1, 2)}

    def make(sheet):
        base = surface.ends[sheet]
        fam = varied[sheet]

        def jets_c(r, k):
            return base.jets(r) if k == 0 else fam[k].jets(r)

        def W(r):
            r = np.atleast_1d(np.asarray(r, dtype=float))
            d1 = (jets_c(r, 1) - jets_c(r, -1)) / (2 * h)
            d2 = (jets_c(r, 2) - jets_c(r, -2)) / (4 * h)
            return (4 * d1 - d2) / 3

        def eta_jets(r):
            x = ext.jets(r)
            return np.array([1 - x[0], -x[1], -x[2], -x[3]])

        def X(r):
            r = np.atleast_1d(np.asarray(r, dtype=float))
            j = base.jets(r)
            w = W(r)
            e = eta_jets(r)
            d1 = e[0] * w[1] + e[1] * w[0]
            d2 = e[0] * w[2] + 2 * e[1] * w[1] + e[2] * w[0]
            mu = 1 / np.sqrt(1 + j[1] ** 2)
            return -sheet * graph_mcfs_linearised(r, j[1], j[2], d1, d2, eps) / mu

        def Y(r):
            r = np.atleast_1d(np.asarray(r, dtype=float))
            j = base.jets(r)
            e = eta_jets(r)
            mu = 1 / np.sqrt(1 + j[1] ** 2)
            return -sheet * graph_mcfs_linearised(r, j[1], j[2], e[1], e[2], eps) / mu

        return X, Y, W

    X, Y, W = {}, {}, {}
    for sheet in (1, -1):
        X[sheet], Y[sheet], W[sheet] = make(sheet)
    return DeficiencyFields(X, Y, W)


def deficiency_X(fields: DeficiencyFields, l: float, sheet: int, r):
    return l * fields.X[sheet](r)


def deficiency_Y(fields: DeficiencyFields, v: float, sheet: int, r):
    return v * fields.Y[sheet](r)


def weighted_norm_X(surface: GluedSurface, fields: DeficiencyFields, n: int = 3000) -> dict:
    """``sup r^(2+delta) |X|`` over the ends ``A(2 r_ext, inf)`` and over all of each sheet."""
    rx = surface.extension_radius
    r = np.geomspace(2 * rx, 4 * surface.R, n)
    out = {}
    for sheet, tag in ((1, "upper"), (-1, "lower")):
        x = fields.X[sheet](r)
        out[tag] = float(np.max(r ** (2 + surface.delta) * np.abs(x)))
    out["max"] = max(out["upper"], out["lower"])
    return out


# ---------------------------------------------------------------------------
# perturbations
# ---------------------------------------------------------------------------


def perturb(surface: GluedSurface, sheet: int, l: float, v: float, f: Callable | float = 0.0,
            r_range: tuple[float, float] | None = None, n: int = 4001) -> GraphChart:
    """Graph chart of one sheet of ``(x, H_{c+l eta}(x)) + v eta e_z + f(x) N_hat`` for radial ``f``.

    ``eta`` is the extension cutoff, equal to 1 on the ends. The perturbed
    profile curve is re-parametrised by its radius. A
    :class:`ValueError` is raised if it stops being a graph.
    """
    lo, hi = (2 * surface.extension_radius, min(4 * surface.R, surface.r_max)) if r_range is None else r_range
    r = np.geomspace(lo, hi, n)
    base = surface.ends[sheet]
    ext = surface.extension_cutoff()
    eta = 1 - ext(r)
    if l != 0:
        if np.any(eta < 1):
            raise ValueError("logarithmic perturbations are only charted where the extension cutoff equals 1")
        j = vary_end(surface, sheet, l).jets(r)
    else:
        j = base.jets(r)
    fv = (np.full_like(r, float(f)) if np.isscalar(f) else np.asarray(f(r), dtype=float))
    z = j[0] + v * eta
    mu = 1 / np.sqrt(1 + j[1] ** 2)
    a, b, _ = modified_normal_coefficients(mu, r, surface.epsilon)
    # N_hat in the (r, z) half-plane, with the lower sheet's sign convention
    n_r = b * (-j[1] * mu)
    n_z = sheet * a + b * mu
    rr = r + fv * n_r
    zz = z + fv * n_z
    if np.any(np.diff(rr) <= 0):
        raise ValueError("perturbed surface is not a graph")
    if v == 0 and l == 0 and np.all(fv == 0):
        return GraphChart(ScalarField(*_radial_from_jets(base, 0.0)), surface.epsilon, lo, hi)
    if l == 0 and np.all(fv == 0) and np.all(eta == 1):
        return GraphChart(ScalarField(*_radial_from_jets(base, v)), surface.epsilon, lo, hi)
    spline = CubicHermiteSpline(rr, zz, np.gradient(zz, rr, edge_order=2))
    d1 = spline.derivative(1)
    d2 = spline.derivative(2)
    field_ = radial_field(lambda q: spline(q), lambda q: d1(q), lambda q: d2(q))
    return GraphChart(field_, surface.epsilon, float(rr[0]), float(rr[-1]))


def _radial_from_jets(end: JoinedEnd, shift: float):
    fld = radial_field(lambda q: end.jets(q)[0] + shift, lambda q: end.jets(q)[1], lambda q: end.jets(q)[2])
    return fld.f, fld.grad, fld.hess
