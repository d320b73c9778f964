"""Jacobi operators of Grim surfaces, their conjugations and mode-wise discretisations.

Two coordinate systems appear. On the Grim paraboloid (speed 1), mode
operators use the intrinsic distance ``rho`` from the tip, with ``dr/drho = mu``
and ``du/drho = v mu``. Plane forms use the radius ``r`` of the graph. The
unconjugated operator is ``J f = Lap f + |A|^2 f + <grad f, e_z>``. It
annihilates ``mu = <N, e_z>`` on solitons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import LinearOperator, onenormest, splu

from .profiles import grim_rhs, paraboloid_profile
from .surgery import cutoff

# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

WEIGHT_KINDS = ("phi_gamma", "psi", "composite")


@dataclass(frozen=True)
class WeightSpec:
    """Positive radial weight with its first two radial derivatives.

    ``phi_gamma`` is ``exp((1+gamma) u/2)``; ``psi`` is ``chi mu + (1 - chi)``;
    ``composite`` is ``chi + (1 - chi) phi_gamma``. The cutoffs use ``A(radius, 2 radius)``.
    """

    kind: str
    gamma: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    def jets(self, r, u, v, dv):
        """``(w, w', w'')`` in ``r`` along a radial soliton graph with slope ``v`` and ``v' = dv``."""
        r, u, v, dv = (np.asarray(a, dtype=float) for a in (r, u, v, dv))
        k = 0.5 * (1 + self.gamma)
        if self.kind in ("phi_gamma", "composite"):
            phi = np.exp(k * u)
            dphi = k * v * phi
            d2phi = (k * dv + (k * v) ** 2) * phi
            if self.kind == "phi_gamma":
                return phi, dphi, d2phi
            x = cutoff(self.radius).jets(r, 2)
            return (x[0] + (1 - x[0]) * phi,
                    x[1] * (1 - phi) + (1 - x[0]) * dphi,
                    x[2] * (1 - phi) - 2 * x[1] * dphi + (1 - x[0]) * d2phi)
        mu = 1 / np.sqrt(1 + v * v)
        dmu = -v * dv * mu**3
        d2v = _second_slope_derivative(r, v, dv)
        d2mu = -(dv * dv + v * d2v) * mu**3 + 3 * (v * dv) ** 2 * mu**5
        x = cutoff(self.radius).jets(r, 2)
        return (x[0] * mu + 1 - x[0],
                x[1] * (mu - 1) + x[0] * dmu,
                x[2] * (mu - 1) + 2 * x[1] * dmu + x[0] * d2mu)


def _second_slope_derivative(r, v, dv):
    """``v''`` for the unit-speed soliton ODE ``r v' = (r - v)(1 + v^2)``."""
    return ((1 - dv) * (1 + v * v) + (r - v) * 2 * v * dv - dv) / r


# ---------------------------------------------------------------------------
# mode operators
# ---------------------------------------------------------------------------


class SingularDiscretization(RuntimeError):
    pass


class PlateauUndetected(ValueError):
    pass


@dataclass(frozen=True)
class Boundary:
    """Ghost rule ``f_ghost = factor * f_ref``.

    At the inner end ``ref`` is 0 or 1, counted from the first node. At the
    outer end it is counted back from the last node. ``factor = 0`` with
    ``ref = 0`` is a homogeneous Dirichlet condition.
    """

    kind: str
    factor: float = 0.0
    ref: int = 0


def dirichlet() -> Boundary:
    return Boundary("dirichlet", 0.0, 0)


def mirror(sign: float = 1.0, node_centred: bool = False) -> Boundary:
    return Boundary("mirror", float(sign), 1 if node_centred else 0)


def robin(beta: float, h: float) -> Boundary:
    """Face-centred ``f' + beta f = 0``."""
    return Boundary("robin", (1 - 0.5 * beta * h) / (1 + 0.5 * beta * h), 0)


def ratio(kappa: float) -> Boundary:
    return Boundary("ratio", float(kappa), 0)


@dataclass(frozen=True)
class ModeOperator:
    """Three-point discretisation of ``p f'' + q f' + w f`` on a uniform grid ``x``.

    ``w`` already contains the angular term ``-m^2/r^2``.
    """

    x: np.ndarray
    p: np.ndarray
    q: np.ndarray
    w: np.ndarray
    m: int = 0
    inner: Boundary = field(default_factory=dirichlet)
    outer: Boundary = field(default_factory=dirichlet)
    r: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def n(self) -> int:
        return self.x.size

    def bands(self):
        h = self.h
        lo = self.p / h**2 - self.q / (2 * h)
        up = self.p / h**2 + self.q / (2 * h)
        dg = -2 * self.p / h**2 + self.w
        lo, up, dg = lo.copy(), up.copy(), dg.copy()
        # inner ghost
        if self.inner.ref == 0:
            dg[0] += lo[0] * self.inner.factor
        else:
            up[0] += lo[0] * self.inner.factor
        # outer ghost
        if self.outer.ref == 0:
            dg[-1] += up[-1] * self.outer.factor
        else:
            lo[-1] += up[-1] * self.outer.factor
        return lo, dg, up

    def matrix(self) -> sp.csc_matrix:
        lo, dg, up = self.bands()
        return sp.diags([lo[1:], dg, up[:-1]], [-1, 0, 1], format="csc")

    def apply(self, f) -> np.ndarray:
        return self.matrix() @ np.asarray(f, dtype=float)

    def factor(self):
        cache = self.meta.setdefault("_lu", [])
        if not cache:
            try:
                cache.append(splu(self.matrix()))
            except RuntimeError as exc:
                raise SingularDiscretization(str(exc)) from exc
        return cache[0]

    def solve(self, g) -> np.ndarray:
        f = self.factor().solve(np.asarray(g, dtype=float))
        if not np.all(np.isfinite(f)):
            raise SingularDiscretization("non-finite solution")
        return f


def solve_mode(op: ModeOperator, g) -> np.ndarray:
    """Solve ``op f = g``."""
    return op.solve(g)


def inverse_norm_estimate(op: ModeOperator | sp.spmatrix) -> float:
    """Lower-bound estimate of the sup-to-sup norm of the discrete inverse.

    Uses Higham's block 1-norm estimator applied to the transposed inverse.
    """
    if isinstance(op, ModeOperator):
        lu = op.factor()
        n = op.n
    else:
        try:
            lu = splu(sp.csc_matrix(op))
        except RuntimeError as exc:
            raise SingularDiscretization(str(exc)) from exc
        n = op.shape[0]
    inv_t = LinearOperator((n, n), matvec=lambda x: lu.solve(np.asarray(x, dtype=float).ravel(), trans="T"),
                           rmatvec=lambda x: lu.solve(np.asarray(x, dtype=float).ravel()), dtype=float)
    return float(onenormest(inv_t))


def conjugate_radial(P, Q, W, psi, dpsi, d2psi):
    """Coefficients of ``psi^-1 L (psi f)`` for ``L = P f'' + Q f' + W f``."""
    return P, 2 * P * dpsi / psi + Q, (P * d2psi + Q * dpsi) / psi + W


# ---------------------------------------------------------------------------
# paraboloid in intrinsic coordinates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParaboloidGeometry:
    """Speed-1 Grim paraboloid sampled at intrinsic distances ``rho`` from the tip."""

    rho: np.ndarray
    r: np.ndarray
    u: np.ndarray
    v: np.ndarray
    dv: np.ndarray

    @property
    def mu(self):
        return 1 / np.sqrt(1 + self.v**2)

    @property
    def A2(self):
        """``|A|^2 = v'^2 mu^6 + v^2 mu^2 / r^2``."""
        mu = self.mu
        return self.dv**2 * mu**6 + (self.v * mu / self.r) ** 2

    @property
    def circle_curvature(self):
        return self.mu / self.r


_PARABOLOID_CACHE: dict = {}


def _paraboloid(r_max: float):
    key = math.ceil(r_max)
    if key not in _PARABOLOID_CACHE:
        _PARABOLOID_CACHE.clear()
        _PARABOLOID_CACHE[key] = paraboloid_profile((0.0, float(key)), far_reference=None)
    return _PARABOLOID_CACHE[key]


def paraboloid_geometry(rho, tol: float = 1e-12) -> ParaboloidGeometry:
    """Integrate ``dr/drho = mu``, ``du/drho = v mu`` from the tip and sample at ``rho``."""
    rho = np.asarray(rho, dtype=float)
    rmax = math.sqrt(2 * rho.max()) + 2
    prof = _paraboloid(rmax)

    def rhs(_, y):
        v = float(prof(max(y[0], 0.0)))
        mu = 1 / math.sqrt(1 + v * v)
        return [mu, v * mu]

    sol = solve_ivp(rhs, (0.0, float(rho.max())), [0.0, 0.0], method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=True)
    r, u = sol.sol(rho)
    v = prof(r)
    return ParaboloidGeometry(rho, r, u, v, grim_rhs(r, v))


def jacobi_coeffs_rho(geom: ParaboloidGeometry, m: int = 0):
    """``(p, q, w)`` of the unconjugated ``J`` in ``rho``: ``f_rr + (mu/r + v mu) f_r + (|A|^2 - m^2/r^2) f``."""
    mu = geom.mu
    one = np.ones_like(geom.rho)
    return one, mu / geom.r + geom.v * mu, geom.A2 - m * m / geom.r**2


def conjugated_coeffs(geom: ParaboloidGeometry, gamma: float) -> dict:
    """Drift, potential and curvature terms of ``J_gamma = phi_gamma J phi_gamma^-1``.

    ``J_gamma f = f_rr + (kappa - gamma v mu) f_r + V f`` with circle curvature
    ``kappa = mu/r`` and ``V = (gamma^2-1)/4 - (1+gamma)^2 mu^2/4 + (1+gamma) mu^2 v/(2r) + |A|^2``.
    The last two terms form the decaying remainder of the potential.
    """
    mu = geom.mu
    g = float(gamma)
    remainder = -(1 + g) ** 2 * mu**2 / 4 + geom.A2
    return {"curvature": geom.circle_curvature, "drift": -g * geom.v * mu,
            "potential": (g * g - 1) / 4 + remainder, "remainder": remainder,
            "plateau": (g * g - 1) / 4, "mu2": mu**2, "A2": geom.A2}


def mode_operator(gamma: float = 0.0, m: int = 0, h: float = 0.05, rho_max: float = 200.0,
                  plateau_tol: float = 0.02, conjugated: bool = True, tol: float = 1e-12) -> ModeOperator:
    """Mode-``m`` discretisation of ``J_gamma`` on the paraboloid over ``[0, rho_max]``.

    The grid is cell-centred (``rho_j = (j + 1/2) h``), with a parity mirror at the
    tip and the decaying Robin condition ``f' + (1 - gamma) f / 2 = 0`` at the
    outer face. The grid is rejected if the potential has not reached its
    plateau by the outer end.
    """
    n = int(round(rho_max / h))
    if n < 8:
        raise PlateauUndetected("grid too coarse")
    rho = (np.arange(n) + 0.5) * h
    geom = paraboloid_geometry(rho, tol)
    if conjugated:
        c = conjugated_coeffs(geom, gamma)
        if abs(c["remainder"][-1]) > plateau_tol:
            raise PlateauUndetected(f"potential not within {plateau_tol} of its plateau at rho={rho[-1]:.3g}")
        p = np.ones(n)
        q = c["curvature"] + c["drift"]
        w = c["potential"] - m * m / geom.r**2
        outer = robin(0.5 * (1 - gamma), h)
    else:
        p, q, w = jacobi_coeffs_rho(geom, m)
        outer = dirichlet()
    return ModeOperator(rho, p, q, w, m, mirror((-1.0) ** m), outer, geom.r,
                        {"gamma": gamma, "geometry": geom})


def discrete_kernel_residual(h: float, rho_max: float = 20.0, rho_probe: float = 15.0) -> float:
    """Sup of ``|J_0^h (phi_0 mu)| / sup|phi_0 mu|`` over interior nodes ``rho <= rho_probe``."""
    op = mode_operator(0.0, 0, h, rho_max, plateau_tol=np.inf)
    geom = op.meta["geometry"]
    f = np.exp(0.5 * geom.u) * geom.mu
    res = op.apply(f)
    sel = (op.x <= rho_probe) & (np.arange(op.n) > 0) & (np.arange(op.n) < op.n - 1)
    return float(np.max(np.abs(res[sel])) / np.max(np.abs(f[sel])))


# ---------------------------------------------------------------------------
# plane forms on Grim ends
# ---------------------------------------------------------------------------


def radial_jacobi_plane(r, v, dv):
    """``J`` for a unit-speed radial soliton graph: ``(a_rr, a_tt, b_r, c0)``.

    Mode form: ``a_rr f'' + (a_tt/r + b_r) f' - a_tt m^2 f / r^2 + c0 f``.
    """
    r, v, dv = (np.asarray(a, dtype=float) for a in (r, v, dv))
    mu2 = 1 / (1 + v * v)
    return mu2, np.ones_like(r), -v * v * mu2 / r - v * dv * mu2**2 + mu2 * v, dv * dv * mu2**3 + v * v * mu2 / r**2


@dataclass(frozen=True)
class RadialOperatorField:
    """Radial coefficients of ``a_rr f'' + (a_tt/r + b_r) f' + (c0 - a_tt m^2/r^2) f`` sampled on ``r``."""

    r: np.ndarray
    a_rr: np.ndarray
    a_tt: np.ndarray
    b_r: np.ndarray
    c0: np.ndarray

    def mode_coeffs(self, m: int = 0):
        return self.a_rr, self.a_tt / self.r + self.b_r, self.c0 - self.a_tt * m * m / self.r**2

    def apply_mode(self, f, df, d2f, m: int = 0):
        P, Q, W = self.mode_coeffs(m)
        return P * d2f + Q * df + W * f

    def cartesian(self, x, y):
        """``(a^ij, b^i)`` at plane points whose radii are nodes of ``r`` (interpolated otherwise)."""
        rr = np.hypot(x, y)
        arr = np.interp(rr, self.r, self.a_rr)
        att = np.interp(rr, self.r, self.a_tt)
        br = np.interp(rr, self.r, self.b_r)
        nx, ny = x / rr, y / rr
        a = np.array([[att + (arr - att) * nx * nx, (arr - att) * nx * ny],
                      [(arr - att) * nx * ny, att + (arr - att) * ny * ny]])
        return a, np.array([br * nx, br * ny])


def modified_grim_operator(r, v, u=None, weight: WeightSpec | None = None, gamma_weight: WeightSpec | None = None) -> dict:
    """Coefficients of ``J_hat = psi^-1 J psi`` (default ``psi = mu``) on a unit-speed soliton graph.

    With ``psi = mu`` the zeroth-order term vanishes and
    ``b_r = -2 mu^4 v v'``. This is the explicit form
    ``g^ij f_ij - 2 mu^3 g^ip g^jq u_pq u_j f_i``.
    ``gamma_weight`` adds the further conjugation ``W J_hat W^-1``.
    """
    r, v = np.asarray(r, dtype=float), np.asarray(v, dtype=float)
    dv = grim_rhs(r, v)
    arr, att, br, c0 = radial_jacobi_plane(r, v, dv)
    u = np.zeros_like(r) if u is None else np.asarray(u, dtype=float)
    if weight is None:
        mu = 1 / np.sqrt(1 + v * v)
        dmu = -v * dv * mu**3
        d2v = _second_slope_derivative(r, v, dv)
        d2mu = -(dv * dv + v * d2v) * mu**3 + 3 * (v * dv) ** 2 * mu**5
        psi, dpsi, d2psi = mu, dmu, d2mu
    else:
        psi, dpsi, d2psi = weight.jets(r, u, v, dv)
    P, Q, W = conjugate_radial(arr, att / r + br, c0, psi, dpsi, d2psi)
    out = {"hat": RadialOperatorField(r, P, att, Q - att / r, W), "plain": RadialOperatorField(r, arr, att, br, c0),
           "psi": (psi, dpsi, d2psi)}
    if gamma_weight is not None:
        w, dw, d2w = gamma_weight.jets(r, u, v, dv)
        inv = 1 / w
        dinv = -dw / w**2
        d2inv = 2 * dw**2 / w**3 - d2w / w**2
        P2, Q2, W2 = conjugate_radial(P, Q, W, inv, dinv, d2inv)
        out["gamma"] = RadialOperatorField(r, P2, att, Q2 - att / r, W2)
    return out


def grim_first_order_main_part(y, c, epsilon):
    """Structural first-order term ``(1/2 - 2 c^2 eps^2 / y^4) y`` of ``-b_r / mu^4``."""
    y = np.asarray(y, dtype=float)
    return (0.5 - 2 * c * c * epsilon**2 / y**4) * y


# ---------------------------------------------------------------------------
# harmonic extension and the D/E split
# ---------------------------------------------------------------------------


def harmonic_extension(boundary: np.ndarray, radius: float, x, y) -> np.ndarray:
    """Harmonic function in ``B(radius)`` with the given equispaced boundary samples.

    Fourier mode ``m`` of the circle data is scaled by ``(r/radius)^|m|``.
    """
    boundary = np.asarray(boundary, dtype=float)
    n = boundary.size
    coef = np.fft.rfft(boundary) / n
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho = np.hypot(x, y) / radius
    th = np.arctan2(y, x)
    out = np.full(rho.shape, coef[0].real)
    for m in range(1, coef.size):
        wgt = 1.0 if (n % 2 == 0 and m == n // 2) else 2.0
        out = out + wgt * rho**m * (coef[m].real * np.cos(m * th) - coef[m].imag * np.sin(m * th))
    return out


@dataclass(frozen=True)
class OperatorSplit:
    """Coefficient fields of ``D`` and ``E`` on a polar grid ``(r, theta)``.

    ``E`` is the first-order term ``chi (2 c^2 eps^2 / r^4) x^i`` extended
    harmonically into ``B(eps A)``. ``D`` is the remainder
    ``J_hat_0 - E - J_hat_p``. The arrays have shape ``(2, n_r, n_theta)``
    for vectors and ``(2, 2, n_r, n_theta)`` for tensors.
    """

    r: np.ndarray
    theta: np.ndarray
    inner_radius: float
    E_b: np.ndarray
    D_a: np.ndarray
    D_b: np.ndarray
    params: dict

    @property
    def region_masks(self) -> dict:
        r = self.r[:, None] * np.ones_like(self.theta)[None, :]
        ra = self.inner_radius
        return {"inner_ball": r < ra, "small_scale": (r >= ra) & (r <= ra * self.params["A"] ** 3),
                "outer": r > ra * self.params["A"] ** 3}

    def E_magnitude(self):
        return np.hypot(self.E_b[0], self.E_b[1])


def _cartesian_from_radial(arr, att, br, th):
    nx, ny = np.cos(th), np.sin(th)
    a = np.array([[att + (arr - att) * nx * nx, (arr - att) * nx * ny],
                  [(arr - att) * nx * ny, att + (arr - att) * ny * ny]])
    return a, np.array([br * nx, br * ny])


def E_cutoff(epsilon: float, A: float):
    return cutoff(epsilon * A**4)


def split_DE(grim_slope, paraboloid_slope, epsilon: float, A: float, c: float, r_grid, n_theta: int = 64) -> OperatorSplit:
    """Split ``J_hat_0 = J_hat_p + D + E`` on the unit scale.

    ``grim_slope`` and ``paraboloid_slope`` are callables giving the slopes
    of the two soliton graphs. ``grim_slope`` needs to be valid on
    ``r >= eps A``. Inside ``B(eps A)`` every coefficient of the Grim-end
    operator and of ``E`` is replaced by its harmonic extension.
    """
    ra = epsilon * A
    r = np.asarray(r_grid, dtype=float)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    R2, TH = np.meshgrid(r, th, indexing="ij")
    X, Y = R2 * np.cos(TH), R2 * np.sin(TH)

    def grim_coeffs(rad):
        vg = grim_slope(rad)
        mu4 = (1 / (1 + vg * vg)) ** 2
        return 1 / (1 + vg * vg), np.ones_like(rad), -2 * mu4 * vg * grim_rhs(rad, vg)

    def e_coef(rad):
        return E_cutoff(epsilon, A)(rad) * 2 * c * c * epsilon**2 / rad**4 * rad  # radial component

    # Grim coefficients outside the ball, harmonic inside
    inner = R2 < ra
    aG = np.zeros((2, 2) + R2.shape)
    bG = np.zeros((2,) + R2.shape)
    bE = np.zeros((2,) + R2.shape)
    if np.any(~inner):
        rr = R2[~inner]
        arr, att, br = grim_coeffs(rr)
        a_, b_ = _cartesian_from_radial(arr, att, br, TH[~inner])
        aG[:, :, ~inner] = a_
        bG[:, ~inner] = b_
        er = e_coef(rr)
        bE[:, ~inner] = np.array([er * np.cos(TH[~inner]), er * np.sin(TH[~inner])])
    if np.any(inner):
        nb = 256
        tb = 2 * np.pi * np.arange(nb) / nb
        rb = np.full(nb, ra)
        arr, att, br = grim_coeffs(rb)
        a_b, b_b = _cartesian_from_radial(arr, att, br, tb)
        er = e_coef(rb)
        e_b = np.array([er * np.cos(tb), er * np.sin(tb)])
        xi, yi = X[inner], Y[inner]
        for i in range(2):
            bG[i, inner] = harmonic_extension(b_b[i], ra, xi, yi)
            bE[i, inner] = harmonic_extension(e_b[i], ra, xi, yi)
            for j in range(2):
                aG[i, j, inner] = harmonic_extension(a_b[i, j], ra, xi, yi)
    vp = paraboloid_slope(R2)
    mu2p = 1 / (1 + vp * vp)
    ap, bp = _cartesian_from_radial(mu2p, np.ones_like(R2), -2 * mu2p**2 * vp * grim_rhs(R2, vp), TH)
    return OperatorSplit(r, th, ra, bE, aG - ap, bG - bE - bp, {"epsilon": epsilon, "A": A, "c": c})


def E_lp_norm(split: OperatorSplit, p: float) -> float:
    """``L^p`` norm of ``|E|`` by the trapezoid rule in ``r`` and the rectangle rule in ``theta``."""
    mag = split.E_magnitude() ** p
    ang = mag.mean(axis=1) * 2 * np.pi
    integrand = ang * split.r
    return float(np.sum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(split.r)) ** (1 / p))


def E_lp_closed_form_ball(epsilon: float, A: float, c: float, p: float) -> float:
    """``(int_{B(eps A)} |a|^p)^(1/p)`` for the inner-ball coefficient ``(2c^2/(eps^2 A^4)) x``."""
    return (2 * np.pi / (p + 2) * (2 * c * c) ** p * epsilon ** (2 - p) * A ** (2 - 3 * p)) ** (1 / p)


def coefficient_norm_report(split: OperatorSplit) -> dict:
    """Region-wise sup norms of the ``D`` and ``E`` coefficients."""
    out = {}
    for name, mask in split.region_masks.items():
        if not np.any(mask):
            continue
        out[name] = {"D_second": float(np.max(np.abs(split.D_a[:, :, mask]))),
                     "D_first": float(np.max(np.abs(split.D_b[:, mask]))),
                     "E_first": float(np.max(np.abs(split.E_b[:, mask])))}
    out["all"] = {"D_second": float(np.max(np.abs(split.D_a))), "D_first": float(np.max(np.abs(split.D_b))),
                  "E_first": float(np.max(np.abs(split.E_b)))}
    return out


def fit_power_law(x, y):
    """Slope and intercept of ``log y`` against ``log x``."""
    s, b = np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)), 1)
    return float(s), float(b)


def fit_two_exponents(eps, A, values):
    """Least-squares ``(a, b)`` in ``values ~ C eps^a A^b``."""
    M = np.column_stack([np.log(eps), np.log(A), np.ones(len(eps))])
    coef, *_ = np.linalg.lstsq(M, np.log(values), rcond=None)
    return float(coef[0]), float(coef[1])


# ---------------------------------------------------------------------------
# symmetric fields
# ---------------------------------------------------------------------------


def symmetrize(f, order: int):
    """Average ``f(x, y)`` over rotations by ``2 pi k / order``."""

    def g(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        acc = np.zeros(np.broadcast(x, y).shape)
        for k in range(order):
            a = 2 * np.pi * k / order
            ca, sa = math.cos(a), math.sin(a)
            acc = acc + f(ca * x - sa * y, sa * x + ca * y)
        return acc / order

    return g


def gradient_at_origin(f, h: float = 1e-3, n: int = 12) -> np.ndarray:
    """First-derivative estimate at 0 from ``n`` equispaced samples on the circle of radius ``h``.

    Exact for linear functions. ``n`` should be divisible by the symmetry order.
    """
    t = 2 * np.pi * np.arange(n) / n
    vals = f(h * np.cos(t), h * np.sin(t))
    return np.array([2 * np.sum(vals * np.cos(t)) / (n * h), 2 * np.sum(vals * np.sin(t)) / (n * h)])
