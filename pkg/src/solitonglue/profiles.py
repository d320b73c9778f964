"""Numerical solutions of the rotationally symmetric soliton ODE.

The slope ``v = u'`` of a unit-speed rotationally symmetric translating
graph satisfies ``r v' + (v - r)(1 + v^2) = 0``. This module integrates it
at large radius (optionally relative to a Laurent reference so that tiny
deviations keep full relative accuracy), near the origin (the entire bowl
solution), and at small scale in the logarithmic variable
``x = log(r / (eps A))``, where it also implements the contraction-mapping
solver and the Jacobi field in the logarithmic parameter ``c``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import stats
from scipy.integrate import solve_ivp

from .formal_series import (
    BivariateSeries,
    LaurentSeries,
    apply_G_laurent,
    bivariate_recurrence,
    eval_large,
    eval_small,
    eval_small_derivative,
    jacobi_series,
)


class ProfileBlowUp(RuntimeError):
    """Integration stopped before the end of the requested range."""

    def __init__(self, radius: float, message: str = ""):
        super().__init__(f"profile integration failed at r = {radius:.17g}: {message}")
        self.radius = radius


class ContractionFailure(RuntimeError):
    def __init__(self, ratio: float):
        super().__init__(f"measured Lipschitz ratio {ratio:.3g} is not below 1")
        self.ratio = ratio


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Admissibility:
    admissible: bool
    upper_slack: float  # 1/Delta - (eps A^{4+eta} + A^{-(1-eta)})
    lower_slack: float  # eps A^{5-eta} - Delta
    c_slack: float  # Cbound - |c|

    def violations(self) -> list[str]:
        out = []
        if self.upper_slack < 0:
            out.append(f"eps*A^(4+eta) + A^-(1-eta) <= 1/Delta fails by {-self.upper_slack:.6g}")
        if self.lower_slack < 0:
            out.append(f"eps*A^(5-eta) >= Delta fails by {-self.lower_slack:.6g}")
        if self.c_slack < 0:
            out.append(f"|c| <= Cbound fails by {-self.c_slack:.6g}")
        return out


def admissibility(epsilon: float, A: float, Delta: float, eta: float, Cbound: float, c: float) -> Admissibility:
    """Evaluate the parameter window ``eps A^{4+eta} + A^{-(1-eta)} <= 1/Delta <= ... , eps A^{5-eta} >= Delta``."""
    if not (epsilon > 0 and A > 0 and Delta > 0 and Cbound > 0 and 0 < eta < 1):
        raise ValueError("epsilon, A, Delta, Cbound must be positive and eta in (0, 1)")
    upper = 1.0 / Delta - (epsilon * A ** (4 + eta) + A ** (-(1 - eta)))
    lower = epsilon * A ** (5 - eta) - Delta
    cs = Cbound - abs(c)
    ok = upper >= 0 and lower >= 0 and cs >= 0
    return Admissibility(ok, upper, lower, cs)


@dataclass(frozen=True)
class GrimParameters:
    epsilon: float
    A: float
    c: float = 1.0
    Delta: float = 1.0
    eta: float = 0.1
    Cbound: float = 2.0

    def admissibility(self) -> Admissibility:
        return admissibility(self.epsilon, self.A, self.Delta, self.eta, self.Cbound, self.c)

    @property
    def x_max(self) -> float:
        return 3.0 * math.log(self.A)

    @property
    def r_inner(self) -> float:
        return self.epsilon * self.A

    def r_of_x(self, x):
        return self.epsilon * self.A * np.exp(x)

    def x_of_r(self, r):
        return np.log(np.asarray(r, dtype=float) / (self.epsilon * self.A))


# ---------------------------------------------------------------------------
# profile container
# ---------------------------------------------------------------------------


def _dop853_derivative(sol, t):
    """Derivative of a DOP853 dense interpolant at scalar ``t``.

    The interpolant is a nested product in ``x = (t - t_old)/h`` and the
    derivative is carried alongside the nesting.
    """
    n_seg = len(sol.interpolants)
    i = min(max(int(np.searchsorted(sol.ts_sorted, t, side="left")) - 1, 0), n_seg - 1)
    seg = sol.interpolants[i if sol.ascending else n_seg - 1 - i]
    F = getattr(seg, "F", None)
    if F is None:
        h = 1e-6 * max(1.0, abs(t))
        return (sol(t + h) - sol(t - h)) / (2 * h)
    x = (t - seg.t_old) / seg.h
    y = np.zeros_like(seg.y_old)
    dy = np.zeros_like(seg.y_old)
    for i, f in enumerate(reversed(seg.F)):
        y = y + f
        if i % 2 == 0:
            dy, y = dy * x + y, y * x
        else:
            dy, y = dy * (1 - x) - y, y * (1 - x)
    return dy / seg.h


class _Segment:
    lo: float
    hi: float

    def value(self, r: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def slope(self, r: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class _OdeSegment(_Segment):
    """Dense ODE solution in ``s = r`` or ``s = log(r / r_scale)``, optionally relative to a reference series."""

    lo: float
    hi: float
    sol: object
    r_scale: float | None = None
    reference: LaurentSeries | None = None

    def _s(self, r):
        return r if self.r_scale is None else np.log(r / self.r_scale)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        y = np.asarray(self.sol(self._s(r)))[0]
        if self.reference is not None:
            y = y + eval_large(self.reference, r)
        return y

    def slope(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        d = np.array([_dop853_derivative(self.sol, float(s))[0] for s in self._s(r)])
        if self.r_scale is not None:
            d = d / r
        if self.reference is not None:
            d = d + eval_large(self.reference.derivative(), r)
        return d


@dataclass(frozen=True)
class _SeriesSegment(_Segment):
    lo: float
    hi: float
    series: LaurentSeries

    def value(self, r):
        return eval_large(self.series, np.asarray(r, dtype=float))

    def slope(self, r):
        return eval_large(self.series.derivative(), np.asarray(r, dtype=float))


@dataclass(frozen=True)
class _FunctionSegment(_Segment):
    lo: float
    hi: float
    f: Callable
    df: Callable

    def value(self, r):
        return self.f(np.asarray(r, dtype=float))

    def slope(self, r):
        return self.df(np.asarray(r, dtype=float))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True)
class RadialProfile:
    """A sampled and interpolable slope profile ``v(r)`` with optional primitive ``u``.

    ``r`` and ``v`` are the sample arrays; evaluation anywhere in the domain
    goes through the dense interpolants of the producing solver.
    """

    r: np.ndarray
    v: np.ndarray
    provenance: str
    tol: float
    params: GrimParameters | None = None
    segments: tuple = field(default=(), repr=False, compare=False)
    u: np.ndarray | None = field(default=None, repr=False, compare=False)
    u_anchor: tuple[float, float] | None = None

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.segments[0].lo), float(self.segments[-1].hi)

    def _dispatch(self, r, method):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        rr = np.atleast_1d(r)
        lo, hi = self.domain
        if np.any(rr < lo * (1 - 1e-12)) or np.any(rr > hi * (1 + 1e-12)):
            raise ValueError(f"radius outside profile domain [{lo:.6g}, {hi:.6g}]")
        out = np.empty_like(rr)
        bounds = np.array([s.hi for s in self.segments])
        idx = np.minimum(np.searchsorted(bounds, rr, side="left"), len(self.segments) - 1)
        for i, seg in enumerate(self.segments):
            m = idx == i
            if np.any(m):
                out[m] = getattr(seg, method)(np.clip(rr[m], seg.lo, seg.hi))
        return float(out[0]) if scalar else out

    def __call__(self, r):
        return self._dispatch(r, "value")

    def derivative(self, r):
        return self._dispatch(r, "slope")

    def residual(self, r=None):
        """Pointwise ``r v' + (v - r)(1 + v^2)`` using the interpolant's own derivative."""
        r = self.r if r is None else np.asarray(r, dtype=float)
        v = self(r)
        return r * self.derivative(r) + (v - r) * (1 + v * v)

    def relative_residual(self, r=None):
        """Residual divided by ``r|v'| + (|v| + r)(1 + v^2)``.

        A relative slope error ``d`` moves the residual by about ``d`` times
        this scale, so the ratio is comparable with the solver tolerance.
        """
        r = self.r if r is None else np.asarray(r, dtype=float)
        v = self(r)
        scale = np.abs(r * self.derivative(r)) + (np.abs(v) + r) * (1 + v * v)
        return np.abs(self.residual(r)) / scale

    def integral(self, a: float, b: float) -> float:
        """``int_a^b v dr`` by composite Gauss-Legendre on a geometric partition."""
        if a == b:
            return 0.0
        lo, hi = sorted((a, b))
        n = max(4, int(math.ceil(8 * math.log(hi / lo))) if lo > 0 else 64)
        edges = np.geomspace(lo, hi, n + 1) if lo > 0 else np.linspace(lo, hi, n + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        pts = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
        val = np.sum((self(pts).reshape(n, -1) * _GL_W[None, :]) * half[:, None])
        return float(val if b >= a else -val)

    def primitive_at(self, r):
        """``u(r) = u0 + int_{r_anchor}^r v``; requires :func:`primitive` first."""
        if self.u_anchor is None:
            raise ValueError("profile has no primitive; call primitive() first")
        r0, u0 = self.u_anchor
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.array([u0 + self.integral(r0, float(x)) for x in rr])
        return float(out[0]) if np.ndim(r) == 0 else out

    def at_x(self, x):
        """Evaluate a small-scale profile at ``x = log(r / (eps A))``."""
        if self.params is None:
            raise ValueError("profile has no small-scale parameters")
        return self(self.params.r_of_x(x))


def _sample_grid(lo: float, hi: float, n: int = 400) -> np.ndarray:
    return np.geomspace(lo, hi, n) if lo > 0 else np.linspace(lo, hi, n)


def _build(segments: Sequence[_Segment], provenance: str, tol: float, params=None, n: int = 400) -> RadialProfile:
    segments = tuple(sorted(segments, key=lambda s: s.lo))
    prof = RadialProfile(np.array([]), np.array([]), provenance, tol, params, segments)
    r = _sample_grid(segments[0].lo, segments[-1].hi, n)
    return replace(prof, r=r, v=prof(r))


# ---------------------------------------------------------------------------
# large-scale integration
# ---------------------------------------------------------------------------


def grim_rhs(r: float, v):
    return -(v - r) * (1 + v * v) / r


def _solve(fun, s0, s1, y0, tol, atol, where: Callable[[float], float]):
    sol = solve_ivp(fun, (s0, s1), np.atleast_1d(y0).astype(float), method="DOP853",
                    rtol=tol, atol=atol, dense_output=True)
    if sol.status != 0:
        raise ProfileBlowUp(where(sol.t[-1]), sol.message)
    if not np.all(np.isfinite(sol.y)):
        raise ProfileBlowUp(where(sol.t[np.argmax(~np.isfinite(sol.y[0]))]), "non-finite state")
    return sol.sol


def integrate_profile(v0: float, r0: float, r_range: tuple[float, float], tol: float = 1e-12,
                      reference: LaurentSeries | None = None, atol: float | None = None) -> RadialProfile:
    """Integrate ``v' = -(v - r)(1 + v^2)/r`` through ``v(r0) = v0`` across ``r_range``.

    With a ``reference`` Laurent series the unknown is the deviation
    ``w = v - reference``, whose equation is driven by the exactly computed
    residual of the reference; this keeps relative accuracy when ``w`` is
    many orders smaller than ``v``.
    """
    lo, hi = map(float, r_range)
    if r0 <= 0 or lo <= 0:
        raise ValueError("radii must be positive")
    if not lo <= r0 <= hi:
        raise ValueError("r_range must contain r0")
    if reference is None:
        fun = lambda r, y: grim_rhs(r, y)
        y0 = v0
        atol = tol * 1e-3 if atol is None else atol
    else:
        gref = apply_G_laurent(reference)
        ref = reference

        def fun(r, y):
            p = eval_large(ref, r)
            w = y[0]
            return np.array([-(eval_large(gref, r) + (p - r) * (2 * p * w + w * w) + w * (1 + (p + w) ** 2)) / r])

        y0 = v0 - eval_large(reference, r0)
        atol = tol * 1e-12 if atol is None else atol
    segs = []
    if hi > r0:
        segs.append(_OdeSegment(r0, hi, _solve(fun, r0, hi, y0, tol, atol, float), None, reference))
    if lo < r0:
        segs.append(_OdeSegment(lo, r0, _solve(fun, r0, lo, y0, tol, atol, float), None, reference))
    if not segs:
        raise ValueError("empty range")
    return _build(segs, "grim-ode" if reference is None else f"grim-ode-relative(order {reference.lowest})", tol)


def paraboloid_series(top_degree: int = 9) -> LaurentSeries:
    """Odd power series of the bowl slope at the origin, ``r/2 + r^3/32 + ...``, through ``r^top_degree``.

    The coefficient of ``r^{2j+1}`` enters ``G v`` at that degree only through
    ``(2j + 2) a_{2j+1}``, so each is read off from the lower ones.
    """
    v = LaurentSeries()
    for d in range(1, top_degree + 1, 2):
        g = apply_G_laurent(v)[d]
        v = v + LaurentSeries.monomial(d, -g / (d + 1))
    return v


def paraboloid_profile(r_range: tuple[float, float], tol: float = 1e-12, switch: float = 1e-2,
                       top_degree: int = 9, far_reference: int | None = 3, far_start: float = 20.0) -> RadialProfile:
    """The entire (bowl) solution on ``r_range``.

    Starts from the origin series, integrates directly from ``switch``
    and, beyond ``far_start``, continues relative to the Laurent partial sum
    of order ``far_reference``.
    """
    lo, hi = map(float, r_range)
    series = paraboloid_series(top_degree)
    segs: list[_Segment] = []
    if lo < switch:
        segs.append(_SeriesSegment(max(lo, 0.0), switch, series))
    start = switch
    v_start = float(eval_large(series, switch))
    mid_hi = hi if far_reference is None else min(hi, max(far_start, switch))
    if mid_hi > start:
        sol = _solve(lambda r, y: grim_rhs(r, y), start, mid_hi, v_start, tol, tol * 1e-6, float)
        segs.append(_OdeSegment(start, mid_hi, sol))
        if far_reference is not None and hi > mid_hi:
            ref = laurent_partial(far_reference)
            v_far = float(sol(mid_hi)[0])
            far = integrate_profile(v_far, mid_hi, (mid_hi, hi), tol, reference=ref)
            segs.extend(far.segments)
    prof = _build(segs, "paraboloid", tol)
    # keep only the requested window
    segs = list(prof.segments)
    if lo > segs[0].lo:
        first = segs[0]
        segs[0] = replace(first, lo=lo)
        segs = [s for s in segs if s.hi > lo]
        segs[0] = replace(segs[0], lo=max(lo, segs[0].lo))
    return _build(segs, "paraboloid", tol)


def laurent_partial(n: int) -> LaurentSeries:
    from .formal_series import laurent_recurrence

    return laurent_recurrence(n)


def primitive(profile: RadialProfile, u0: float = 0.0, r_anchor: float | None = None) -> RadialProfile:
    """Attach the primitive ``u`` with ``u(r_anchor) = u0`` (anchor defaults to the inner end)."""
    r_anchor = profile.domain[0] if r_anchor is None else float(r_anchor)
    p = replace(profile, u_anchor=(r_anchor, float(u0)))
    r = p.r
    # cumulative integral over the sample grid
    inc = np.array([p.integral(a, b) for a, b in zip(r[:-1], r[1:])])
    cum = np.concatenate([[0.0], np.cumsum(inc)])
    cum = cum - (p.integral(r[0], r_anchor)) + u0
    return replace(p, u=cum)


# ---------------------------------------------------------------------------
# rate fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    width: float
    intercept: float
    n_points: int
    span_decades: float


def decay_exponent(r, f) -> SlopeFit:
    """Least-squares slope of ``log|f|`` against ``log r`` with a residual-based width.

    The width is three standard errors of the slope plus the largest
    deviation of local two-point slopes from the global one over the span, so
    that curvature in the log-log plot shows up as uncertainty.
    """
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    if r.size < 8:
        raise ValueError("need at least 8 grid points")
    if np.any(f <= 0) or np.any(r <= 0):
        raise ValueError("samples must be positive")
    span = math.log10(r.max() / r.min())
    if span < 1 - 1e-12:
        raise ValueError("grid must span at least one decade")
    lr, lf = np.log(r), np.log(f)
    fit = stats.linregress(lr, lf)
    width = 3 * fit.stderr
    return SlopeFit(float(fit.slope), float(width), float(fit.intercept), int(r.size), span)


def large_scale_deviations(ns: Sequence[int], r_grid, tol: float = 1e-12, start: float = 10.0,
                           start_order: int | None = None) -> tuple[dict[int, np.ndarray], RadialProfile]:
    """``|v_n - v|`` on ``r_grid`` for each ``n`` in ``ns``, for the solution with ``v(start) = v_{start_order}(start)``.

    ``start_order`` defaults to ``max(ns) + 2`` so that the start-up transient
    (which decays like ``exp(-r^2/2)``) sits below every measured difference.

    One integration serves all ``n``: it runs relative to ``v_{max(ns) + 2}``
    so every difference is resolved to full relative accuracy.
    """
    ref = laurent_partial(max(ns) + 2)
    start_order = max(ns) + 2 if start_order is None else start_order
    r_grid = np.asarray(r_grid, dtype=float)
    prof = integrate_profile(float(eval_large(laurent_partial(start_order), start)), start,
                             (start, float(r_grid.max())), tol, reference=ref)
    w = np.asarray(prof.segments[0].sol(r_grid))[0]
    out = {n: np.abs(eval_large(ref - laurent_partial(n), r_grid) + w) for n in ns}
    return out, prof


# ---------------------------------------------------------------------------
# small scale
# ---------------------------------------------------------------------------


def small_scale_rhs(params: GrimParameters):
    eA = params.epsilon * params.A

    def f(x, y):
        r = eA * np.exp(x)
        v = y[0]
        return np.array([r - v - (v - r) * v * v])

    return f


def initial_value(k: int, params: GrimParameters, series: BivariateSeries | None = None) -> float:
    V = bivariate_recurrence(k) if series is None else series
    return float(eval_small(V, 0.0, params))


def _check_params(params: GrimParameters, relaxed: bool):
    adm = params.admissibility()
    if not adm.admissible:
        msg = "inadmissible parameters: " + "; ".join(adm.violations())
        if not relaxed:
            raise ValueError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


def exact_small_scale(k: int, params: GrimParameters, tol: float = 1e-12, relaxed: bool = True,
                      x_range: tuple[float, float] | None = None) -> RadialProfile:
    """Solution of the soliton ODE in ``x`` with ``v(0) = v_k(0)``.

    ``x_range`` defaults to ``[0, 3 log A]``, i.e. ``r`` in ``[eps A, eps A^4]``.
    Inadmissible parameters only warn when ``relaxed``.
    """
    _check_params(params, relaxed)
    x0, x1 = (0.0, params.x_max) if x_range is None else map(float, x_range)
    v0 = initial_value(k, params)
    f = small_scale_rhs(params)
    atol = tol * 1e-3 * abs(v0)
    segs = []
    to_r = params.r_of_x
    if x1 > 0:
        segs.append(_OdeSegment(float(to_r(0.0)), float(to_r(x1)),
                                _solve(f, 0.0, x1, v0, tol, atol, lambda s: float(to_r(s))), params.r_inner))
    if x0 < 0:
        segs.append(_OdeSegment(float(to_r(x0)), float(to_r(0.0)),
                                _solve(f, 0.0, x0, v0, tol, atol, lambda s: float(to_r(s))), params.r_inner))
    return _build(segs, f"exact-small-scale(k={k})", tol, params)


class _Cheb:
    """Chebyshev collocation on ``[0, T]``: differentiation and cumulative integration matrices."""

    def __init__(self, T: float, n: int):
        j = np.arange(n + 1)
        self.x = 0.5 * T * (1 - np.cos(np.pi * j / n))
        V = C.chebvander(2 * self.x / T - 1, n)
        Vinv = np.linalg.inv(V)
        # coefficient-space integration and differentiation
        I = np.zeros((n + 2, n + 1))
        D = np.zeros((n, n + 1))
        for i in range(n + 1):
            e = np.zeros(n + 1)
            e[i] = 1
            I[:, i] = C.chebint(e, lbnd=-1, scl=T / 2)
            D[:, i] = C.chebder(e, scl=2 / T)
        Vi = C.chebvander(2 * self.x / T - 1, n + 1)
        Vd = C.chebvander(2 * self.x / T - 1, n - 1)
        self.integrate = Vi @ I @ Vinv
        self.diff = Vd @ D @ Vinv


def inverse_D1(values, cheb: _Cheb):
    """``(D_1^{-1} g)(x) = e^{-x} int_0^x e^y g(y) dy`` at the collocation nodes."""
    ex = np.exp(cheb.x)
    return (cheb.integrate @ (ex * values)) / ex


@dataclass(frozen=True)
class ContractionResult:
    profile: RadialProfile
    x: np.ndarray
    w: np.ndarray
    v_hat: np.ndarray
    iterations: int
    contraction_factor: float
    first_iterate_norm: float
    history: tuple[float, ...]


def contraction_solve(k: int, params: GrimParameters, T: float | None = None, tol: float = 1e-14,
                      n_nodes: int = 160, max_iter: int = 200, relaxed: bool = True) -> ContractionResult:
    """Fixed point of ``Phi(w) = w - D_1^{-1} G(v_k + w)`` on ``[0, T]`` in the norm ``sup|w'|``.

    Since iterates keep ``w(0) = 0``, ``w - D_1^{-1} D_1 w = 0`` and the map
    reduces to ``-D_1^{-1}`` of the nonlinear part. The returned contraction
    factor is the largest observed ratio of successive update norms.
    """
    _check_params(params, relaxed)
    T = params.x_max if T is None else float(T)
    cheb = _Cheb(T, n_nodes)
    x = cheb.x
    V = bivariate_recurrence(k)
    vk = eval_small(V, x, params)
    dvk = eval_small_derivative(V, x, params)
    r = params.r_of_x(x)

    def norm1(w):
        return float(np.max(np.abs(cheb.diff @ w)))

    def phi(w):
        v = vk + w
        return -inverse_D1(dvk + vk - r + (v - r) * v * v, cheb)

    w = np.zeros_like(x)
    new = phi(w)
    first = norm1(new)
    history = [first]
    ratio = 0.0
    prev_step = first
    it = 1
    while it < max_iter:
        w, new = new, phi(new)
        step = norm1(new - w)
        history.append(step)
        it += 1
        if prev_step > 1e-13 and step > 1e-13:
            ratio = max(ratio, step / prev_step)
            if ratio >= 1:
                raise ContractionFailure(ratio)
        prev_step = step
        if step < tol:
            break
    w = new
    v_hat = vk + w
    fit = C.Chebyshev.fit(x, v_hat, n_nodes, domain=[0, T])
    dfit = fit.deriv()
    seg = _FunctionSegment(float(r[0]), float(r[-1]),
                           lambda rr: fit(params.x_of_r(rr)),
                           lambda rr: dfit(params.x_of_r(rr)) / rr)
    prof = _build([seg], f"contraction(k={k})", tol, params)
    return ContractionResult(prof, x, w, v_hat, it, ratio, first, tuple(history))


def jacobi_initial_value(k: int, params: GrimParameters) -> float:
    return float(eval_small(jacobi_series(bivariate_recurrence(k)), 0.0, params))


@dataclass(frozen=True)
class JacobiField:
    profile: RadialProfile
    v_hat: RadialProfile
    normalization: float  # w_hat = normalization * d v_hat / d c

    def at_x(self, x):
        return self.profile.at_x(x)


def jacobi_field_small_scale(k: int, params: GrimParameters, tol: float = 1e-12, relaxed: bool = True,
                             x_range: tuple[float, float] | None = None) -> JacobiField:
    """Solve ``D_1 w + 3 v^2 w - 2 eps A e^x v w = 0`` with ``w(0) = w_k(0)`` along the exact ``v_hat``.

    ``w_k = N dV_k/dN`` while ``d/dc`` of the initial value is ``w_k(0)/c``, so
    the returned field equals ``c`` times the derivative of ``v_hat`` in ``c``;
    this factor is exposed as ``normalization``.
    """
    _check_params(params, relaxed)
    x0, x1 = (0.0, params.x_max) if x_range is None else map(float, x_range)
    eA = params.epsilon * params.A
    v0 = initial_value(k, params)
    w0 = jacobi_initial_value(k, params)

    def f(x, y):
        r = eA * np.exp(x)
        v, w = y
        return np.array([r - v - (v - r) * v * v, -w - 3 * v * v * w + 2 * r * v * w])

    to_r = params.r_of_x
    segs_v, segs_w = [], []
    for a, b in ((0.0, x1), (0.0, x0)):
        if b == a:
            continue
        sol = solve_ivp(f, (a, b), [v0, w0], method="DOP853", rtol=tol,
                        atol=tol * 1e-3 * np.array([abs(v0), abs(w0) or 1.0]), dense_output=True)
        if sol.status != 0:
            raise ProfileBlowUp(float(to_r(sol.t[-1])), sol.message)
        lo, hi = sorted((float(to_r(a)), float(to_r(b))))
        segs_v.append(_OdeSegment(lo, hi, _Component(sol.sol, 0), params.r_inner))
        segs_w.append(_OdeSegment(lo, hi, _Component(sol.sol, 1), params.r_inner))
    vprof = _build(segs_v, f"exact-small-scale(k={k})", tol, params)
    wprof = _build(segs_w, f"jacobi-field(k={k})", tol, params)
    return JacobiField(wprof, vprof, params.c)


class _Component:
    """View of one component of a vector dense solution as a scalar one."""

    def __init__(self, sol, i: int):
        self._sol = sol
        self._i = i
        self.ts = sol.ts
        self.ts_sorted = sol.ts_sorted
        self.ascending = sol.ascending
        self.interpolants = [_ComponentInterp(s, i) for s in sol.interpolants]

    def __call__(self, t):
        return np.asarray(self._sol(t))[self._i : self._i + 1]


class _ComponentInterp:
    def __init__(self, seg, i):
        self.t_old, self.h = seg.t_old, seg.h
        self.y_old = seg.y_old[i : i + 1]
        self.F = seg.F[:, i : i + 1]


def c_derivative(k: int, params: GrimParameters, x, h: float = 1e-3, tol: float = 1e-13) -> np.ndarray:
    """Richardson-extrapolated central difference of ``v_hat`` in ``c`` at points ``x``."""

    def central(step):
        p = exact_small_scale(k, replace(params, c=params.c + step), tol).at_x(x)
        m = exact_small_scale(k, replace(params, c=params.c - step), tol).at_x(x)
        return (p - m) / (2 * step)

    d1, d2 = central(h), central(h / 2)
    return (4 * d2 - d1) / 3


def compare_profiles(a: RadialProfile, b: RadialProfile, n: int = 2000) -> float:
    lo = max(a.domain[0], b.domain[0])
    hi = min(a.domain[1], b.domain[1])
    rr = _sample_grid(lo, hi, n)
    return float(np.max(np.abs(a(rr) - b(rr))))


def ordered_pair_check(v_low: float, v_high: float, r0: float, r_end: float = math.sqrt(2), tol: float = 1e-12,
                       n: int = 400):
    """Integrate two solutions from ``r0`` and report ordering and monotonicity of their gap.

    Returns ``(ordered, nonincreasing, gaps)`` on a uniform grid of ``n`` points.
    """
    a = integrate_profile(v_low, r0, (r0, r_end), tol)
    b = integrate_profile(v_high, r0, (r0, r_end), tol)
    rr = np.linspace(r0, r_end, n)
    gap = b(rr) - a(rr)
    ordered = bool(np.all(gap > 0) if v_high > v_low else np.all(gap < 0))
    g = np.abs(gap)
    nonincreasing = bool(np.all(np.diff(g) <= 1e-12 * g[:-1] + 1e-15))
    return ordered, nonincreasing, g

