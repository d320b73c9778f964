"""Exact formal expansions of rotationally symmetric Grim-end profiles.

Two expansions are handled here, both with rational coefficients:

* the large-radius Laurent expansion ``v = sum V_m r^m`` of the slope
  ``v = u'`` of an end, annihilated by ``G v = r v' + (v - r)(1 + v^2)``;
* the small-scale bivariate expansion ``V = sum V_{p,q}(X) M^p N^q`` in the
  logarithmic variable ``x = log(r / (eps A))`` with ``M = eps A e^x`` and
  ``N = (c / A) e^{-x}``.

Everything is exact until one of the ``eval_*`` functions is called.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

Rational = Fraction


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# Laurent series in r
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LaurentSeries:
    """Finite Laurent polynomial ``sum_m coeffs[m] r^m`` with rational coefficients.

    Zero coefficients are never stored, so ``order`` (the highest degree
    present) is ``None`` only for the zero series.
    """

    coeffs: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(m): _frac(a) for m, a in self.coeffs.items() if a != 0}
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))
        object.__setattr__(self, "_float_terms", tuple((m, float(a)) for m, a in self.coeffs.items()))

    @classmethod
    def monomial(cls, degree: int, coeff=1) -> "LaurentSeries":
        return cls({degree: _frac(coeff)})

    @property
    def order(self) -> int | None:
        return max(self.coeffs) if self.coeffs else None

    @property
    def lowest(self) -> int | None:
        return min(self.coeffs) if self.coeffs else None

    def __getitem__(self, m: int) -> Fraction:
        return self.coeffs.get(m, Fraction(0))

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        out = dict(self.coeffs)
        for m, a in other.coeffs.items():
            out[m] = out.get(m, 0) + a
        return LaurentSeries(out)

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries({m: -a for m, a in self.coeffs.items()})

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self + (-other)

    def __mul__(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            s = _frac(other)
            return LaurentSeries({m: a * s for m, a in self.coeffs.items()})
        out: dict[int, Fraction] = {}
        for m, a in self.coeffs.items():
            for n, b in other.coeffs.items():
                out[m + n] = out.get(m + n, 0) + a * b
        return LaurentSeries(out)

    __rmul__ = __mul__

    def derivative(self) -> "LaurentSeries":
        return LaurentSeries({m - 1: m * a for m, a in self.coeffs.items() if m != 0})

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by ``r^k``."""
        return LaurentSeries({m + k: a for m, a in self.coeffs.items()})

    def truncate_below(self, lowest: int) -> "LaurentSeries":
        return LaurentSeries({m: a for m, a in self.coeffs.items() if m >= lowest})

    def __call__(self, r):
        return eval_large(self, r)


R_SERIES = LaurentSeries.monomial(1)
ONE = LaurentSeries.monomial(0)


def apply_G_laurent(v: LaurentSeries) -> LaurentSeries:
    """Exact image ``r v' + (v - r)(1 + v^2)``."""
    return (v.derivative().shift(1)) + (v - R_SERIES) * (ONE + v * v)


def laurent_recurrence(n: int) -> LaurentSeries:
    """Partial sum ``v_n = sum_{m=1-2n}^{1} V_m r^m`` of the formal solution of ``G v = 0``.

    Adding ``a r^m`` to a series ``r - 1/r + ...`` changes the image under G at
    degree ``m + 2`` by exactly ``a`` (through the ``v^2`` factor) and only
    touches lower degrees otherwise. The coefficients are therefore found one
    at a time by cancelling the current top coefficient of the residual.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    v = R_SERIES
    for m in range(-1, -2 * n, -1):
        top = apply_G_laurent(v)[m + 2]
        if top:
            v = v + LaurentSeries.monomial(m, -top)
    return v


def eval_large(v: LaurentSeries, r):
    """Floating evaluation of a Laurent series; ``r`` may be an array."""
    total = 0.0
    for m, a in v._float_terms:
        total = total + a * r**m
    return total


def eval_large_derivative(v: LaurentSeries, r):
    return eval_large(v.derivative(), r)


# ---------------------------------------------------------------------------
# Polynomials in X
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class XPoly:
    """Polynomial in X with rational coefficients in ascending order."""

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        c = [_frac(a) for a in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def const(cls, a) -> "XPoly":
        return cls((_frac(a),))

    @property
    def degree(self) -> int:
        """Degree, with ``-1`` for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __add__(self, other: "XPoly") -> "XPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return XPoly(tuple(self[i] + other[i] for i in range(n)))

    def __neg__(self) -> "XPoly":
        return XPoly(tuple(-a for a in self.coeffs))

    def __sub__(self, other: "XPoly") -> "XPoly":
        return self + (-other)

    def __mul__(self, other) -> "XPoly":
        if not isinstance(other, XPoly):
            s = _frac(other)
            return XPoly(tuple(a * s for a in self.coeffs))
        if self.is_zero() or other.is_zero():
            return XPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return XPoly(tuple(out))

    __rmul__ = __mul__

    def derivative(self) -> "XPoly":
        return XPoly(tuple(i * a for i, a in enumerate(self.coeffs) if i > 0))

    def at(self, x) -> Fraction | float:
        total = 0 if isinstance(x, (int, Fraction)) else 0.0
        for a in reversed(self.coeffs):
            total = total * x + (a if isinstance(x, (int, Fraction)) else float(a))
        return total

    def __call__(self, x):
        return self.at(x)


def solve_poly_ode(lam, rhs: XPoly, init_at_zero=None) -> XPoly:
    """Polynomial ``Q`` with ``Q' + lam Q = rhs``.

    For ``lam != 0`` this is the unique polynomial solution, found by
    back-substitution from the top degree. For ``lam == 0`` it is the
    antiderivative normalised by ``Q(0) = init_at_zero``.
    """
    lam = _frac(lam)
    if lam == 0:
        if init_at_zero is None:
            raise ValueError("an initial value is required when lambda is zero")
        return XPoly((_frac(init_at_zero),) + tuple(a / (i + 1) for i, a in enumerate(rhs.coeffs)))
    d = rhs.degree
    if d < 0:
        return XPoly()
    q = [Fraction(0)] * (d + 1)
    # lam q_i + (i+1) q_{i+1} = rhs_i
    for i in range(d, -1, -1):
        above = (i + 1) * q[i + 1] if i < d else 0
        q[i] = (rhs[i] - above) / lam
    return XPoly(tuple(q))


# ---------------------------------------------------------------------------
# Bivariate series in M, N with XPoly coefficients
# ---------------------------------------------------------------------------

Index = tuple[int, int]


@dataclass(frozen=True)
class BivariateSeries:
    """Truncated series ``sum V_{p,q}(X) M^p N^q`` valid through total order ``max_total_order``."""

    terms: Mapping[Index, XPoly] = field(default_factory=dict)
    max_total_order: int = 0

    def __post_init__(self):
        n = self.max_total_order
        clean = {
            (int(p), int(q)): P
            for (p, q), P in self.terms.items()
            if not P.is_zero() and p + q <= n
        }
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    def __getitem__(self, key: Index) -> XPoly:
        return self.terms.get(key, XPoly())

    def __add__(self, other: "BivariateSeries") -> "BivariateSeries":
        out = dict(self.terms)
        for k, P in other.terms.items():
            out[k] = out.get(k, XPoly()) + P
        return BivariateSeries(out, min(self.max_total_order, other.max_total_order))

    def __neg__(self) -> "BivariateSeries":
        return BivariateSeries({k: -P for k, P in self.terms.items()}, self.max_total_order)

    def __sub__(self, other: "BivariateSeries") -> "BivariateSeries":
        return self + (-other)

    def __mul__(self, other) -> "BivariateSeries":
        if not isinstance(other, BivariateSeries):
            return BivariateSeries({k: P * other for k, P in self.terms.items()}, self.max_total_order)
        # eager truncation: the product is only trustworthy to the smaller
        # guaranteed order shifted by the other factor's valuation
        n = min(self.max_total_order + other.valuation(), other.max_total_order + self.valuation())
        out: dict[Index, XPoly] = {}
        for (p1, q1), P in self.terms.items():
            for (p2, q2), Q in other.terms.items():
                key = (p1 + p2, q1 + q2)
                if key[0] + key[1] <= n:
                    out[key] = out.get(key, XPoly()) + P * Q
        return BivariateSeries(out, n)

    def valuation(self) -> int:
        """Lowest total order present (large for the zero series)."""
        return min((p + q for p, q in self.terms), default=10**9)

    def with_order(self, n: int) -> "BivariateSeries":
        return BivariateSeries(self.terms, n)


def monomial_series(p: int, q: int, coeff=1, order: int = 10**6) -> BivariateSeries:
    return BivariateSeries({(p, q): XPoly.const(coeff)}, order)


def apply_D1(v: BivariateSeries) -> BivariateSeries:
    """``D_1 = d/dx + 1`` acting termwise as ``(d/dX + 1 + p - q)``."""
    return BivariateSeries(
        {(p, q): P.derivative() + P * (1 + p - q) for (p, q), P in v.terms.items()},
        v.max_total_order,
    )


def n_dn(v: BivariateSeries) -> BivariateSeries:
    """The formal operator ``N d/dN``: multiplies ``V_{p,q}`` by ``q``."""
    return BivariateSeries({(p, q): P * q for (p, q), P in v.terms.items()}, v.max_total_order)


def apply_G_small(v: BivariateSeries, order: int | None = None) -> BivariateSeries:
    """Exact image ``D_1 V - M + (V - M) V^2`` truncated at total order ``order``.

    ``order`` defaults to the input's guaranteed order.
    """
    n = v.max_total_order if order is None else order
    V = v.with_order(n)
    M = monomial_series(1, 0, order=n)
    return apply_D1(V) - M + (V - M) * V * V


def _bracket_cube(series: dict[Index, XPoly], p: int, q: int) -> XPoly:
    # [V^3]_{p,q} from coefficients already computed (all of lower total order)
    out = XPoly()
    keys = list(series)
    for k1 in keys:
        for k2 in keys:
            a, b = p - k1[0] - k2[0], q - k1[1] - k2[1]
            if a >= 0 and b >= 0 and (a, b) in series:
                out = out + series[k1] * series[k2] * series[(a, b)]
    return out


def _bracket_square(series: dict[Index, XPoly], p: int, q: int) -> XPoly:
    out = XPoly()
    for k1, P in series.items():
        a, b = p - k1[0], q - k1[1]
        if a >= 0 and b >= 0 and (a, b) in series:
            out = out + P * series[(a, b)]
    return out


def bivariate_recurrence(k: int) -> BivariateSeries:
    """Partial sum ``V_k`` (all terms of total order ``<= 2k + 1``) of the small-scale formal solution.

    Each coefficient solves
    ``(d/dX + 1 + p - q) V_{p,q} = [p,q == 1,0] - [V^3]_{p,q} + [V^2]_{p-1,q}``,
    whose right side only involves lower total orders. The kernel modes
    ``q = p + 1`` are normalised by ``V_{0,1}(0) = 1`` and ``V_{p,p+1}(0) = 0``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    top = 2 * k + 1
    series: dict[Index, XPoly] = {}
    for n in range(1, top + 1):
        new: dict[Index, XPoly] = {}
        for p in range(n + 1):
            q = n - p
            rhs = XPoly.const(1) if (p, q) == (1, 0) else XPoly()
            rhs = rhs - _bracket_cube(series, p, q)
            if p >= 1:
                rhs = rhs + _bracket_square(series, p - 1, q)
            lam = 1 + p - q
            init = None
            if lam == 0:
                init = 1 if p == 0 else 0
            Q = solve_poly_ode(lam, rhs, init)
            if not Q.is_zero():
                new[(p, q)] = Q
        series.update(new)
    return BivariateSeries(series, top)


def jacobi_series(v: BivariateSeries) -> BivariateSeries:
    """Formal Jacobi field ``W = N dV/dN``."""
    return n_dn(v)


def jacobi_residual(v: BivariateSeries, w: BivariateSeries, order: int | None = None) -> BivariateSeries:
    """``D_1 W + 3 V^2 W - 2 M V W`` truncated at total order ``order``."""
    n = min(v.max_total_order, w.max_total_order) if order is None else order
    V, W = v.with_order(n), w.with_order(n)
    M = monomial_series(1, 0, order=n)
    return apply_D1(W) + V * V * W * 3 - M * V * W * 2


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _mn(x, eps: float, A: float, c: float):
    import numpy as np

    x = np.asarray(x, dtype=float)
    return eps * A * np.exp(x), (c / A) * np.exp(-x)


def eval_small(v: BivariateSeries, x, params) -> float:
    """Evaluate with ``X -> x``, ``M -> eps A e^x`` and ``N -> (c/A) e^{-x}``.

    ``params`` is anything with ``epsilon``, ``A`` and ``c`` attributes.
    """
    import numpy as np

    M, N = _mn(x, params.epsilon, params.A, params.c)
    xs = np.asarray(x, dtype=float)
    total = np.zeros_like(xs)
    for (p, q), P in v.terms.items():
        total = total + P.at(xs) * M**p * N**q
    return total if total.ndim else float(total)


def eval_small_derivative(v: BivariateSeries, x, params) -> float:
    """d/dx of :func:`eval_small`, term by term."""
    import numpy as np

    M, N = _mn(x, params.epsilon, params.A, params.c)
    xs = np.asarray(x, dtype=float)
    total = np.zeros_like(xs)
    for (p, q), P in v.terms.items():
        total = total + (P.derivative().at(xs) + (p - q) * P.at(xs)) * M**p * N**q
    return total if total.ndim else float(total)


# ---------------------------------------------------------------------------
# CSV emitters
# ---------------------------------------------------------------------------


def _fmt(a: Fraction) -> str:
    return f"{a.numerator}/{a.denominator}"


def laurent_csv(v: LaurentSeries, lowest: int | None = None) -> str:
    """Rows ``degree,numerator,denominator,exact`` from the top degree down, zeros included."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["degree", "numerator", "denominator", "exact"])
    if v.order is not None:
        lo = v.lowest if lowest is None else lowest
        for m in range(v.order, lo - 1, -1):
            a = v[m]
            w.writerow([m, a.numerator, a.denominator, _fmt(a)])
    return buf.getvalue()


def bivariate_csv(v: BivariateSeries) -> str:
    """Rows ``p,q,x_degree,numerator,denominator,exact`` for every stored coefficient."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "q", "x_degree", "numerator", "denominator", "exact"])
    for (p, q), P in v.terms.items():
        for i, a in enumerate(P.coeffs):
            w.writerow([p, q, i, a.numerator, a.denominator, _fmt(a)])
    return buf.getvalue()


def parse_exact(s: str) -> Fraction:
    return Fraction(s)


def degree_bound_holds(v: BivariateSeries) -> bool:
    """``deg_X V_{p,q} <= (p + q - 1) / 2`` for every odd total order."""
    return all(P.degree <= (p + q - 1) // 2 for (p, q), P in v.terms.items())


def parity_holds(v: BivariateSeries) -> bool:
    return all((p + q) % 2 == 1 for (p, q) in v.terms)
