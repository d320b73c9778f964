"""Sampled weighted Hölder and Sobolev norms.

Hölder seminorms are maxima over a finite set of point pairs, so every
value returned here is a lower bound for the true seminorm. Inequalities
between seminorms are tested on a common pair set, where they hold pair
by pair.

Two scalings are supported for radial functions sampled on a grid:

* cylindrical: ``D_cyl = r D``, weight ``r^delta``, local Hölder quotient
  ``r^alpha [f | A(r/2, 2r)]_alpha`` and volume ``r^{-2} dVol``;
* Grim: ``D_G = D / eps``, a positive weight function (typically
  ``exp((1 + gamma) u / 2)`` of the unit-speed height), local quotient
  ``eps^{-alpha} [f | B(x, 1/eps)]_alpha`` and volume ``eps^2 dVol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

DEFAULT_ALPHA = 0.05
DEFAULT_GAMMA = 0.05
DEFAULT_DELTA = 1.5


# ---------------------------------------------------------------------------
# Hölder seminorms on point clouds
# ---------------------------------------------------------------------------


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    return p[:, None] if p.ndim == 1 else p


def sample_pairs(points, n_pairs: int = 32, seed: int = 0, include_neighbours: bool = True) -> np.ndarray:
    """Index pairs ``(i, j)``, ``i != j``, drawn from a scrambled Sobol sequence.

    Consecutive-index pairs are added when ``include_neighbours`` so that
    short separations, which dominate high-exponent quotients, are probed.
    """
    n = len(_as_points(points))
    if n < 2:
        raise ValueError("need at least two samples")
    m = max(n_pairs, 2)
    sob = qmc.Sobol(2, scramble=True, seed=seed).random(1 << int(math.ceil(math.log2(m))))[:m]
    ij = np.floor(sob * n).astype(int)
    ij = ij[ij[:, 0] != ij[:, 1]]
    if include_neighbours:
        k = np.arange(n - 1)
        ij = np.vstack([ij, np.stack([k, k + 1], axis=1)])
    return ij


def all_pairs(n: int) -> np.ndarray:
    i, j = np.triu_indices(n, 1)
    return np.stack([i, j], axis=1)


def holder_seminorm(values, points, alpha: float, pairs: np.ndarray | None = None) -> float:
    """``max |f(x) - f(y)| / |x - y|^alpha`` over sampled pairs (all pairs if ``pairs`` is None and few samples).

    ``alpha = 0`` gives the total variation ``[f]_0 = sup |f(x) - f(y)|``.
    Raises on fewer than two samples.
    """
    f = np.asarray(values, dtype=float)
    p = _as_points(points)
    if len(f) < 2:
        raise ValueError("empty ball: fewer than two samples")
    if pairs is None:
        pairs = all_pairs(len(f)) if len(f) <= 400 else sample_pairs(p, 4096)
    i, j = pairs[:, 0], pairs[:, 1]
    d = np.linalg.norm(p[i] - p[j], axis=1)
    ok = d > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(np.abs(f[i[ok]] - f[j[ok]]) / d[ok] ** alpha))


def ball_seminorm(values, points, alpha: float, center, radius: float, n_pairs: int = 32, seed: int = 0) -> float:
    """Sampled ``[f | B(center, radius)]_alpha`` with at least ``n_pairs`` quasi-random pairs."""
    p = _as_points(points)
    inside = np.linalg.norm(p - np.atleast_1d(center)[None, :], axis=1) <= radius
    idx = np.flatnonzero(inside)
    if idx.size < 2:
        raise ValueError("empty ball: fewer than two samples")
    pairs = all_pairs(idx.size) if idx.size <= 64 else sample_pairs(p[idx], max(n_pairs, 32), seed)
    return holder_seminorm(np.asarray(values)[idx], p[idx], alpha, pairs)


# ---------------------------------------------------------------------------
# radial functions on grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormSpec:
    """Which weighted norm to take.

    ``kind`` is ``"cyl"`` or ``"grim"``; ``weight`` is the exponent
    ``delta`` for cylindrical norms and ``weight_fn`` (a positive function of
    r) is used for Grim norms.
    """

    order: int = 0
    alpha: float = DEFAULT_ALPHA
    weight: float = DEFAULT_DELTA
    kind: str = "cyl"
    epsilon: float = 1.0
    weight_fn: Callable | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        if self.kind not in ("cyl", "grim"):
            raise ValueError("kind must be 'cyl' or 'grim'")

    def w(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "cyl":
            return r**self.weight
        return np.ones_like(r) if self.weight_fn is None else self.weight_fn(r)


def radial_derivatives(r, f, order: int):
    """Radial derivatives ``f, f', f''`` on a (possibly nonuniform) grid, second-order accurate."""
    r = np.asarray(r, dtype=float)
    out = [np.asarray(f, dtype=float)]
    for _ in range(order):
        out.append(np.gradient(out[-1], r, edge_order=2))
    return out


def derivative_magnitudes(r, derivs):
    """Tensor norms ``|D^n f|`` of a radial function: ``|f'|`` and ``sqrt(f''^2 + (f'/r)^2)``."""
    mags = [np.abs(derivs[0])]
    if len(derivs) > 1:
        mags.append(np.abs(derivs[1]))
    if len(derivs) > 2:
        mags.append(np.sqrt(derivs[2] ** 2 + (derivs[1] / r) ** 2))
    return mags


def local_holder_profile(r, g, alpha: float, kind: str = "cyl", epsilon: float = 1.0, n_probe: int = 48,
                         n_pairs: int = 32, seed: int = 0):
    """Localised Hölder quotient at probe radii.

    Cylindrical: ``r^alpha [g | A(r/2, 2r)]_alpha``; Grim:
    ``eps^{-alpha} [g | (r - 1/eps, r + 1/eps)]_alpha``, sampled along a ray.
    Returns ``(probe_radii, values)``.
    """
    r = np.asarray(r, dtype=float)
    g = np.asarray(g, dtype=float)
    probes = r[np.unique(np.linspace(0, r.size - 1, min(n_probe, r.size)).astype(int))]
    vals = []
    for k, rc in enumerate(probes):
        if kind == "cyl":
            lo, hi, scale = rc / 2, 2 * rc, rc**alpha
        else:
            lo, hi, scale = rc - 1 / epsilon, rc + 1 / epsilon, epsilon ** (-alpha)
        idx = np.flatnonzero((r >= lo) & (r <= hi))
        if idx.size < 2:
            vals.append(0.0)
            continue
        pairs = all_pairs(idx.size) if idx.size <= 64 else sample_pairs(r[idx], n_pairs, seed + k)
        vals.append(scale * holder_seminorm(g[idx], r[idx], alpha, pairs))
    return probes, np.array(vals)


def weighted_norm(r, f, spec: NormSpec, region: tuple[float, float] | None = None, derivs=None) -> float:
    """Weighted ``C^{m,alpha}`` norm of a radial function sampled at ``r``.

    ``sum_{n<=m} sup w |D_*^n f| + sup w delta^alpha(D_*^m f)`` with
    ``D_* = r D`` (cylindrical) or ``D / eps`` (Grim). Analytic derivatives
    may be passed as ``derivs = [f, f', f'']``.
    """
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    if derivs is None:
        derivs = radial_derivatives(r, f, spec.order)
    derivs = [np.asarray(d, dtype=float) for d in derivs[: spec.order + 1]]
    if region is not None:
        keep = (r >= region[0]) & (r <= region[1])
        r = r[keep]
        derivs = [d[keep] for d in derivs]
    mags = derivative_magnitudes(r, derivs)
    w = spec.w(r)
    total = 0.0
    for n, m in enumerate(mags):
        scale = r**n if spec.kind == "cyl" else spec.epsilon ** (-n)
        total += float(np.max(w * scale * m))
    top = derivs[spec.order] * (r**spec.order if spec.kind == "cyl" else spec.epsilon ** (-spec.order))
    probes, hol = local_holder_profile(r, top, spec.alpha, spec.kind, spec.epsilon)
    total += float(np.max(spec.w(probes) * hol)) if hol.size else 0.0
    return total


def sup_weighted(r, f, spec: NormSpec, region: tuple[float, float] | None = None) -> float:
    """Zeroth-order weighted sup ``sup w |f|`` (no Hölder part)."""
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    if region is not None:
        keep = (r >= region[0]) & (r <= region[1])
        r, f = r[keep], f[keep]
    return float(np.max(spec.w(r) * np.abs(f))) if r.size else 0.0


def _trapz(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def sobolev_norm(r, f, spec: NormSpec, region: tuple[float, float] | None = None, derivs=None) -> float:
    """Weighted ``H^m`` norm of a radial function, integrating over the plane with the scaled volume form."""
    r = np.asarray(r, dtype=float)
    if derivs is None:
        derivs = radial_derivatives(r, f, spec.order)
    derivs = [np.asarray(d, dtype=float) for d in derivs[: spec.order + 1]]
    if region is not None:
        keep = (r >= region[0]) & (r <= region[1])
        r = r[keep]
        derivs = [d[keep] for d in derivs]
    mags = derivative_magnitudes(r, derivs)
    w = spec.w(r)
    dvol = 2 * np.pi * r * (r**-2.0 if spec.kind == "cyl" else spec.epsilon**2)
    total = 0.0
    for n, m in enumerate(mags):
        scale = r**n if spec.kind == "cyl" else spec.epsilon ** (-n)
        total += _trapz((w * scale * m) ** 2 * dvol, r)
    return math.sqrt(total)


def cylindrical_log_integral(m: int, a: float, T: float, n: int = 20001) -> float:
    """``int_{B(T) \\ B(1)} log(r)^m r^a dVol_cyl`` by quadrature (``= 2 pi int_1^T log(r)^m r^{a-1} dr``)."""
    t = np.linspace(0.0, math.log(T), n)
    # substitute r = e^t: the integrand becomes 2 pi t^m e^{a t}
    return 2 * math.pi * _trapz(t**m * np.exp(a * t), t)


def max_log_power(a: float, T: float, n: int = 20001) -> float:
    """``sup_{[1, T]} log(t) t^a``."""
    t = np.geomspace(1.0, T, n)
    return float(np.max(np.log(t) * t**a))


# ---------------------------------------------------------------------------
# the first-order bridge between Sobolev and Hölder bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BridgeReport:
    holder_c2: float  # A
    sobolev_ratio: float  # B = ||f||_{H^2} / A
    first_derivative: float  # sup |D_G f| (weighted)
    bound: float  # B^{1-alpha} A
    ratio: float  # first_derivative / bound


def sobolev_first_order_bridge(r, f, spec: NormSpec, region: tuple[float, float] | None = None) -> BridgeReport:
    """Compare ``sup w |D_G f|`` with ``B^{1-alpha} A``, where ``A`` is the ``C^{2,alpha}`` norm and ``B = ||f||_{H^2} / A``."""
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    s2 = NormSpec(2, spec.alpha, spec.weight, spec.kind, spec.epsilon, spec.weight_fn)
    A = weighted_norm(r, f, s2, region)
    if A == 0:
        return BridgeReport(0.0, 0.0, 0.0, 0.0, 0.0)
    B = sobolev_norm(r, f, s2, region) / A
    d = radial_derivatives(r, f, 1)[1]
    scale = r if spec.kind == "cyl" else 1 / spec.epsilon
    first = sup_weighted(r, scale * d, NormSpec(0, spec.alpha, spec.weight, spec.kind, spec.epsilon, spec.weight_fn), region)
    bound = B ** (1 - spec.alpha) * A
    return BridgeReport(A, B, first, bound, first / bound if bound else math.inf)


def grim_weight(profile_height: Callable, gamma: float = DEFAULT_GAMMA, epsilon: float = 1.0) -> Callable:
    """``r -> exp((1 + gamma) u_unit(eps r) / 2)`` where ``u_unit`` is the unit-speed height."""

    def w(r):
        return np.exp(0.5 * (1 + gamma) * profile_height(epsilon * np.asarray(r, dtype=float)))

    return w
