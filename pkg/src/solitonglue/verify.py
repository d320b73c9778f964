"""The acceptance checks, each returning a :class:`CheckResult`.

Every check measures the property it names and compares it against a pinned
tolerance. Runtimes are measured too and count towards the verdict.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import formal_series as fs
from . import geometry as geo
from . import greens, operators, profiles, surgery


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    runtime: float = 0.0
    time_limit: float = math.inf

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] criterion {self.number:2d}: {self.name} ({self.runtime:.2f} s)"

    def as_dict(self) -> dict:
        return {"criterion": self.number, "name": self.name, "passed": self.passed, "runtime_s": self.runtime,
                "time_limit_s": self.time_limit, "metrics": self.metrics}


def _timed(number: int, name: str, limit: float, fn: Callable[[], tuple[bool, dict]]) -> CheckResult:
    t0 = time.perf_counter()
    ok, metrics = fn()
    dt = time.perf_counter() - t0
    metrics["within_time_limit"] = dt < limit
    return CheckResult(number, name, bool(ok and dt < limit), metrics, dt, limit)


XPOLY_ONE = (Fraction(1),)
XPOLY_HALF = (Fraction(1, 2),)


# ---------------------------------------------------------------------------
# 1-3: formal series
# ---------------------------------------------------------------------------


def check_laurent(n_max: int = 10) -> CheckResult:
    def run():
        rows = []
        ok = True
        for n in range(1, n_max + 1):
            v = fs.laurent_recurrence(n)
            g = fs.apply_G_laurent(v)
            even_zero = all(v[m] == 0 for m in range(-2 * n, 2, 2))
            good = v[1] == 1 and v[-1] == -1 and even_zero and g.order == 1 - 2 * n
            ok &= good
            rows.append({"n": n, "residual_order": g.order, "ok": good})
        return ok, {"orders": rows}

    return _timed(1, "Laurent recurrence exactness", 1.0, run)


def check_large_scale_rates(tol_slope: float = 0.15) -> CheckResult:
    def run():
        r = np.geomspace(10, 200, 40)
        dev, _ = profiles.large_scale_deviations([0, 1, 2], r, tol=1e-12)
        slopes = {n: profiles.decay_exponent(r, d).slope for n, d in dev.items()}
        errs = {n: abs(s + (2 * n + 1)) for n, s in slopes.items()}
        return all(e <= tol_slope for e in errs.values()), {"slopes": slopes, "expected": {n: -(2 * n + 1) for n in slopes}}

    return _timed(2, "large-scale decay rates", 10.0, run)


def check_small_scale_series(k_max: int = 3) -> CheckResult:
    def run():
        ok = True
        rows = []
        for k in range(0, k_max + 1):
            V = fs.bivariate_recurrence(k)
            res = fs.apply_G_small(V)
            good = (V[(0, 1)].coeffs == XPOLY_ONE and V[(1, 0)].coeffs == XPOLY_HALF
                    and fs.parity_holds(V) and fs.degree_bound_holds(V) and not res.terms)
            ok &= good
            rows.append({"k": k, "total_order": 2 * k + 1, "n_terms": len(V.terms), "ok": good})
        return ok, {"orders": rows}

    return _timed(3, "small-scale recurrence exactness", 5.0, run)


# ---------------------------------------------------------------------------
# 4-6: profiles and geometry
# ---------------------------------------------------------------------------


def check_solver_cross_validation() -> CheckResult:
    def run():
        P = profiles.GrimParameters(1e-6, 20.0, 1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            exact = profiles.exact_small_scale(1, P)
            con = profiles.contraction_solve(1, P)
        x = np.linspace(0, P.x_max, 1000)
        diff = float(np.max(np.abs(exact.at_x(x) - con.profile.at_x(x))))
        return diff <= 1e-8 and con.contraction_factor < 0.5, {
            "sup_difference": diff, "contraction_factor": con.contraction_factor, "iterations": con.iterations}

    return _timed(4, "contraction solver against direct integration", 10.0, run)


def check_jacobi_consistency(c: float = 0.7) -> CheckResult:
    def run():
        P = profiles.GrimParameters(1e-6, 20.0, c)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            J = profiles.jacobi_field_small_scale(1, P)
            x = np.linspace(0, P.x_max, 500)
            d = profiles.c_derivative(1, P, x)
        w = J.at_x(x)
        rel = float(np.max(np.abs(w - J.normalization * d)) / np.max(np.abs(w)))
        return rel <= 1e-6, {"relative_difference": rel, "normalization": "w_hat = c * d(v_hat)/dc",
                             "c": c}

    return _timed(5, "Jacobi field against c-derivative", 10.0, run)


def grim_reaper_chart() -> geo.GraphChart:
    """The unit-speed Grim reaper graph ``u = -log cos x`` on ``|x| < pi/2``."""

    def f(x, y):
        return -np.log(np.cos(x)) + 0 * y

    def grad(x, y):
        return np.stack([np.tan(x), 0 * y])

    def hess(x, y):
        z = 0 * x * y
        return np.stack([np.stack([1 / np.cos(x) ** 2 + z, z]), np.stack([z, z])])

    return geo.GraphChart(geo.ScalarField(f, grad, hess), 1.0)


def check_zero_residual_solitons() -> CheckResult:
    def run():
        rng = np.random.default_rng(7)
        grim = grim_reaper_chart()
        xg = rng.uniform(-1.2, 1.2, 64)
        yg = rng.uniform(-3, 3, 64)
        bowl = geo.RevolutionSurface.from_profile(profiles.paraboloid_profile((1e-3, 6.0))).chart(1.0)
        t = rng.uniform(0, 2 * np.pi, 64)
        rb = rng.uniform(0.2, 4.0, 64)
        xb, yb = rb * np.cos(t), rb * np.sin(t)
        out = {}
        ok = True
        for name, ch, x, y in (("grim_reaper", grim, xg, yg), ("grim_paraboloid", bowl, xb, yb)):
            exact = float(np.max(np.abs(geo.mcfs_residual(ch, x, y))))
            fd = [float(np.max(np.abs(geo.mcfs_residual(ch.with_height(ch.height.finite_differenced(h)), x, y))))
                  for h in (1 / 50, 1 / 100, 1 / 200)]
            ratios = [fd[0] / fd[1], fd[1] / fd[2]]
            good = exact <= 1e-10 and all(3.0 <= q <= 5.0 for q in ratios)
            ok &= good
            out[name] = {"analytic": exact, "finite_difference": fd, "halving_ratios": ratios}
        return ok, out

    return _timed(6, "zero-residual solitons", 30.0, run)


# ---------------------------------------------------------------------------
# 7-9: operators
# ---------------------------------------------------------------------------


def check_potential_well() -> CheckResult:
    def run():
        op = operators.mode_operator(0.0, 0, 0.05, 200.0)
        g = op.meta["geometry"]
        coef = operators.conjugated_coeffs(g, 0.0)
        rho = g.rho
        sel = (rho > 20) & (rho < 150)
        rem = np.abs(coef["remainder"])
        slope, _ = operators.fit_power_law(rho[sel], rem[sel])
        scaled = rho[rho > 5] * rem[rho > 5]
        hs = (0.1, 0.05, 0.025)
        kern = [operators.discrete_kernel_residual(h) for h in hs]
        ratios = [kern[0] / kern[1], kern[1] / kern[2]]
        bound_ok = bool(np.all(np.isfinite(scaled)))
        kernel_ok = all(3.0 <= q <= 5.0 for q in ratios)
        exponent_ok = slope <= -1.0
        return exponent_ok and bound_ok and kernel_ok, {
            "fitted_exponent": slope, "exponent_at_most_minus_one": exponent_ok,
            "C_sup_rho_times_remainder": float(np.max(scaled)), "kernel_residuals": kern,
            "kernel_halving_ratios": ratios}

    return _timed(7, "potential well of the conjugated operator", 30.0, run)


def check_mode_solver(seed: int = 0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for m in range(0, 9):
            for gamma in (-0.1, 0.0, 0.1):
                op = operators.mode_operator(gamma, m, 0.05, 200.0)
                g = greens.random_band_limited(op.x, rng, support=(op.x[0], op.x[-1]))
                f = operators.solve_mode(op, g)
                worst = max(worst, float(np.max(np.abs(op.apply(f) - g)) / np.max(np.abs(g))))
        changes = {}
        for m in (0, 2, 8):
            for gamma in (-0.1, 0.1):
                a = operators.inverse_norm_estimate(operators.mode_operator(gamma, m, 0.05, 100.0))
                b = operators.inverse_norm_estimate(operators.mode_operator(gamma, m, 0.05, 200.0))
                changes[f"m={m},gamma={gamma}"] = max(a / b, b / a)
        return worst <= 1e-8 and max(changes.values()) < 2, {"roundtrip_worst": worst,
                                                             "inverse_norm_change_factors": changes}

    return _timed(8, "mode solver soundness", 60.0, run)


def _split(eps, A, c=1.0, n_theta=64):
    par = operators._paraboloid(12)
    P = profiles.GrimParameters(eps, A, c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        prof = profiles.exact_small_scale(1, P, 1e-12, True, (0.0, math.log(10 / (eps * A))))
    ra = eps * A
    r = np.concatenate([np.linspace(0, ra, 200, endpoint=False)[1:], np.geomspace(ra, 10, 2000)])
    return operators.split_DE(prof, par, eps, A, c, r, n_theta)


def check_DE_split(p: float = 4.0) -> CheckResult:
    def run():
        c = 1.0
        inner_err = 0.0
        rows = []
        for eps, A in ((1e-6, 10.0), (1e-6, 20.0), (4e-6, 10.0), (4e-6, 20.0)):
            S = _split(eps, A, c)
            m = S.region_masks["inner_ball"]
            rr = (S.r[:, None] * np.ones_like(S.theta)[None, :])[m]
            th = np.broadcast_to(S.theta, (S.r.size, S.theta.size))[m]
            k = 2 * c * c / (eps**2 * A**4)
            scale = k * eps * A
            inner_err = max(inner_err, float(np.max(np.abs(S.E_b[0][m] - k * rr * np.cos(th)))) / scale,
                            float(np.max(np.abs(S.E_b[1][m] - k * rr * np.sin(th)))) / scale)
            rows.append((eps, A, operators.E_lp_norm(S, p)))
        arr = np.array(rows)
        a, b = operators.fit_two_exponents(arr[:, 0], arr[:, 1], arr[:, 2])
        ea, eb = 2 / p - 1, 2 / p - 3
        sweep = []
        for A in (10.0, 20.0, 40.0, 80.0):
            rep = operators.coefficient_norm_report(_split(A**-4.5, A, c))["all"]
            sweep.append(max(rep["D_second"], rep["D_first"]))
        mono = all(x > y for x, y in zip(sweep, sweep[1:]))
        ok = inner_err <= 1e-12 and abs(a - ea) <= 0.1 and abs(b - eb) <= 0.1 and mono
        return ok, {"inner_ball_relative_error": inner_err, "Lp_exponents": [a, b], "expected": [ea, eb],
                    "D_sup_sweep": sweep}

    return _timed(9, "D/E decomposition", 60.0, run)


# ---------------------------------------------------------------------------
# 10-12: surgery and ping-pong
# ---------------------------------------------------------------------------


def check_glued_residual(R: float = 20.0, eps_values=(1e-5, 3e-5, 1e-4), c: float = 0.4) -> CheckResult:
    def run():
        vals = []
        for e in eps_values:
            S = surgery.build_glued_surface(c, e, R)
            vals.append(S.weighted_residual())
        slope, _ = operators.fit_power_law(eps_values, vals)
        ratios = [v / (e * R ** (2 + 1.5)) for v, e in zip(vals, eps_values)]
        C = max(ratios)
        # one constant for the sweep: the ratios may not drift by more than 10 %
        spread = max(ratios) / min(ratios)
        ok = abs(slope - 1.0) <= 0.1 and spread <= 1.1
        return ok, {"weighted_residuals": vals, "epsilon_exponent": slope, "C": C, "ratio_spread": spread}

    return _timed(10, "glued-surface residual scaling", 120.0, run)


def check_deficiency_X(R_values=(10.0, 20.0, 40.0), c: float = 0.4, support_tol: float = 1e-7) -> CheckResult:
    def run():
        norms, leaks = [], []
        for R in R_values:
            S = surgery.build_glued_surface(c, R**-4.5, R)
            F = surgery.deficiency_fields(S)
            norms.append(surgery.weighted_norm_X(S, F)["max"])
            inside = np.geomspace(2 * S.extension_radius, 2 * R, 2000)
            outside = np.geomspace(2 * R, 0.9 * S.r_max, 2000)
            sup = max(float(np.max(np.abs(F.X[s](inside)))) for s in (1, -1))
            out = max(float(np.max(np.abs(F.X[s](outside)))) for s in (1, -1))
            leaks.append(out / sup)
        scaled = [n * R ** (2 - 1.5) for n, R in zip(norms, R_values)]
        C = scaled[0]
        ok = all(s <= C * (1 + 1e-12) for s in scaled) and max(leaks) <= support_tol
        return ok, {"weighted_norms": norms, "norm_times_R^(2-delta)": scaled, "C": C,
                    "relative_size_outside_B(2R)": leaks}

    return _timed(11, "deficiency field X", 60.0, run)


def check_ping_pong(R_values=(10.0, 20.0, 40.0), n_samples: int = 10, seed: int = 0) -> CheckResult:
    def run():
        rows = []
        for R in R_values:
            M = greens.build_machine(R=R)
            per_mode = {m: M.contraction_norms(m) for m in M.modes}
            ident = greens.identity_check(M, n_samples, seed)
            rows.append({"R": R, "epsilon": M.surface.epsilon,
                         "BA": max(v["BA"] for v in per_mode.values()),
                         "AB": max(v["AB"] for v in per_mode.values()),
                         "per_mode": {str(m): v for m, v in per_mode.items()},
                         "identity_max": max(ident)})
        ba = [r["BA"] for r in rows]
        ab = [r["AB"] for r in rows]
        below = max(ba + ab) < 1
        decreasing = all(x > y for x, y in zip(ba, ba[1:])) and all(x > y for x, y in zip(ab, ab[1:]))
        ident_ok = max(r["identity_max"] for r in rows) <= 1e-6
        return below and decreasing and ident_ok, {"sweep": rows, "contractions_below_one": below,
                                                   "decreasing": decreasing}

    return _timed(12, "ping-pong contraction and right inverse", 300.0, run)


# ---------------------------------------------------------------------------
# 13-14: comparison and admissibility
# ---------------------------------------------------------------------------


def check_ordering(n_pairs: int = 10, seed: int = 0) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        rows = []
        ok = True
        for _ in range(n_pairs):
            r0 = float(rng.uniform(0.05, 1.0))
            a, b = np.sort(rng.uniform(-1.0, 2.0, 2))
            ordered, noninc, gaps = profiles.ordered_pair_check(float(a), float(b), r0)
            ok &= ordered and noninc
            rows.append({"r0": r0, "v_low": float(a), "v_high": float(b), "ordered": ordered,
                         "gap_nonincreasing": noninc, "gap_start": float(gaps[0]), "gap_end": float(gaps[-1])})
        return ok, {"pairs": rows}

    return _timed(13, "ordering of profiles", 10.0, run)


def check_admissibility() -> CheckResult:
    def run():
        good = profiles.admissibility(3e-14, 1000.0, 10.0, 0.1, 2.0, 1.0)
        bad = [profiles.admissibility(e, A, 2.0, 0.5, 2.0, 1.0).admissible
               for e in np.geomspace(1e-20, 1.0, 41) for A in np.geomspace(1.0, 1e6, 25)]
        ok = good.admissible and not any(bad)
        return ok, {"derived_tuple": {"admissible": good.admissible, "upper_slack": good.upper_slack,
                                      "lower_slack": good.lower_slack},
                    "eta_0.5_delta_2_any_admissible": any(bad), "grid_points": len(bad)}

    return _timed(14, "admissibility predicate", 1.0, run)


CHECKS = (check_laurent, check_large_scale_rates, check_small_scale_series, check_solver_cross_validation,
          check_jacobi_consistency, check_zero_residual_solitons, check_potential_well, check_mode_solver,
          check_DE_split, check_glued_residual, check_deficiency_X, check_ping_pong, check_ordering,
          check_admissibility)


def run_all(selected=None) -> list[CheckResult]:
    out = []
    for i, fn in enumerate(CHECKS, start=1):
        if selected is None or i in selected:
            out.append(fn())
    return out
