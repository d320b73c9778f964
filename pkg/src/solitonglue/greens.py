"""Approximate right inverses on the compact piece and the ends, and their ping-pong combination.

Everything lives on one uniform grid in the profile parameter ``s`` of the
glued surface, ``r = c cosh s``. The upper sheet and its Grim end have
``s > 0``; the lower sheet has ``s < 0``. Functions are expanded in angular
modes ``cos(m theta)``. Only modes divisible by ``g + 1`` are kept, where
``g`` is the symmetry order. The deficiency fields ``X`` (logarithmic
parameters) and ``Y`` (vertical shifts) act in mode 0 only. The parameter
vector is ``p = (l_up, l_low, v_up, v_low)``.

Discretisations per region:

* neck (``r < 2 r_n``): the modified operator is written out with the
  blended normal ``(1 - chi_n) sigma e_z + chi_n N``.
* graph region: the exact height linearisation, which has no zeroth-order
  term.
* far region, where the modified normal rotates back to ``N``: the
  zeroth-order term is fixed so that the translation field ``tau`` lies in the
  discrete kernel. There ``M = 0``, so this is its exact continuous
  counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import Boundary, ModeOperator, dirichlet, mirror
from .surgery import GluedSurface, build_glued_surface, cutoff, deficiency_fields


class RankDeficiency(RuntimeError):
    pass


class ContractionFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# coefficient assembly
# ---------------------------------------------------------------------------


def hat_coefficients(surface: GluedSurface, s: np.ndarray, which: str = "S", end: int = 1) -> dict:
    """Coefficients ``(p, q, w)`` of ``J_hat = p d_ss + q d_s + w`` (mode 0) and the translation field ``tau``.

    ``which`` is ``"S"`` for the glued surface, ``"C"`` for the core catenoid
    and ``"G"`` for the Grim end ``end`` alone. For ``"G"``, ``s > 0`` is used
    for both ends.
    """
    s = np.asarray(s, dtype=float)
    h = s[1] - s[0]
    se = np.concatenate([[s[0] - h], s, [s[-1] + h]])
    eps, c = surface.epsilon, surface.c
    if which == "S":
        cv = surface.curve(se)
    elif which == "C":
        cv = surface.curve(se, catenoid_only=True)
    elif which == "G":
        cv = surface.curve(se, sheet_override=surface.ends[end].G)
    else:
        raise ValueError(which)
    r, rs, zs, rss, zss = cv["r"], cv["r_s"], cv["z_s"], cv["r_ss"], cv["z_ss"]
    sigma = np.where(se >= 0, 1.0, -1.0)
    ell = np.hypot(rs, zs)
    ell_s = (rs * rss + zs * zss) / ell
    P = 1 / ell**2
    Q = rs / (r * ell**2) - ell_s / ell**3 + eps * zs / ell**2
    mu = rs / ell
    mu_s = (rss * ell - rs * ell_s) / ell**2
    amu, amu_s = sigma * mu, sigma * mu_s
    if which == "C":
        chi_e = np.ones_like(r)
        chi_e1 = np.zeros_like(r)
    else:
        ce = cutoff(1 / eps).jets(r, 1)
        chi_e, chi_e1 = ce[0], ce[1]
    psi = chi_e * amu + (1 - chi_e)
    psi_s = chi_e1 * rs * (amu - 1) + chi_e * amu_s
    with np.errstate(divide="ignore", invalid="ignore"):
        # psi vanishes only at the neck, where the blended form below takes over
        q = 2 * P * psi_s / psi + Q
        tau = amu / psi
    w = np.zeros_like(r)
    rn = surface.neck_radius
    far = r >= 4 * rn
    # zeroth-order term making tau a discrete kernel element
    d2 = (tau[2:] - 2 * tau[1:-1] + tau[:-2]) / h**2
    d1 = (tau[2:] - tau[:-2]) / (2 * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        wt = -(P[1:-1] * d2 + q[1:-1] * d1) / tau[1:-1]
    w[1:-1] = np.where(far[1:-1], wt, 0.0)
    # neck region on the catenoid: blended normal, written out
    neck = r < 2 * rn
    if which != "G" and np.any(neck):
        sn, rr = se[neck], r[neck]
        xn = cutoff(rn).jets(rr, 2)
        # chi_n is 1 near the neck: N_hat = (1 - chi_n) sigma e_z + chi_n N
        a_ = 1 - xn[0]
        ch_s = xn[1] * rs[neck]
        ch_ss = xn[2] * rs[neck] ** 2 + xn[1] * rss[neck]
        sech2 = 1 / np.cosh(sn) ** 2
        am = np.abs(np.tanh(sn))
        am_s = np.sign(sn) * sech2
        am_ss = -2 * sech2 * am
        ps = a_ * am + xn[0]
        ps_s = ch_s * (1 - am) + a_ * am_s
        ps_ss = ch_ss * (1 - am) - 2 * ch_s * am_s + a_ * am_ss
        Pn = 1 / rr**2
        Qn = eps * c / rr**2
        A2 = 2 / (c * c * np.cosh(sn) ** 4)
        M_s = eps * sech2
        sg = np.sign(sn)
        q[neck] = 2 * Pn * ps_s / ps + Qn
        w[neck] = (Pn * ps_ss + Qn * ps_s) / ps + A2 - sg * a_ * c * M_s / (rr**2 * ps)
        P[neck] = Pn
        psi[neck] = ps
    sl = slice(1, -1)
    return {"s": s, "r": r[sl], "p": P[sl], "q": q[sl], "w": w[sl], "tau": tau, "psi": psi[sl],
            "z": cv["z"][sl], "sigma": sigma[sl]}


def mode_operator_from(coeffs: dict, m: int, inner: Boundary, outer: Boundary) -> ModeOperator:
    return ModeOperator(coeffs["s"], coeffs["p"], coeffs["q"], coeffs["w"] - m * m / coeffs["r"] ** 2, m,
                        inner, outer, coeffs["r"])


# ---------------------------------------------------------------------------
# the ping-pong machine
# ---------------------------------------------------------------------------


def symmetric_modes(symmetry_order: int = 1, m_max: int = 8) -> list[int]:
    """Modes ``m <= m_max`` with ``m = 0 mod (g + 1)``."""
    return list(range(0, m_max + 1, symmetry_order + 1))


@dataclass
class PingPong:
    """Discrete operators of ``S``, ``C`` and ``G`` and the compositions ``A``, ``B``.

    ``S_C e = (chi_u Phi e, L e, V e)`` with ``Phi`` a weighted min-norm inverse
    of ``J_hat_C`` completed by ``X`` and ``Y``. In mode 0,
    ``S_G f = ((1 - chi_l)(Psi f - c tau_D), 0, c)`` with ``c = Psi f(r_g)``,
    the end inverse at its inner radius ``r_g`` standing in for its value at
    the origin, and ``tau_D`` the homogeneous end solution equal to 1 there.
    ``A`` and ``B`` are ``T S_C - I`` and ``T S_G - I``, where
    ``T(phi, l, v) = J_hat_S phi + X l + Y v``.

    Mode-0 end solutions are of size ``eps^-2`` per unit datum at the Grim
    scale, so the code never forms ``Psi f`` itself: the difference
    ``Psi f - c tau_D`` comes from a Dirichlet solve, and the shift part
    ``Y c`` of ``B`` is carried as a parameter (``A(Y v) = 0`` exactly).
    """

    surface: GluedSurface
    h: float = 0.01
    m_max: int = 8
    core_factor: float = 4.0
    grim_inner: float = 0.2
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        S = self.surface
        c, R, eps = S.c, S.R, S.epsilon
        rmax = 0.98 * S.r_max
        n = int(math.floor(math.acosh(rmax / c) / self.h))
        self.s = self.h * np.arange(-n, n + 1)
        self.r = c * np.cosh(self.s)
        self.sheet = np.where(self.s >= 0, 1, -1)
        self.modes = symmetric_modes(S.symmetry_order, self.m_max)
        rC = self.core_factor * R**4
        if rC >= rmax:
            raise ValueError("core domain exceeds the grid; need eps R^4 small")
        self.core = np.abs(self.s) <= math.acosh(rC / c)
        self.E = self.r < 4 * R
        self.F = self.r >= R
        rg = self.grim_inner * R
        self.j_g = int(np.searchsorted(self.s, math.acosh(rg / c)))
        self.r_g = float(self.r[self.j_g])
        self.center = n
        self.coefS = hat_coefficients(S, self.s, "S")
        sC = self.s[self.core]
        self.coefC = hat_coefficients(S, sC, "C")
        sG = self.s[self.j_g:]
        self.coefG = {e: hat_coefficients(S, sG, "G", e) for e in (1, -1)}
        self.tau = self.coefS["tau"][1:-1]
        self.chi_u = cutoff(R**4)(self.r)
        self.chi_l = cutoff(R / 4)(self.r)
        self.chi_split = cutoff(2 * R)(self.r)
        fields = deficiency_fields(S)
        K = np.zeros((self.s.size, 4))
        ext = S.extension_radius
        for k, sheet in enumerate((1, -1)):
            m = (self.sheet == sheet) & (self.r > ext) & (self.r < 2 * R)
            K[m, k] = fields.X[sheet](self.r[m])
            K[m, 2 + k] = fields.Y[sheet](self.r[m])
        self.K = K
        self.fields = fields
        self.weight_C = self.r[self.core] ** S.delta
        self.weight_E = self.r ** (2 + S.delta)
        # both ends rise in z, like the paraboloids they model
        zr = self.coefS["z"] - self.coefS["z"][self.center]
        # the end operator is eps^2 times its unit-scale form, so the polynomial factor saturates at 1/eps
        self.weight_F = (np.minimum(self.r, 1 / eps) ** 2
                         * np.exp(0.5 * (1 + S.gamma) * eps * (zr - np.min(zr[self.F]))))
        # global weight for residuals, continuous at r = R
        self.weight = np.where(self.F, self.weight_F * R**S.delta, self.weight_E)

    # -- operators -------------------------------------------------------
    def op_S(self, m: int) -> ModeOperator:
        key = ("S", m)
        if key not in self._cache:
            self._cache[key] = mode_operator_from(self.coefS, m, dirichlet(), dirichlet())
        return self._cache[key]

    def op_C(self, m: int) -> ModeOperator:
        key = ("C", m)
        if key not in self._cache:
            self._cache[key] = mode_operator_from(self.coefC, m, dirichlet(), dirichlet())
        return self._cache[key]

    def op_G(self, m: int, end: int) -> ModeOperator:
        key = ("G", m, end)
        if key not in self._cache:
            inner = mirror(1.0, node_centred=True) if m == 0 else dirichlet()
            self._cache[key] = mode_operator_from(self.coefG[end], m, inner, dirichlet())
        return self._cache[key]

    def T(self, m: int, phi, p=None) -> np.ndarray:
        out = self.op_S(m).apply(phi)
        if m == 0 and p is not None:
            out = out + self.K @ np.asarray(p, dtype=float)
        return out

    # -- compact inverse ---------------------------------------------------
    def _core_setup(self, m: int):
        key = ("core", m)
        if key not in self._cache:
            op = self.op_C(m)
            lu = op.factor()
            data = {"lu": lu}
            if m == 0:
                KC = self.K[self.core]
                M4 = lu.solve(KC)
                G = self.weight_C[:, None] * M4
                U, sv, Vt = np.linalg.svd(G, full_matrices=False)
                if sv[-1] <= 1e-12 * sv[0]:
                    raise RankDeficiency(f"deficiency directions are degenerate (singular values {sv})")
                data.update(M4=M4, pinv=(Vt.T / sv) @ U.T, sv=sv)
            self._cache[key] = data
        return self._cache[key]

    def core_solve(self, m: int, e_core):
        """``(phi, p)`` with ``J_hat_C phi + K p = e`` on the core grid and ``|r^delta phi|_2`` minimal."""
        d = self._core_setup(m)
        e_core = np.asarray(e_core, dtype=float)
        op = self.op_C(m)
        KC = self.K[self.core]
        phi = np.zeros_like(e_core)
        p = None if m != 0 else np.zeros((4,) + e_core.shape[1:])
        res = e_core
        # one step of iterative refinement removes the roundoff left by large p
        for _ in range(2):
            z = d["lu"].solve(res)
            if m == 0:
                dp = d["pinv"] @ (self.weight_C.reshape((-1,) + (1,) * (z.ndim - 1)) * z)
                phi, p = phi + z - d["M4"] @ dp, p + dp
                res = e_core - op.apply(phi) - KC @ p
            else:
                phi = phi + z
                res = e_core - op.apply(phi)
        if m == 0:
            # re-project: keeps J_C phi + K p = e and restores weighted minimality lost to cancellation
            wcol = self.weight_C.reshape((-1,) + (1,) * (phi.ndim - 1))
            for _ in range(2):
                dp = d["pinv"] @ (wcol * phi)
                phi, p = phi - d["M4"] @ dp, p + dp
        return phi, p

    def S_C(self, m: int, e):
        """Compact right inverse, extended by ``chi_u``: returns ``(phi on S, p)``."""
        e = np.asarray(e, dtype=float)
        phiC, p = self.core_solve(m, e[self.core])
        phi = np.zeros_like(e)
        shape = (-1,) + (1,) * (e.ndim - 1)
        phi[self.core] = self.chi_u[self.core].reshape(shape) * phiC
        return phi, p

    # -- end inverse -------------------------------------------------------
    def _end_nodes(self, end: int):
        n = self.center
        jg = self.j_g
        if end == 1:
            return np.arange(jg, self.s.size)
        return np.arange(2 * n - jg, -1, -1)

    def op_G_dirichlet(self, m: int, end: int) -> ModeOperator:
        """End operator on the nodes past ``r_g`` with Dirichlet data at ``r_g`` and at the outer node."""
        key = ("GD", m, end)
        if key not in self._cache:
            c = {k: (v[1:] if k in ("r", "p", "q", "w", "psi", "z", "sigma") else v) for k, v in self.coefG[end].items()}
            c["s"] = self.coefG[end]["s"][1:]
            self._cache[key] = mode_operator_from(c, m, dirichlet(), dirichlet())
        return self._cache[key]

    def grim_solve(self, m: int, f, end: int):
        """End inverse on the nodes ``r >= r_g`` of one end.

        Returns the node indices, ``Psi f - c tau_D`` and ``c = Psi f(r_g)``,
        where ``Psi`` has a symmetric inner condition and ``tau_D`` is the
        homogeneous solution equal to 1 at ``r_g`` and 0 at the outer node. In
        mode 0 ``c`` is of order ``eps^-2`` while the difference is not, so the
        difference comes from its own Dirichlet solve. Otherwise ``c = 0``.
        """
        idx = self._end_nodes(end)
        fe = np.asarray(f, dtype=float)[idx]
        if m != 0:
            return idx, self.op_G(m, end).solve(fe), np.zeros(fe.shape[1:])
        psi = self.op_G(0, end).solve(fe)
        inner = self.op_G_dirichlet(0, end).solve(fe[1:])
        diff = np.concatenate([np.zeros((1,) + fe.shape[1:]), inner])
        return idx, diff, psi[0]

    def S_G(self, m: int, f):
        """End right inverse: returns ``(phi on S, v)`` with ``v = (v_up, v_low)``."""
        f = np.asarray(f, dtype=float)
        phi = np.zeros_like(f)
        v = np.zeros((2,) + f.shape[1:])
        shape = (-1,) + (1,) * (f.ndim - 1)
        for k, end in enumerate((1, -1)):
            idx, diff, cval = self.grim_solve(m, f, end)
            # the lower modified normal points down: a shift along it is a downward translation
            v[k] = cval if end == 1 else -cval
            phi[idx] = (1 - self.chi_l[idx]).reshape(shape) * diff
        return phi, v

    # -- compositions ------------------------------------------------------
    def _stencil(self, P, Q, W):
        h = self.h
        lo = P / h**2 - Q / (2 * h)
        up = P / h**2 + Q / (2 * h)
        dg = -2 * P / h**2 + W
        return lo, dg, up

    def A(self, m: int, e):
        """``T S_C e - e``, formed without the solve residual.

        On the core ``J_C phi + K p = e`` holds exactly, so
        ``T S_C e - e = (J_S - J_C)(chi_u phi) + [J_C, chi_u] phi``. Both terms
        are evaluated directly, which keeps far-field values free of the
        factorisation's roundoff floor. ``e`` must vanish where ``chi_u < 1``.
        """
        e = np.asarray(e, dtype=float)
        phiC, _ = self.core_solve(m, e[self.core])
        core = self.core
        shape = (-1,) + (1,) * (e.ndim - 1)
        col = lambda a: a.reshape(shape)
        S, C = self.coefS, self.coefC
        rC = C["r"]
        wm = -m * m / rC**2
        dS = self._stencil(S["p"][core], S["q"][core], S["w"][core] + wm)
        dC = self._stencil(C["p"], C["q"], C["w"] + wm)
        chi = self.chi_u[core]
        u = col(chi) * phiC

        def shift(a, k):
            out = np.zeros_like(a)
            if k == 1:
                out[:-1] = a[1:]
            else:
                out[1:] = a[:-1]
            return out

        out = np.zeros_like(e)
        diff = (col(dS[0] - dC[0]) * shift(u, -1) + col(dS[1] - dC[1]) * u + col(dS[2] - dC[2]) * shift(u, 1))
        dchi_lo = chi - shift(chi, -1)
        dchi_up = chi - shift(chi, 1)
        comm = -(col(dC[0] * dchi_lo) * shift(phiC, -1) + col(dC[2] * dchi_up) * shift(phiC, 1))
        out[core] = diff + comm
        return out

    def A_direct(self, m: int, e):
        """``T S_C e - e`` by applying ``T`` to the computed ``S_C e``."""
        phi, p = self.S_C(m, e)
        return self.T(m, phi, p) - e

    def B_parts(self, m: int, f):
        """``B f = rest + Y v``; the shift part is kept apart because ``A(Y v) = 0`` exactly.

        As for ``A``, the end equation ``J_G psi = f`` is used exactly:
        ``rest = (J_S - J_G)((1 - chi_l) psi) - [J_G, chi_l] psi``, which needs
        ``f`` to vanish where ``chi_l > 0``.
        """
        f = np.asarray(f, dtype=float)
        shape = (-1,) + (1,) * (f.ndim - 1)
        col = lambda a: a.reshape(shape)
        S = self.coefS
        wm = -m * m / S["r"] ** 2
        loS, dgS, upS = self._stencil(S["p"], S["q"], S["w"] + wm)
        out = np.zeros_like(f)
        v = np.zeros((2,) + f.shape[1:])
        for k, end in enumerate((1, -1)):
            idx, diff, cval = self.grim_solve(m, f, end)
            v[k] = cval if end == 1 else -cval
            G = self.coefG[end]
            loG, dgG, upG = self._stencil(G["p"], G["q"], G["w"] - m * m / G["r"] ** 2)
            # in end ordering the lower sheet runs towards decreasing s, so its neighbours swap
            lo_e, up_e = (loS[idx], upS[idx]) if end == 1 else (upS[idx], loS[idx])
            eta = 1 - self.chi_l[idx]
            u = col(eta) * diff
            prev = lambda a: np.concatenate([np.zeros((1,) + a.shape[1:]), a[:-1]])
            nxt = lambda a: np.concatenate([a[1:], np.zeros((1,) + a.shape[1:])])
            dterm = col(lo_e - loG) * prev(u) + col(dgS[idx] - dgG) * u + col(up_e - upG) * nxt(u)
            eta_prev = np.concatenate([[0.0], eta[:-1]])
            eta_next = np.concatenate([eta[1:], [eta[-1]]])
            comm = col(loG * (eta_prev - eta)) * prev(diff) + col(upG * (eta_next - eta)) * nxt(diff)
            out[idx] = dterm + comm
        return out, v

    def B_direct(self, m: int, f):
        """``T S_G f - f`` by applying ``T`` to the computed ``S_G f``."""
        phi, v = self.S_G(m, f)
        p = None if m != 0 else np.concatenate([np.zeros((2,) + v.shape[1:]), v])
        return self.T(m, phi, p) - f

    def B(self, m: int, f):
        rest, v = self.B_parts(m, f)
        if m != 0:
            return rest
        return rest + self.K[:, 2:] @ v

    def A_matrix(self, m: int) -> np.ndarray:
        """Columns ``A e_j`` for unit vectors at the nodes of ``E``."""
        key = ("Amat", m)
        if key not in self._cache:
            cols = np.flatnonzero(self.E)
            eye = np.zeros((self.s.size, cols.size))
            eye[cols, np.arange(cols.size)] = 1.0
            self._cache[key] = self.A(m, eye)
        return self._cache[key]

    def B_matrix(self, m: int):
        """``(rest, V)``: columns of ``B e_j`` without the shift part, and the shifts, for ``e_j`` in ``F``."""
        key = ("Bmat", m)
        if key not in self._cache:
            cols = np.flatnonzero(self.F)
            eye = np.zeros((self.s.size, cols.size))
            eye[cols, np.arange(cols.size)] = 1.0
            self._cache[key] = self.B_parts(m, eye)
        return self._cache[key]

    def support_leaks(self, m: int) -> dict:
        """Largest entries of ``A`` outside ``A(R, inf)`` and of ``B`` outside ``B(2R)``, relative to their sups."""
        Am = self.A_matrix(m)
        rest, V = self.B_matrix(m)
        Bm = rest + (self.K[:, 2:] @ V if m == 0 else 0.0)
        outA = self.r < self.surface.R
        outB = self.r > 2 * self.surface.R
        return {"A": float(np.max(np.abs(Am[outA])) / max(np.max(np.abs(Am)), 1e-300)),
                "B": float(np.max(np.abs(Bm[outB])) / max(np.max(np.abs(Bm)), 1e-300))}

    def composites(self, m: int):
        """``BA`` on ``E`` and ``AB`` on ``F`` as dense matrices."""
        key = ("comp", m)
        if key not in self._cache:
            Am = self.A_matrix(m)
            rest, V = self.B_matrix(m)
            E, F = self.E, self.F
            BA = rest[E] @ Am[F]
            if m == 0:
                BA = BA + self.K[E, 2:] @ (V @ Am[F])
            AB = Am[F] @ rest[E]
            self._cache[key] = (BA, AB)
        return self._cache[key]

    def contraction_norms(self, m: int) -> dict:
        """Weighted sup-norm operator norms ``|W BA W^-1|_inf`` (E weight) and the same for ``AB`` (F weight)."""
        BA, AB = self.composites(m)
        wE = self.weight_E[self.E]
        wF = self.weight_F[self.F]
        nBA = np.max(np.sum(np.abs(wE[:, None] * BA / wE[None, :]), axis=1))
        nAB = np.max(np.sum(np.abs(wF[:, None] * AB / wF[None, :]), axis=1))
        return {"BA": float(nBA), "AB": float(nAB)}

    # -- right inverse ------------------------------------------------------
    def right_inverse(self, m: int, f, method: str = "solve", tol: float = 1e-14):
        """``(phi, p)`` with ``T(phi, p) = f`` from the ping-pong formulas."""
        f = np.asarray(f, dtype=float)
        e0 = self.chi_split * f
        f0 = (1 - self.chi_split) * f
        BA, AB = self.composites(m)
        E, F = self.E, self.F
        e = np.zeros_like(f)
        g = np.zeros_like(f)
        e[E] = neumann_Q(BA, e0[E], method, tol)
        g[F] = neumann_Q(AB, f0[F], method, tol)
        phi1, p1 = self.S_C(m, e)
        # project onto the supports used by the composites; the end inverse
        # amplifies roundoff outside them
        Ae = np.where(F, self.A(m, e), 0.0)
        phi2, v2 = self.S_G(m, Ae)
        phi3, v3 = self.S_G(m, g)
        rest, vg = self.B_parts(m, g)
        # S_C(Y v) = (0, 0, v) exactly, so the shifts of g cancel
        phi4, p4 = self.S_C(m, np.where(E, rest, 0.0))
        phi = phi1 - phi2 + phi3 - phi4
        if m != 0:
            return phi, None
        zero = np.zeros(2)
        p = p1 - p4 - np.concatenate([zero, v2]) + np.concatenate([zero, v3 - vg])
        return phi, p

    def weighted_sup(self, f) -> float:
        f = np.asarray(f, dtype=float)
        w = self.weight.reshape((-1,) + (1,) * (f.ndim - 1))
        return float(np.max(np.abs(w * f)))

    def identity_residual(self, m: int, f, weighted: bool = True) -> float:
        """``|T R f - f| / |f|`` in the weighted sup norm (plain sup norm if ``weighted`` is false)."""
        phi, p = self.right_inverse(m, f)
        res = self.T(m, phi, p) - f
        if weighted:
            return self.weighted_sup(res) / self.weighted_sup(f)
        return float(np.max(np.abs(res)) / np.max(np.abs(f)))


def neumann_Q(M: np.ndarray, x: np.ndarray, method: str = "solve", tol: float = 1e-14, max_terms: int = 500) -> np.ndarray:
    """``(I - M)^-1 x`` by a linear solve or by the truncated Neumann series."""
    if method == "solve":
        return np.linalg.solve(np.eye(M.shape[0]) - M, x)
    if method != "neumann":
        raise ValueError(method)
    out = np.array(x, dtype=float)
    term = out.copy()
    scale = max(np.max(np.abs(out)), 1e-300)
    for _ in range(max_terms):
        term = M @ term
        out = out + term
        if np.max(np.abs(term)) <= tol * scale:
            return out
    raise ContractionFailure("Neumann series did not converge")


def random_band_limited(s: np.ndarray, rng: np.random.Generator, n_bumps: int = 6, support=None) -> np.ndarray:
    """Sum of Gaussian bumps in ``s`` with random centres, widths in ``[0.3, 1]`` and normal amplitudes."""
    lo, hi = (s[0] + 1, s[-1] - 1) if support is None else support
    out = np.zeros_like(s)
    for _ in range(n_bumps):
        c = rng.uniform(lo, hi)
        w = rng.uniform(0.3, 1.0)
        out += rng.standard_normal() * np.exp(-0.5 * ((s - c) / w) ** 2)
    return out


def identity_check(machine: PingPong, n_samples: int = 10, seed: int = 0, n_theta: int = 32,
                   weighted: bool = True) -> list[float]:
    """Relative residual of ``T R f - f`` on random band-limited fields ``sum_m f_m(s) cos(m theta)``.

    The norm is the machine's weighted sup norm, or the plain sup norm.
    """
    rng = np.random.default_rng(seed)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    out = []
    for _ in range(n_samples):
        total_f = np.zeros((machine.s.size, n_theta))
        total_r = np.zeros_like(total_f)
        for m in machine.modes:
            fm = random_band_limited(machine.s, rng)
            phi, p = machine.right_inverse(m, fm)
            res = machine.T(m, phi, p) - fm
            ang = np.cos(m * theta)[None, :]
            total_f += fm[:, None] * ang
            total_r += res[:, None] * ang
        if weighted:
            out.append(machine.weighted_sup(total_r) / machine.weighted_sup(total_f))
        else:
            out.append(float(np.max(np.abs(total_r)) / np.max(np.abs(total_f))))
    return out


# ---------------------------------------------------------------------------
# nonlinear refinement (mode 0)
# ---------------------------------------------------------------------------


def _curve_mcfs(r, z, h, eps):
    """``H + eps <N, e_z>`` of a profile curve sampled on a uniform grid (centred differences)."""
    rs = np.gradient(r, h, edge_order=2)
    zs = np.gradient(z, h, edge_order=2)
    rss = np.gradient(rs, h, edge_order=2)
    zss = np.gradient(zs, h, edge_order=2)
    ell = np.hypot(rs, zs)
    k1 = (rs * zss - zs * rss) / ell**3
    k2 = zs / (r * ell)
    return -(k1 + k2) + eps * rs / ell


def normalised_residual(machine: PingPong, phi: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``-M / psi`` of the surface displaced by ``phi`` along the modified normal, with end parameters ``p``."""
    S = machine.surface
    cv = S.curve(machine.s)
    r, z = cv["r"].copy(), cv["z"].copy()
    ell = np.hypot(cv["r_s"], cv["z_s"])
    Nr, Nz = -cv["z_s"] / ell, cv["r_s"] / ell
    sig = machine.coefS["sigma"]
    # blended modified normal in the (r, z) half-plane: a sigma e_z + b N
    rn = S.neck_radius
    xn = cutoff(rn)(r)
    mu = cv["r_s"] / ell
    a_g, b_g, psi_g = _rotation(sig * mu, r, S.epsilon)
    a = np.where(r < 2 * rn, 1 - xn, a_g)
    b = np.where(r < 2 * rn, xn, b_g)
    psi = machine.coefS["psi"]
    dz = np.zeros_like(r)
    if p is not None:
        ext = S.extension_cutoff()
        eta = 1 - ext(r)
        for k, sheet in enumerate((1, -1)):
            msk = machine.sheet == sheet
            W = machine.fields.W[sheet]
            sel = msk & (eta > 0)
            if np.any(sel):
                dz[sel] += p[k] * eta[sel] * W(r[sel])[0] + p[2 + k] * eta[sel]
    rr = r + phi * b * Nr
    zz = z + dz + phi * (a * sig + b * Nz)
    # analytic value on the unperturbed curve; differences only carry the increment
    k1 = (cv["r_s"] * cv["z_ss"] - cv["z_s"] * cv["r_ss"]) / ell**3
    M0 = -(k1 + cv["z_s"] / (r * ell)) + S.epsilon * mu
    M = M0 + _curve_mcfs(rr, zz, machine.h, S.epsilon) - _curve_mcfs(r, z, machine.h, S.epsilon)
    return -M / psi


def _rotation(mu_graph, r, eps):
    from .surgery import modified_normal_coefficients
    return modified_normal_coefficients(mu_graph, r, eps)


@dataclass(frozen=True)
class RefinementReport:
    residual_norms: list
    reduction: float
    phi: np.ndarray
    p: np.ndarray


def refine_soliton(machine: PingPong, iterations: int = 3, region: float | None = None) -> RefinementReport:
    """Fixed-point iteration ``(phi, p) <- (phi, p) - R(residual)`` in mode 0.

    The residual is that of the discrete nonlinear functional. It is measured
    in the sup norm over the compact region ``r <= region`` (default ``4R``),
    away from the grid ends.
    """
    S = machine.surface
    lim = 4 * S.R if region is None else region
    sel = (machine.r <= lim) & (np.abs(machine.s) < machine.s[-1] - 5 * machine.h)
    phi = np.zeros_like(machine.s)
    p = np.zeros(4)
    norms = []
    for it in range(iterations + 1):
        res = normalised_residual(machine, phi, p)
        res[~np.isfinite(res)] = 0.0
        # the end rows of a centred-difference functional are not meaningful
        res[:3] = 0.0
        res[-3:] = 0.0
        norms.append(float(np.max(np.abs(res[sel]))))
        if it == iterations:
            break
        dphi, dp = machine.right_inverse(0, res)
        phi = phi - dphi
        p = p - dp
    return RefinementReport(norms, norms[-1] / norms[0], phi, p)


def build_machine(c: float = 0.4, epsilon: float | None = None, R: float = 20.0, h: float = 0.01, m_max: int = 8,
                  symmetry_order: int = 1, **kw) -> PingPong:
    """Glued surface and ping-pong operators with ``epsilon = R^-4.5`` by default."""
    eps = R**-4.5 if epsilon is None else epsilon
    S = build_glued_surface(c, eps, R, symmetry_order=symmetry_order, **kw)
    return PingPong(S, h, m_max)
