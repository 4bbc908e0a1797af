"""First approximation around the three spiral vortices and its residuals.

Conventions. Points are complex numbers. Around vortex ``j`` the inner variable
is ``y = (x - xi_j)/eps``. For a real function ``A`` the complex gradient is
``gA = A_1 + i A_2``; with ``z_perp = (z_2, -z_1)`` one has
``grad_perp A . grad B = -Im(conj(gA) gB)``.

The far field of the other vortices, seen from ``j``, is
``-(m_i/4pi) log|1 + w|^2`` with ``w = eps y / (xi_j - xi_i)``; its mode-``l``
part is ``E_l = (2 (-1)^(l+1) / l) Re(w^l)`` and, after summing over ``i``,
``sum_i (m_i/4pi) E_l = Re(C_l y^l)``.

Layers (``kappa = m_j/M``, ``V = gamma Gamma_+^(gamma-1)``, ``P_l = rho_l / r^l``):

    psi_j1 = kappa^-1 sum_l P_l(r) Re(C_l y^l),    phi_j1 = kappa^-1 sum_l V (P_l - 1) Re(C_l y^l),
    psi_j2 = kappa^-2 sum_{l=2,4} p_l(r) Re(D_l y^l),   phi_j2 = kappa^-2 sum (V p_l - q_l) Re(D_l y^l),

with ``D_2 = -i eps^2 dC_2/dt``, ``D_4 = C_2^2`` and ``p_l`` the mode-``l``
solutions with sources ``q_2 = -r V (P_2 - 1)/(2 Gamma')``,
``q_4 = -gamma (gamma-1) Gamma^(gamma-2) (P_2 - 1)^2 / 4``. The outer correction
is ``psi_out = sum_k (1 - eta_k) kappa_k psi_k1`` evaluated with the exact
exterior (multipole) form of ``psi_k1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray

from .modal import ModeSolution, rho_l, solve_mode
from .pointvortex import SpiralConfig, kr_velocity
from .profile import Profile
from .radial import RadialFunction

MODES_J1 = (2, 3, 4)
MODES_J2 = (2, 4)


class RegimeError(ValueError):
    """Raised when eps and t do not keep the cutoff annuli clear of the cores."""


# ---------------------------------------------------------------- expansion terms


def _w(y: NDArray, eps: float, d: complex) -> NDArray:
    return eps * np.asarray(y, dtype=complex) / d


def expansion_mode(y: ArrayLike, eps: float, d: complex, l: int) -> NDArray:
    """``E_l`` for one pair, ``d = xi_j - xi_i``."""
    w = _w(y, eps, d)
    return 2 * (-1) ** (l + 1) / l * np.real(w**l)


def full_log(y: ArrayLike, eps: float, d: complex) -> NDArray:
    """``log(1 + 2 eps y.d/|d|^2 + eps^2 |y|^2/|d|^2)``."""
    w = _w(y, eps, d)
    return np.log1p(2 * w.real + np.abs(w) ** 2)


def remainder5(y: ArrayLike, eps: float, d: complex, nterms: int = 60) -> NDArray:
    """``R_5 = log|1 + w|^2 - sum_{l=1}^{4} E_l`` via the tail series when ``|w| < 1/2``."""
    w = _w(y, eps, d)
    out = np.empty(w.shape)
    small = np.abs(w) < 0.5
    ws = w[small]
    acc = np.zeros(ws.shape, dtype=complex)
    for n in range(nterms + 4, 4, -1):
        acc = acc * ws + (-1) ** (n + 1) / n
    out[small] = 2 * np.real(acc * ws**5)
    wb = w[~small]
    out[~small] = np.log1p(2 * wb.real + np.abs(wb) ** 2) - sum(
        2 * (-1) ** (l + 1) / l * np.real(wb**l) for l in range(1, 5)
    )
    return out


def expansion_terms(y: ArrayLike, cfg: SpiralConfig, eps: float, t: float, j: int) -> dict:
    """``{i: (E_2, E_3, E_4, R_5)}`` for both ``i != j`` at points ``y``."""
    xi = cfg.position(t)
    out = {}
    for i in range(3):
        if i == j:
            continue
        d = xi[j] - xi[i]
        out[i] = tuple(expansion_mode(y, eps, d, l) for l in MODES_J1) + (remainder5(y, eps, d),)
    return out


def nonlinear_functional_N(masses: ArrayLike, j: int, base: ArrayLike, pert: ArrayLike) -> complex:
    """Velocity increment of vortex ``j``: KR velocity at ``base + pert`` minus at ``base``.

    Raises
    ------
    ValueError
        If points coincide.
    """
    base = np.asarray(base, dtype=complex)
    pert = np.asarray(pert, dtype=complex)
    for zz in (base, base + pert):
        d = np.abs(zz[:, None] - zz[None, :])[~np.eye(3, dtype=bool)]
        if np.any(d == 0):
            raise ValueError("coincident points")
    m = np.asarray(masses, dtype=float)
    out = 0j
    for i in range(3):
        if i == j:
            continue
        a = base[j] - base[i]
        b = a + pert[j] - pert[i]
        # i m/(2 pi) (1/conj(b) - 1/conj(a)) without cancellation
        out += 1j * m[i] / (2 * np.pi) * np.conj(a - b) / (np.conj(a) * np.conj(b))
    return complex(out)


# ---------------------------------------------------------------- cutoff


def eta0(rho: ArrayLike) -> tuple[NDArray, NDArray, NDArray]:
    """Smooth cutoff, 1 on ``rho <= 1`` and 0 on ``rho >= 2``, with two derivatives."""
    rho = np.asarray(rho, dtype=float)
    e = np.where(rho <= 1, 1.0, 0.0)
    d1 = np.zeros_like(rho)
    d2 = np.zeros_like(rho)
    mid = (rho > 1) & (rho < 2)
    x1, x2 = 2 - rho[mid], rho[mid] - 1

    def f(x):
        return np.exp(-1 / x)

    def fp(x):
        return f(x) / x**2

    def fpp(x):
        return f(x) * (1 / x**4 - 2 / x**3)

    a, b = f(x1), f(x2)
    ap, bp = -fp(x1), fp(x2)
    app, bpp = fpp(x1), fpp(x2)
    s = a + b
    e[mid] = a / s
    num = ap * b - a * bp
    d1[mid] = num / s**2
    d2[mid] = ((app * b - a * bpp) * s - 2 * num * (ap + bp)) / s**3
    return e, d1, d2


# ---------------------------------------------------------------- radial building blocks


@dataclass
class ModalCache:
    """Profile-dependent radial solutions shared by every (eps, t)."""

    profile: Profile
    rho: dict[int, ModeSolution]
    j2: dict[int, ModeSolution]
    j2_phi: dict[int, RadialFunction]  # V p_l - q_l on [0, 1]
    j2_dphi: dict[int, RadialFunction]
    j2_q: dict[int, Callable]

    @classmethod
    def build(cls, profile: Profile, n: int = 40) -> "ModalCache":
        rho = {l: rho_l(profile, l, n=n) for l in MODES_J1}
        P2 = rho[2]
        g = profile.gamma

        def q2(r):
            r = np.asarray(r, dtype=float)
            out = np.zeros_like(r)
            ins = r < 1
            ri = r[ins]
            out[ins] = -profile.V(ri) * (P2.P(ri) - 1) / (2 * profile.dGamma_over_r(ri))
            return out

        def q4(r):
            r = np.asarray(r, dtype=float)
            out = np.zeros_like(r)
            ins = r < 1
            ri = r[ins]
            nu = np.maximum(profile.nu(ri), 0.0)
            out[ins] = -g * (g - 1) * nu ** (g - 2) * (P2.P(ri) - 1) ** 2 / 4
            return out

        qs = {2: q2, 4: q4}
        j2 = {l: solve_mode(profile, l, q=qs[l], n=n) for l in MODES_J2}
        breaks = profile.nu.breaks
        phi, dphi = {}, {}
        for l in MODES_J2:
            sol = j2[l]
            f = RadialFunction.from_callable(lambda r, s=sol, q=qs[l]: profile.V(r) * s.P(r) - q(r),
                                             breaks, n)
            phi[l] = f
            dphi[l] = f.deriv()
        return cls(profile=profile, rho=rho, j2=j2, j2_phi=phi, j2_dphi=dphi, j2_q=qs)

    def ext_coeff_j1(self, l: int) -> float:
        """``c_l`` with ``P_l(r) = c_l r^(-2l)`` for ``r >= 1``."""
        s = self.rho[l]
        return float(-s.Iinf / (2 * l * s.a))

    def ext_coeff_j2(self, l: int) -> float:
        s = self.j2[l]
        return float(-s.Iinf / (2 * l * s.a))


def _grad_layer(f: NDArray, df_over_r: NDArray, y: NDArray, c: complex, l: int) -> tuple[NDArray, NDArray]:
    """Value and complex gradient of ``f(r) Re(c y^l)`` given ``f`` and ``f'/r``."""
    yl1 = y ** (l - 1)
    h = np.real(c * yl1 * y)
    val = f * h
    grad = df_over_r * y * h + f * np.conj(l * c * yl1)
    return val, grad


# ---------------------------------------------------------------- first approximation


@dataclass
class VortexCoefficients:
    """Angular coefficients of the layers of one vortex at one time."""

    C: dict[int, complex]
    Cdot: dict[int, complex]
    D: dict[int, complex]


@dataclass
class FirstApproximation:
    """Assembled first approximation at ``(eps, t)``.

    Attributes
    ----------
    cfg, profile, cache
    eps, t : float
    xi_tilde : callable or None
        Optional perturbation of the trajectories, ``t -> complex array (3,)``.
    """

    cfg: SpiralConfig
    profile: Profile
    cache: ModalCache
    eps: float
    t: float
    xi_tilde: Callable[[float], NDArray] | None = None
    coeffs: list[VortexCoefficients] = field(default_factory=list)

    # ---- geometry
    @property
    def kappa(self) -> NDArray:
        return self.cfg.masses / self.profile.mass

    def xi_star(self, t: float | None = None) -> NDArray:
        return self.cfg.position(self.t if t is None else t)

    def xi(self, t: float | None = None) -> NDArray:
        t = self.t if t is None else t
        z = self.cfg.position(t)
        if self.xi_tilde is not None:
            z = z + np.asarray(self.xi_tilde(t), dtype=complex)
        return z

    def xi_dot(self) -> NDArray:
        v = self.cfg.velocity(self.t)
        if self.xi_tilde is not None:
            h = 1e-4 * self.t
            v = v + (np.asarray(self.xi_tilde(self.t + h)) - np.asarray(self.xi_tilde(self.t - h))) / (2 * h)
        return v

    def cutoff_radius(self, t: float | None = None) -> float:
        t = self.t if t is None else t
        return self.cfg.cutoff_K() * float(self.cfg.scale(t))

    # ---- coefficients
    def _C(self, t: float) -> list[dict[int, complex]]:
        xs = self.cfg.position(t)
        m = self.cfg.masses
        out = []
        for j in range(3):
            cj = {}
            for l in MODES_J1:
                s = 0j
                for i in range(3):
                    if i != j:
                        s += m[i] / (4 * np.pi) * 2 * (-1) ** (l + 1) / l * self.eps**l * (xs[j] - xs[i]) ** (-l)
                cj[l] = s
            out.append(cj)
        return out

    def _Cdot(self, t: float) -> list[dict[int, complex]]:
        xs = self.cfg.position(t)
        vs = self.cfg.velocity(t)
        m = self.cfg.masses
        out = []
        for j in range(3):
            cj = {}
            for l in MODES_J1:
                s = 0j
                for i in range(3):
                    if i != j:
                        d, dd = xs[j] - xs[i], vs[j] - vs[i]
                        s += m[i] / (4 * np.pi) * 2 * (-1) ** (l + 1) / l * self.eps**l * (-l) * d ** (-l - 1) * dd
                cj[l] = s
            out.append(cj)
        return out

    def coefficients_at(self, t: float) -> list[VortexCoefficients]:
        C = self._C(t)
        Cd = self._Cdot(t)
        out = []
        for j in range(3):
            D = {2: -1j * self.eps**2 * Cd[j][2], 4: C[j][2] ** 2}
            out.append(VortexCoefficients(C=C[j], Cdot=Cd[j], D=D))
        return out

    def __post_init__(self):
        if not self.coeffs:
            self.coeffs = self.coefficients_at(self.t)

    def check_regime(self) -> None:
        """``eta_j = 1`` on ``B_eps(xi_j)`` and ``eta_k = 0`` there for ``k != j``."""
        Ks = self.cutoff_radius()
        xs = self.xi()
        dmin = min(abs(xs[a] - xs[b]) for a in range(3) for b in range(a + 1, 3))
        if not (self.eps < Ks and dmin - self.eps > 2 * Ks):
            raise RegimeError(f"eps={self.eps} too large for cutoff radius {Ks} at t={self.t}")

    # ---- inner fields
    def _radials(self, r: NDArray) -> dict:
        p = self.profile
        c = self.cache
        V = p.V(r)
        dV = p.dV(r)
        out = {"V": V, "dV": dV, "U'": V * p.dGamma(r)}
        for l in MODES_J1:
            s = c.rho[l]
            P, dP = s.P(r), s.dP(r)
            out[("P", l)] = (P, s.dP_over_r(r))
            F = V * (P - 1)
            dF = dV * (P - 1) + V * dP
            with np.errstate(divide="ignore", invalid="ignore"):
                dFr = np.where(r > 1e-9, dF / np.where(r > 0, r, 1), 0.0)
            out[("F", l)] = (F, dFr)
        for l in MODES_J2:
            s = c.j2[l]
            out[("p", l)] = (s.P(r), s.dP_over_r(r))
            ins = r < 1
            f = np.zeros_like(r)
            df = np.zeros_like(r)
            f[ins] = c.j2_phi[l](r[ins])
            with np.errstate(divide="ignore", invalid="ignore"):
                df[ins] = np.where(r[ins] > 1e-9, c.j2_dphi[l](r[ins]) / r[ins], 0.0)
            out[("f", l)] = (f, df)
        return out

    def inner_fields(self, j: int, y: ArrayLike, coeffs: VortexCoefficients | None = None,
                     rad: dict | None = None) -> dict:
        """Values and complex gradients of ``psi_j1, phi_j1, psi_j2, phi_j2`` at ``y``."""
        y = np.asarray(y, dtype=complex)
        r = np.abs(y)
        rad = self._radials(r) if rad is None else rad
        co = self.coeffs[j] if coeffs is None else coeffs
        k = self.kappa[j]
        res = {}
        for name, key, modes, coef, pref in (
            ("psi1", "P", MODES_J1, co.C, 1 / k),
            ("phi1", "F", MODES_J1, co.C, 1 / k),
            ("psi2", "p", MODES_J2, co.D, 1 / k**2),
            ("phi2", "f", MODES_J2, co.D, 1 / k**2),
        ):
            val = np.zeros(y.shape)
            grad = np.zeros(y.shape, dtype=complex)
            for l in modes:
                f, dfr = rad[(key, l)]
                v, g = _grad_layer(f, dfr, y, coef[l], l)
                val += pref * v
                grad += pref * g
            res[name] = (val, grad)
        return res

    def psi_out_local(self, j: int, y: ArrayLike) -> tuple[NDArray, NDArray]:
        """``psi_out(xi_j + eps y)`` and its ``y``-gradient near vortex ``j``."""
        y = np.asarray(y, dtype=complex)
        xs = self.xi()
        val = np.zeros(y.shape)
        grad = np.zeros(y.shape, dtype=complex)
        for kk in range(3):
            if kk == j:
                continue
            w = y + (xs[j] - xs[kk]) / self.eps
            for l in MODES_J1:
                c = self.cache.ext_coeff_j1(l) * self.coeffs[kk].C[l]
                val += np.real(np.conj(c) * w ** (-l))
                grad += -l * c * np.conj(w) ** (-l - 1)
        return val, grad

    # ---- residuals
    def quadrature(self, nr: int = 16, ntheta: int = 48, R: float = 1.0) -> tuple[NDArray, NDArray]:
        """Polar Gauss-Legendre x trapezoid nodes on ``B_R`` (graded toward 0) and weights."""
        x, w = leggauss(nr)
        br = self.profile.nu.breaks * R
        rs, ws = [], []
        for a, b in zip(br[:-1], br[1:]):
            rs.append(0.5 * (a + b) + 0.5 * (b - a) * x)
            ws.append(0.5 * (b - a) * w)
        r = np.concatenate(rs)
        wr = np.concatenate(ws)
        th = 2 * np.pi * np.arange(ntheta) / ntheta
        y = r[:, None] * np.exp(1j * th)[None, :]
        W = (wr * r)[:, None] * np.full(ntheta, 2 * np.pi / ntheta)[None, :]
        return y, W

    def residual_E1(self, j: int, nr: int = 16, ntheta: int = 48, fd_rel: float = 1e-4) -> "E1Result":
        """Inner error of vortex ``j`` on ``B_1``.

        ``E = eps^2 d_t phi_j + grad_perp(kappa Gamma + kappa psi_j + psi_out) . grad(U + phi_j)
        + (u_ext - eps xi_j') . grad(U + phi_j)``, with ``u_ext`` the exact velocity of the
        other two vortices' exterior streams. ``d_t phi_j`` at fixed ``y`` is a centered
        difference of the layer coefficients with step ``fd_rel * t``.
        """
        y, W = self.quadrature(nr, ntheta)
        r = np.abs(y)
        rad = self._radials(r)
        k = self.kappa[j]
        F = self.inner_fields(j, y, rad=rad)
        # time derivative of phi_j at fixed y
        h = fd_rel * self.t
        cp = self.coefficients_at(self.t + h)[j]
        cm = self.coefficients_at(self.t - h)[j]
        cd = VortexCoefficients(
            C={l: (cp.C[l] - cm.C[l]) / (2 * h) for l in MODES_J1},
            Cdot={},
            D={l: (cp.D[l] - cm.D[l]) / (2 * h) for l in MODES_J2},
        )
        Fd = self.inner_fields(j, y, coeffs=cd, rad=rad)
        dphi_dt = Fd["phi1"][0] + Fd["phi2"][0]
        unit = np.where(r > 0, y / np.where(r > 0, r, 1), 0)
        # radial parts kept apart: the bracket of two radial functions vanishes
        # identically, and forming it in floating point would leave a large roundoff
        gU = rad["U'"] * unit
        gG = k * self.profile.dGamma(r) * unit
        gphi = F["phi1"][1] + F["phi2"][1]
        gpsi = k * (F["psi1"][1] + F["psi2"][1]) + self.psi_out_local(j, y)[1]
        xs = self.xi()
        m = self.cfg.masses
        u = np.zeros(y.shape, dtype=complex)
        for i in range(3):
            if i == j:
                continue
            D = (xs[j] - xs[i]) / self.eps
            u += 1j * m[i] / (2 * np.pi) * (-np.conj(y) / (np.conj(y + D) * np.conj(D)))
        # uniform part: eps times (point-vortex velocity minus actual velocity). It
        # vanishes identically on the unperturbed spiral; evaluating it there would
        # only inject roundoff amplified by the large U'
        if self.xi_tilde is not None:
            u += self.eps * (kr_velocity(m, xs)[j] - self.xi_dot()[j])
        E = (self.eps**2 * dphi_dt
             - np.imag(np.conj(gG) * gphi) - np.imag(np.conj(gpsi) * gU) - np.imag(np.conj(gpsi) * gphi)
             + np.real(np.conj(u) * (gU + gphi)))
        return E1Result(y=y, weights=W, E=E, sup=float(np.max(np.abs(E))),
                        mass=float(np.sum(W * E)))

    # ---- layer diagnostics
    def layer_sup(self, j: int, nr: int = 16, ntheta: int = 48) -> dict[str, float]:
        """Sup norms of every layer and mode on ``B_1`` (``psi`` layers on ``B_2``).

        Keys look like ``"phi1_2"`` (layer, mode), plus the totals ``"psi1"``, ``"phi1"``,
        ``"grad_psi1"``, ``"psi2"``, ``"phi2"``, ``"grad_psi2"``.
        """
        y, _ = self.quadrature(nr, ntheta, R=2.0)
        r = np.abs(y)
        rad = self._radials(r)
        co = self.coeffs[j]
        k = self.kappa[j]
        out: dict[str, float] = {}
        for name, key, modes, coef, pref in (
            ("psi1", "P", MODES_J1, co.C, 1 / k),
            ("phi1", "F", MODES_J1, co.C, 1 / k),
            ("psi2", "p", MODES_J2, co.D, 1 / k**2),
            ("phi2", "f", MODES_J2, co.D, 1 / k**2),
        ):
            tot = np.zeros(y.shape)
            gtot = np.zeros(y.shape, dtype=complex)
            for l in modes:
                f, dfr = rad[(key, l)]
                v, g = _grad_layer(f, dfr, y, coef[l], l)
                out[f"{name}_{l}"] = float(np.max(np.abs(v))) * pref
                tot += pref * v
                gtot += pref * g
            out[name] = float(np.max(np.abs(tot)))
            if name.startswith("psi"):
                out["grad_" + name] = float(np.max(np.abs(gtot)))
        return out

    def layer_moments(self, j: int, nr: int = 16, ntheta: int = 48) -> NDArray:
        """``[int phi_j, int y1 phi_j, int y2 phi_j]`` over the unit disk."""
        y, W = self.quadrature(nr, ntheta)
        F = self.inner_fields(j, y)
        phi = F["phi1"][0] + F["phi2"][0]
        return np.array([np.sum(W * phi), np.sum(W * y.real * phi), np.sum(W * y.imag * phi)])

    def psi_out_dot_gradU(self, j: int, nr: int = 16, ntheta: int = 48) -> float:
        """Sup over ``B_1`` of ``|grad_perp psi_out . grad U|`` in ``y`` coordinates."""
        y, _ = self.quadrature(nr, ntheta)
        r = np.abs(y)
        gU = self.profile.V(r) * self.profile.dGamma(r) * y / r
        g = self.psi_out_local(j, y)[1]
        return float(np.max(np.abs(np.imag(np.conj(g) * gU))))

    def elliptic_residual(self, j: int, layer: int = 1, npts: int = 64, seed: int = 0) -> float:
        """Plug-back check of ``Delta psi + V psi = rhs`` by fourth-order finite differences.

        ``rhs = kappa^-1 V sum Re(C_l y^l)`` for layer 1 and
        ``kappa^-2 sum q_l Re(D_l y^l)`` for layer 2. Returns the largest residual at
        random points of ``B_1`` relative to the largest right-hand side.
        """
        rng = np.random.default_rng(seed)
        core = self.profile.core
        r = np.exp(rng.uniform(np.log(0.5 * core), np.log(0.95), npts))
        y = r * np.exp(2j * np.pi * rng.uniform(size=npts))
        key = "psi1" if layer == 1 else "psi2"
        h = 1e-2 * np.maximum(r, core)
        h = np.minimum(h, 0.2 * (1 - r))

        def val(z):
            return self.inner_fields(j, z)[key][0]

        c = np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])
        lap = np.zeros(npts)
        for e in (1.0, 1j):
            for m, cm in zip(range(-2, 3), c):
                lap += cm * val(y + m * h * e)
        lap /= h**2
        V = self.profile.V(r)
        co = self.coeffs[j]
        k = self.kappa[j]
        if layer == 1:
            rhs = V * sum(np.real(co.C[l] * y**l) for l in MODES_J1) / k
        else:
            rhs = sum(self.cache.j2_q[l](r) * np.real(co.D[l] * y**l) for l in MODES_J2) / k**2
        res = lap + V * val(y) - rhs
        return float(np.max(np.abs(res)) / np.max(np.abs(rhs)))

    def green_consistency(self, j: int, npts: int = 200) -> float:
        """Rebuild ``psi_j1`` from ``phi_j1`` with the modal form of the log kernel.

        For ``phi = F(r) Re(C y^l)`` the decaying solution of ``-Delta psi = phi`` is
        ``psi = P(r) Re(C y^l)`` with
        ``P(r) = (1/2l) [r^-2l int_0^min(r,1) s^(2l+1) F ds + int_min(r,1)^1 s F ds]``.
        Returns the largest ``|psi_green - psi_modal|`` on ``B_2`` relative to ``sup |psi_modal|``.
        """
        p = self.profile
        breaks = p.nu.breaks
        r = np.geomspace(0.05 * p.core, 2.0, npts)
        y = r * np.exp(0.7j)
        co = self.coeffs[j]
        k = self.kappa[j]
        psi_g = np.zeros(npts)
        for l in MODES_J1:
            s = self.cache.rho[l]

            def F(x, s=s):
                return p.V(x) * (s.P(x) - 1)

            lo = RadialFunction.from_callable(lambda x, l=l: F(x) * x ** (2 * l + 1), breaks).integral()
            hi = RadialFunction.from_callable(lambda x: F(x) * x, breaks).integral()
            rc = np.minimum(r, 1.0)
            Pg = (r ** (-2 * l) * lo(rc) + hi(np.ones(1))[0] - hi(rc)) / (2 * l)
            # -Delta psi = phi with phi = kappa^-1 F Re(C y^l)
            psi_g += Pg * np.real(co.C[l] * y**l) / k
        psi_m = self.inner_fields(j, y)["psi1"][0]
        return float(np.max(np.abs(psi_g - psi_m)) / np.max(np.abs(psi_m)))

    def summary(self) -> dict:
        """JSON-ready layer norms and residual norms."""
        out = {"epsilon": self.eps, "t": self.t, "K": self.cfg.cutoff_K(), "T0": self.cfg.T0(),
               "vortices": []}
        for j in range(3):
            e1 = self.residual_E1(j)
            out["vortices"].append({"j": j, "supE1": e1.sup, "massE1": e1.mass, **self.layer_sup(j)})
        out["supE2"] = self.residual_E2().sup
        return out

    def psi_out(self, x: ArrayLike) -> tuple[NDArray, NDArray]:
        """``psi_out`` and its ``x``-gradient at physical points ``x``."""
        x = np.asarray(x, dtype=complex)
        xs = self.xi()
        Ks = self.cutoff_radius()
        val = np.zeros(x.shape)
        grad = np.zeros(x.shape, dtype=complex)
        for kk in range(3):
            w = x - xs[kk]
            rho = np.abs(w)
            act = rho > Ks
            if not act.any():
                continue
            wa = w[act]
            e, d1, _ = eta0(rho[act] / Ks)
            hv = np.zeros(wa.shape)
            hg = np.zeros(wa.shape, dtype=complex)
            for l in MODES_J1:
                c = self.cache.ext_coeff_j1(l) * self.coeffs[kk].C[l] * self.eps**l
                hv += np.real(np.conj(c) * wa ** (-l))
                hg += -l * c * np.conj(wa) ** (-l - 1)
            unit = wa / rho[act]
            val[act] += (1 - e) * hv
            grad[act] += (1 - e) * hg - d1 / Ks * unit * hv
        return val, grad

    def psi_out_sup(self, nrad: int = 200, ntheta: int = 128) -> tuple[float, float]:
        """Sup of ``psi_out / log(|x| + 2)`` and of ``|grad psi_out|`` sampled around each annulus."""
        xs = self.xi()
        Ks = self.cutoff_radius()
        th = np.exp(2j * np.pi * np.arange(ntheta) / ntheta)
        rr = np.geomspace(Ks * (1 + 1e-9), 6 * Ks, nrad)
        pts = np.concatenate([(xs[kk] + rr[:, None] * th[None, :]).ravel() for kk in range(3)])
        v, g = self.psi_out(pts)
        return float(np.max(np.abs(v) / np.log(np.abs(pts) + 2))), float(np.max(np.abs(g)))

    def residual_E2(self, nrad: int = 64, ntheta: int = 128) -> "E2Result":
        """``sum_k kappa_k (psi_k2 Delta eta_k + 2 grad eta_k . grad psi_k2)`` on the annuli."""
        xs = self.xi()
        Ks = self.cutoff_radius()
        x, wg = leggauss(nrad)
        rho = Ks * (1.5 + 0.5 * x)
        th = np.exp(2j * np.pi * np.arange(ntheta) / ntheta)
        vals = []
        for kk in range(3):
            kap = self.kappa[kk]
            w = rho[:, None] * th[None, :]
            hv = np.zeros(w.shape)
            hg = np.zeros(w.shape, dtype=complex)
            for l in MODES_J2:
                c = self.cache.ext_coeff_j2(l) * self.coeffs[kk].D[l] * self.eps**l / kap**2
                hv += np.real(np.conj(c) * w ** (-l))
                hg += -l * c * np.conj(w) ** (-l - 1)
            _, d1, d2 = eta0(np.abs(w) / Ks)
            lap = d2 / Ks**2 + d1 / (Ks * np.abs(w))
            grad_eta = d1 / Ks * w / np.abs(w)
            vals.append(kap * (hv * lap + 2 * np.real(np.conj(grad_eta) * hg)))
        E = np.array(vals)
        return E2Result(values=E, sup=float(np.max(np.abs(E))))

    # ---- assembled fields
    def omega_star(self, x: ArrayLike) -> NDArray:
        """``eps^-2 sum_j kappa_j (U + phi_j)((x - xi_j)/eps)``."""
        x = np.asarray(x, dtype=complex)
        xs = self.xi()
        out = np.zeros(x.shape)
        for j in range(3):
            y = (x - xs[j]) / self.eps
            near = np.abs(y) < 1
            if not near.any():
                continue
            F = self.inner_fields(j, y[near])
            out[near] += self.kappa[j] * (self.profile.U(np.abs(y[near])) + F["phi1"][0] + F["phi2"][0])
        return out / self.eps**2

    def Psi0(self, x: ArrayLike) -> NDArray:
        """``sum_j kappa_j Gamma((x - xi_j)/eps)``."""
        x = np.asarray(x, dtype=complex)
        xs = self.xi()
        return sum(self.kappa[j] * self.profile.Gamma(np.abs(x - xs[j]) / self.eps) for j in range(3))

    def omega0(self, x: ArrayLike) -> NDArray:
        """``eps^-2 sum_j kappa_j U((x - xi_j)/eps)``."""
        x = np.asarray(x, dtype=complex)
        xs = self.xi()
        return sum(self.kappa[j] * self.profile.U(np.abs(x - xs[j]) / self.eps) for j in range(3)) / self.eps**2

    def Psi_star(self, x: ArrayLike) -> NDArray:
        """``Psi_0 + sum_j kappa_j eta_j psi_j + psi_out``."""
        x = np.asarray(x, dtype=complex)
        xs = self.xi()
        Ks = self.cutoff_radius()
        out = np.zeros(x.shape)
        for j in range(3):
            y = (x - xs[j]) / self.eps
            out += self.kappa[j] * self.profile.Gamma(np.abs(y))
            e, _, _ = eta0(np.abs(x - xs[j]) / Ks)
            act = e > 0
            if act.any():
                F = self.inner_fields(j, y[act])
                out[act] += self.kappa[j] * e[act] * (F["psi1"][0] + F["psi2"][0])
        out += self.psi_out(x)[0]
        return out


@dataclass
class E1Result:
    y: NDArray
    weights: NDArray
    E: NDArray
    sup: float
    mass: float


@dataclass
class E2Result:
    values: NDArray
    sup: float


def assemble_first_approximation(
    cfg: SpiralConfig, profile: Profile, eps: float, t: float,
    xi_tilde: Callable[[float], NDArray] | None = None, cache: ModalCache | None = None,
    check: bool = True,
) -> FirstApproximation:
    """Assemble the first approximation; ``cache`` avoids recomputing the radial solutions.

    Raises
    ------
    RegimeError
        If the cutoff annuli would touch a core (``eps`` too large for ``t``).
    """
    if cache is None:
        cache = ModalCache.build(profile)
    fa = FirstApproximation(cfg=cfg, profile=profile, cache=cache, eps=eps, t=t, xi_tilde=xi_tilde)
    if check:
        fa.check_regime()
    return fa


def residual_sweep(
    cfg: SpiralConfig, profile: Profile, eps: ArrayLike, t: ArrayLike, cache: ModalCache | None = None,
) -> NDArray:
    """Rows ``epsilon, t, j, supE1, massE1, supE2`` over the grid ``eps x t``."""
    cache = ModalCache.build(profile) if cache is None else cache
    rows = []
    for e in np.atleast_1d(eps):
        for s in np.atleast_1d(t):
            fa = assemble_first_approximation(cfg, profile, float(e), float(s), cache=cache)
            e2 = fa.residual_E2().sup
            for j in range(3):
                r = fa.residual_E1(j)
                rows.append([e, s, j, r.sup, r.mass, e2])
    return np.array(rows, dtype=float)


def loglog_slope(x: ArrayLike, y: ArrayLike) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.abs(np.asarray(y, float))), 1)[0])


def kr_consistency(cfg: SpiralConfig, t: float) -> float:
    """Largest mismatch between the spiral velocity and the KR velocity at ``t``."""
    return float(np.max(np.abs(cfg.velocity(t) - kr_velocity(cfg.masses, cfg.position(t)))))
