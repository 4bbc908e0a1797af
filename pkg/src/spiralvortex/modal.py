"""Modal theory of ``Delta psi + gamma Gamma_+^(gamma-1) psi = f`` around one vortex.

For a right-hand side ``f = r^k q(r) e^{i k theta}`` supported in the unit disk,
each Fourier mode reduces to

    psi'' + psi'/r - k^2 psi / r^2 + V psi = f,     V = gamma Gamma_+^(gamma-1),

solved by variation of parameters against the regular homogeneous solution
``zeta_k ~ r^|k|``. Writing ``zeta_k = r^k w`` and ``psi = r^k P`` removes the
singular powers at the origin:

    |k| = 1 :  psi = zeta int_0^r  I(s) / (s zeta^2) ds
    |k| >= 2:  psi = -zeta int_r^oo I(s) / (s zeta^2) ds,    I(s) = int_0^s zeta f tau dtau.

The inner integral is constant for ``s >= 1``; the outer one then has a closed
form. The integrals are carried as extra states of the radial ODE so all
quantities come from one adaptive integration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, eigsh

from .profile import Profile
from .radial import RadialFunction

RTOL = 1e-13
ATOL = 1e-300


def _nodes(profile: Profile, n: int) -> tuple[NDArray, NDArray]:
    breaks = profile.nu.breaks
    return breaks, RadialFunction.nodes(breaks, n)


@dataclass
class HomogeneousSolution:
    """``zeta_k = r^k w(r)`` with ``w(0) = 1``; ``zeta_k = a r^k + b r^-k`` for ``r >= 1``."""

    k: int
    w: RadialFunction
    dw: RadialFunction
    a: float
    b: float

    def __call__(self, r: ArrayLike) -> NDArray:
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r < 1
        out[inside] = r[inside] ** self.k * self.w(r[inside])
        ro = r[~inside]
        out[~inside] = self.a * ro**self.k + self.b * ro ** (-self.k)
        return out

    def deriv(self, r: ArrayLike) -> NDArray:
        r = np.asarray(r, dtype=float)
        k = self.k
        out = np.empty_like(r)
        inside = r < 1
        ri = r[inside]
        out[inside] = k * ri ** (k - 1) * self.w(ri) + ri**k * self.dw(ri)
        ro = r[~inside]
        out[~inside] = k * (self.a * ro ** (k - 1) - self.b * ro ** (-k - 1))
        return out


def homogeneous_solution(profile: Profile, k: int, n: int = 40) -> HomogeneousSolution:
    """Regular solution of the homogeneous mode-``k`` equation normalized as ``r^|k|`` at 0."""
    k = abs(int(k))
    breaks, nodes = _nodes(profile, n)
    V0 = float(profile.V(np.array([0.0]))[0])

    def rhs(r, y):
        V = profile.V(np.array([r]))[0]
        return [y[1], -(2 * k + 1) * y[1] / r - V * y[0]]

    rs = 1e-6 * profile.core
    y0 = [1 - V0 * rs**2 / (4 * (k + 1)), -V0 * rs / (2 * (k + 1))]
    pts = np.sort(nodes.ravel())
    sol = solve_ivp(rhs, [rs, 1.0], y0, method="DOP853", rtol=RTOL, atol=ATOL,
                    t_eval=np.append(pts, 1.0))
    order = np.argsort(nodes.ravel())
    w = np.empty(nodes.size)
    dw = np.empty(nodes.size)
    w[order] = sol.y[0][:-1]
    dw[order] = sol.y[1][:-1]
    w1, dw1 = sol.y[0][-1], sol.y[1][-1]
    z1, dz1 = w1, k * w1 + dw1
    if k == 0:
        a, b = z1, dz1  # zeta = a + b log r outside
    else:
        a, b = 0.5 * (z1 + dz1 / k), 0.5 * (z1 - dz1 / k)
    return HomogeneousSolution(
        k=k,
        w=RadialFunction.from_values(breaks, w.reshape(nodes.shape)),
        dw=RadialFunction.from_values(breaks, dw.reshape(nodes.shape)),
        a=float(a),
        b=float(b),
    )


@dataclass
class ModeSolution:
    """Solution ``psi = r^k P(r)`` of one radial mode.

    ``P`` and ``P'`` are stored inside the unit disk; outside, ``psi`` is the
    exact harmonic continuation.
    """

    k: int
    P_in: RadialFunction
    dP_in: RadialFunction
    q: Callable[[NDArray], NDArray]
    V: Callable[[NDArray], NDArray]
    a: float
    b: float
    J1: float
    Iinf: float

    def _ext(self, r: NDArray) -> tuple[NDArray, NDArray]:
        # exterior P and P'
        k, a, b = self.k, self.a, self.b
        if k >= 2:
            c = -self.Iinf / (2 * k * a)
            return c * r ** (-2 * k), -2 * k * c * r ** (-2 * k - 1)
        u = self.J1 + self.Iinf * (r**2 - 1) / (2 * (a + b) * (a * r**2 + b))
        du = self.Iinf * r / ((a * r**2 + b) ** 2)
        zeta_over_r = a + b / r**2
        dzeta_over_r = -2 * b / r**3
        return zeta_over_r * u, dzeta_over_r * u + zeta_over_r * du

    def P(self, r: ArrayLike) -> NDArray:
        """``psi / r^k`` (finite at the origin)."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r < 1
        out[inside] = self.P_in(r[inside])
        out[~inside] = self._ext(r[~inside])[0]
        return out

    def dP(self, r: ArrayLike) -> NDArray:
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r < 1
        out[inside] = self.dP_in(r[inside])
        out[~inside] = self._ext(r[~inside])[1]
        return out

    def dP_over_r(self, r: ArrayLike) -> NDArray:
        """``P'(r)/r``; ``P`` is even so this is finite at 0."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        small = r < 1e-7
        out[~small] = self.dP(r[~small]) / r[~small]
        out[small] = self._d2P0()
        return out

    def _d2P0(self) -> float:
        # at r = 0: P'' + (2k+1) P''(0) + V P = q  ->  P''(0) = (q - V P)/(2k+2)
        z = np.zeros(1)
        return float((self.q(z)[0] - self.V(z)[0] * self.P_in(z)[0]) / (2 * self.k + 2))

    def d2P(self, r: ArrayLike) -> NDArray:
        """``P''`` from the mode equation ``P'' + (2k+1) P'/r + V P = q``."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r < 1
        ri = r[inside]
        qi = self.q(ri) if ri.size else ri
        small = ri < 1e-7
        val = np.empty_like(ri)
        val[small] = self._d2P0()
        rr = ri[~small]
        val[~small] = qi[~small] - (2 * self.k + 1) * self.dP_in(rr) / rr - self.V(rr) * self.P_in(rr)
        out[inside] = val
        ro = r[~inside]
        if ro.size:
            h = 1e-5 * ro
            out[~inside] = (self._ext(ro + h)[1] - self._ext(ro - h)[1]) / (2 * h)
        return out

    def psi(self, r: ArrayLike) -> NDArray:
        r = np.asarray(r, dtype=float)
        return r**self.k * self.P(r)

    def dpsi(self, r: ArrayLike) -> NDArray:
        r = np.asarray(r, dtype=float)
        k = self.k
        return k * r ** (k - 1) * self.P(r) + r**k * self.dP(r)

    def residual(self, r: ArrayLike) -> NDArray:
        """Relative residual of the mode equation using Chebyshev differentiation of ``P'``.

        Normalized pointwise-free by the largest term magnitude over the sample.
        """
        r = np.asarray(r, dtype=float)
        d2 = self.dP_in.deriv()(r)
        t1 = (2 * self.k + 1) * self.dP_in(r) / r
        t2 = self.V(r) * self.P_in(r)
        q = self.q(r)
        res = d2 + t1 + t2 - q
        scale = max(np.max(np.abs(d2)), np.max(np.abs(t1)), np.max(np.abs(t2)), np.max(np.abs(q)))
        return res / scale


def solve_mode(
    profile: Profile, k: int, q: Callable[[NDArray], NDArray] | None = None,
    g: Callable[[NDArray], NDArray] | None = None, n: int = 40,
) -> ModeSolution:
    """Solve one mode by variation of parameters.

    Exactly one of ``q`` and ``g`` is given. With ``g`` the right-hand side is
    ``V g`` (so ``q = V g / r^k``); with ``q`` it is ``r^k q``. Both must vanish
    outside the unit disk.

    Raises
    ------
    ValueError
        For mode 0, whose right-hand sides the construction excludes.
    """
    k = abs(int(k))
    if k == 0:
        raise ValueError("mode 0 right-hand sides are not admissible")
    if (q is None) == (g is None):
        raise ValueError("give exactly one of q or g")
    if g is not None:
        gg = g

        def q(r):  # noqa: F811
            r = np.asarray(r, dtype=float)
            out = np.zeros_like(r)
            pos = r > 0
            out[pos] = profile.V(r[pos]) * gg(r[pos]) / r[pos] ** k
            return out

    hom = homogeneous_solution(profile, k, n)
    breaks, nodes = _nodes(profile, n)

    def rhs(r, y):
        w, dw, It, J = y
        rr = np.array([r])
        V = profile.V(rr)[0]
        qq = q(rr)[0]
        return [dw, -(2 * k + 1) * dw / r - V * w, (w * qq - (2 * k + 2) * It) / r, r * It / w**2]

    rs = 1e-6 * profile.core
    V0 = float(profile.V(np.zeros(1))[0])
    q0 = float(q(np.array([rs]))[0])
    w0 = 1 - V0 * rs**2 / (4 * (k + 1))
    I0 = w0 * q0 / (2 * k + 2)
    y0 = [w0, -V0 * rs / (2 * (k + 1)), I0, 0.5 * rs**2 * I0]
    pts = np.sort(nodes.ravel())
    sol = solve_ivp(rhs, [rs, 1.0], y0, method="DOP853", rtol=RTOL, atol=1e-30,
                    t_eval=np.append(pts, 1.0))
    w, dw, It, J = sol.y[:, :-1]
    J1, Iinf = sol.y[3, -1], sol.y[2, -1]
    a, b = hom.a, hom.b
    if k >= 2:
        Cinf = Iinf / (2 * k * a * (a + b))
        P = -w * (J1 - J + Cinf)
        dP = -dw * (J1 - J + Cinf) + pts * It / w
    else:
        P = w * J
        dP = dw * J + pts * It / w
    order = np.argsort(nodes.ravel())
    Pn = np.empty(nodes.size)
    dPn = np.empty(nodes.size)
    Pn[order] = P
    dPn[order] = dP
    return ModeSolution(
        k=k,
        P_in=RadialFunction.from_values(breaks, Pn.reshape(nodes.shape)),
        dP_in=RadialFunction.from_values(breaks, dPn.reshape(nodes.shape)),
        q=q, V=profile.V, a=a, b=b, J1=float(J1), Iinf=float(Iinf),
    )


def rho_l(profile: Profile, l: int, n: int = 40) -> ModeSolution:
    """``rho_l``: the mode-``l`` solution with ``g = r^l`` (right-hand side ``V r^l``)."""
    return solve_mode(profile, l, q=lambda r: profile.V(np.asarray(r, dtype=float)), n=n)


def far_field_exponent(fun: Callable[[NDArray], NDArray], r1: float = 5.0, r2: float = 50.0,
                       npts: int = 50) -> float:
    """Log-log slope of ``|fun|`` on ``[r1, r2]``."""
    r = np.geomspace(r1, r2, npts)
    return float(np.polyfit(np.log(r), np.log(np.abs(fun(r))), 1)[0])


@dataclass
class WeightedSpectrum:
    """Lowest eigenvalues of ``-Delta e = mu V e`` per angular mode."""

    modes: list[int]
    eigenvalues: dict[int, NDArray]
    r: NDArray
    eigenvectors: dict[int, NDArray]

    def next_above_cluster(self) -> float:
        """Smallest eigenvalue excluding ``mu = 0`` (mode 0) and ``mu = 1`` (modes +-1).

        ``nan`` when no eigenvalue beyond those was computed.
        """
        vals = []
        for k, ev in self.eigenvalues.items():
            skip = 1 if k in (0, 1) else 0
            vals.extend(ev[skip:])
        return float(min(vals)) if vals else float("nan")


def weighted_spectrum(
    profile: Profile, modes: ArrayLike = (0, 1, 2, 3), nev: int = 3, N: int = 4000,
    r_min: float | None = None, sigma: float = 1.0,
) -> WeightedSpectrum:
    """Second-order finite differences in ``s = log r`` on ``[log r_min, 0]``.

    In ``s`` the mode-``k`` problem is ``-(e_ss - k^2 e) = mu r^2 V e``. At
    ``r = 1`` the exterior harmonic continuation gives the Robin condition
    ``e_s = -k e`` (``e_s = 0`` for ``k = 0``, i.e. bounded). At ``r_min`` the
    regular solution is imposed: ``e = 0`` for ``k >= 1``, ``e_s = 0`` for ``k = 0``.
    The shifted pencil ``(A + sigma W, W)`` is inverted so the smallest ``mu``
    are the largest eigenvalues of a symmetric operator.
    """
    if r_min is None:
        r_min = 1e-4 * profile.core
    s = np.linspace(np.log(r_min), 0.0, N + 1)
    h = s[1] - s[0]
    r = np.exp(s)
    Wfull = r**2 * profile.V(r)
    eigenvalues, eigenvectors = {}, {}
    for k in modes:
        k = abs(int(k))
        diag = np.full(N + 1, 2 / h**2 + k**2)
        off = np.full(N, -1 / h**2)
        W = Wfull.copy()
        # Robin/Neumann at r = 1 (ghost elimination, row halved for symmetry)
        diag[N] = (1 + h * k) / h**2 + k**2 / 2
        W[N] *= 0.5
        if k == 0:
            diag[0] = 1 / h**2
            W[0] *= 0.5
            lo = 0
        else:
            lo = 1  # Dirichlet at r_min
        d = diag[lo:]
        o = off[lo:]
        Wk = W[lo:]
        sq = np.sqrt(Wk)
        B = np.zeros((3, d.size))
        B[0, 1:] = o
        B[1] = d + sigma * Wk
        B[2, :-1] = o

        def matvec(y, B=B, sq=sq):
            return sq * solve_banded((1, 1), B, sq * np.ravel(y))

        op = LinearOperator((d.size, d.size), matvec=matvec, dtype=float)
        lam, Y = eigsh(op, k=nev, which="LA", tol=1e-14)
        order = np.argsort(-lam)
        lam, Y = lam[order], Y[:, order]
        mu = 1 / lam - sigma
        vecs = np.zeros((N + 1, nev))
        for i in range(nev):
            e = solve_banded((1, 1), B, sq * Y[:, i])
            vecs[lo:, i] = e / np.max(np.abs(e))
        eigenvalues[k] = mu
        eigenvectors[k] = vecs
    return WeightedSpectrum(modes=[abs(int(k)) for k in modes], eigenvalues=eigenvalues,
                            r=r, eigenvectors=eigenvectors)
