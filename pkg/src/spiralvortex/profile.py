"""Radial ground state of ``Delta Gamma + Gamma_+^gamma = 0`` with ``{Gamma > 0} = B_1``.

The shooting problem ``u'' + u'/r + u^gamma = 0, u(0) = 1, u'(0) = 0`` is
integrated to its first zero ``r0``; the rescaling
``nu(r) = r0^(2/(gamma-1)) u(r0 r)`` puts the zero at ``r = 1``. Outside the
unit disk ``Gamma(r) = nu'(1) log r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad, solve_ivp

from .radial import RadialFunction, graded_breaks

RTOL = 1e-13
ATOL = 1e-15


def _lane_emden(gamma: float):
    def rhs(r, y):
        return [y[1], -y[1] / r - max(y[0], 0.0) ** gamma]

    return rhs


def _series_start(gamma: float, r: float) -> list[float]:
    # u = 1 - r^2/4 + gamma r^4/64 + O(r^6)
    return [1 - r**2 / 4 + gamma * r**4 / 64, -r / 2 + gamma * r**3 / 16]


@dataclass
class Profile:
    """Rescaled ground state and derived vortex quantities.

    Attributes
    ----------
    gamma : float
        Power of the nonlinearity (``gamma > 18`` in the theory, default 19).
    r0 : float
        First zero of the unscaled shooting solution (the rescaling factor).
    nu : RadialFunction
        ``nu(r)`` on ``[0, 1]``.
    dnu : RadialFunction
        ``nu'(r)`` on ``[0, 1]``, sampled from the ODE state (not differentiated).
    """

    gamma: float
    r0: float
    nu: RadialFunction
    dnu: RadialFunction

    @property
    def nu0(self) -> float:
        return float(self.r0 ** (2 / (self.gamma - 1)))

    @property
    def dnu1(self) -> float:
        """``nu'(1)`` (negative)."""
        return float(self.dnu(1.0))

    @property
    def mass(self) -> float:
        """Circulation ``M = 2 pi |nu'(1)|``."""
        return 2 * np.pi * abs(self.dnu1)

    @property
    def core(self) -> float:
        """Length scale of the concentrated core, ``1/r0``."""
        return 1.0 / self.r0

    def Gamma(self, r: ArrayLike) -> NDArray:
        """Stream profile: ``nu`` inside the unit disk, ``nu'(1) log r`` outside."""
        r = np.asarray(r, dtype=float)
        inside = r < 1
        out = np.empty_like(r)
        out[inside] = self.nu(r[inside])
        out[~inside] = self.dnu1 * np.log(r[~inside])
        return out

    def dGamma(self, r: ArrayLike) -> NDArray:
        r = np.asarray(r, dtype=float)
        inside = r < 1
        out = np.empty_like(r)
        out[inside] = self.dnu(r[inside])
        out[~inside] = self.dnu1 / r[~inside]
        return out

    def d2Gamma(self, r: ArrayLike) -> NDArray:
        """Second derivative from the equation itself."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inside = r < 1
        ri = r[inside]
        with np.errstate(divide="ignore", invalid="ignore"):
            d1 = np.where(ri > 0, self.dnu(ri) / np.where(ri > 0, ri, 1.0), -0.5 * self.nu0**self.gamma)
        out[inside] = -d1 - self.U(ri)
        out[~inside] = -self.dnu1 / r[~inside] ** 2
        return out

    def dGamma_over_r(self, r: ArrayLike) -> NDArray:
        """``Gamma'(r)/r``, finite at the origin."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        small = r < 1e-7
        out[small] = -0.5 * self.nu0**self.gamma
        out[~small] = self.dGamma(r[~small]) / r[~small]
        return out

    def U(self, r: ArrayLike) -> NDArray:
        """Vorticity profile ``Gamma_+^gamma``."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1
        out[inside] = np.maximum(self.nu(r[inside]), 0.0) ** self.gamma
        return out

    def V(self, r: ArrayLike) -> NDArray:
        """Linearization weight ``gamma Gamma_+^(gamma-1)``."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1
        out[inside] = self.gamma * np.maximum(self.nu(r[inside]), 0.0) ** (self.gamma - 1)
        return out

    def dV(self, r: ArrayLike) -> NDArray:
        """Radial derivative of ``V``: ``gamma (gamma-1) Gamma_+^(gamma-2) Gamma'``."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1
        ri = r[inside]
        g = self.gamma
        out[inside] = g * (g - 1) * np.maximum(self.nu(ri), 0.0) ** (g - 2) * self.dnu(ri)
        return out

    def d2V(self, r: ArrayLike) -> NDArray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1
        ri = r[inside]
        g = self.gamma
        nu = np.maximum(self.nu(ri), 0.0)
        d1 = self.dnu(ri)
        d2 = self.d2Gamma(ri)
        out[inside] = g * (g - 1) * ((g - 2) * nu ** (g - 3) * d1**2 + nu ** (g - 2) * d2)
        return out

    def mass_quadrature(self) -> float:
        """``2 pi int_0^1 nu^gamma r dr`` by adaptive quadrature."""
        pts = self.nu.breaks[1:-1]
        val, _ = quad(lambda r: float(self.U(np.array([r]))[0]) * r, 0.0, 1.0, points=pts, limit=400,
                      epsabs=0.0, epsrel=1e-13)
        return 2 * np.pi * val

    def ode_residual(self, r: ArrayLike, h: float | None = None) -> NDArray:
        """Residual ``nu'' + nu'/r + nu^gamma`` from sixth-order central differences of ``nu``.

        The step defaults to a fraction of the local length scale
        ``max(r, core)`` so the stencil resolves the concentrated core.
        """
        r = np.asarray(r, dtype=float)
        if h is None:
            h = 2e-3 * np.minimum(np.maximum(r, self.core), 1 - r)
        c2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
        c1 = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])
        offs = np.arange(-3, 4)
        samples = np.stack([self.nu(r + k * h) for k in offs])
        d2 = np.tensordot(c2, samples, axes=1) / h**2
        d1 = np.tensordot(c1, samples, axes=1) / h
        return d2 + d1 / r + np.maximum(self.nu(r), 0.0) ** self.gamma


def shoot(gamma: float, r_start: float = 1e-8) -> tuple[float, float]:
    """First zero ``r0`` of the shooting solution and ``u'(r0)``."""

    def hit(r, y):
        return y[0]

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(
        _lane_emden(gamma), [r_start, 1e9], _series_start(gamma, r_start),
        method="DOP853", rtol=RTOL, atol=ATOL, events=hit,
    )
    if not sol.t_events[0].size:
        raise RuntimeError("shooting solution has no zero")
    r0 = float(sol.t_events[0][0])
    du = float(sol.y_events[0][0][1])
    return r0, du


def solve_ground_state(gamma: float = 19.0, n: int = 40) -> Profile:
    """Solve the shooting problem and return the rescaled profile.

    Raises
    ------
    ValueError
        If ``gamma <= 1``.
    """
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    r0, _ = shoot(gamma)
    breaks = graded_breaks(1.0 / r0)
    r = RadialFunction.nodes(breaks, n)
    rho = np.sort(r.ravel()) * r0
    r_start = min(1e-8, 0.5 * rho[0])
    sol = solve_ivp(
        _lane_emden(gamma), [r_start, rho[-1]], _series_start(gamma, r_start),
        method="DOP853", rtol=RTOL, atol=ATOL, t_eval=rho,
    )
    a = r0 ** (2 / (gamma - 1))
    order = np.argsort(r.ravel())
    u = np.empty(r.size)
    du = np.empty(r.size)
    u[order] = sol.y[0]
    du[order] = sol.y[1]
    nu = RadialFunction.from_values(breaks, (a * u).reshape(r.shape))
    dnu = RadialFunction.from_values(breaks, (a * r0 * du).reshape(r.shape))
    return Profile(gamma=float(gamma), r0=r0, nu=nu, dnu=dnu)


def profile_table(p: Profile, r: ArrayLike) -> NDArray:
    """Columns ``r, Gamma, dGamma, U`` for CSV output."""
    r = np.asarray(r, dtype=float)
    return np.column_stack([r, p.Gamma(r), p.dGamma(r), p.U(r)])
