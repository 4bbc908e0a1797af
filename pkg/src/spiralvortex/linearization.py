"""Linearization of the Kirchhoff-Routh system around the self-similar spiral.

A perturbation ``z_j = z*_j + zeta_j`` satisfies, to first order,

    dzeta_j/dt = 1/(2 pi i) sum_{i != j} m_i (z*_j - z*_i)^2 / |z*_j - z*_i|^4 conj(zeta_j - zeta_i).

Along the spiral the kernel is ``e^{2i phi_ji(t)} / (L_ji(0)^2 (1 + t/tau))`` with
``phi_ji = Lambda tau log(1 + t/tau) + theta_ji``. In real variables
``(zR_1, zI_1, zR_2, zI_2, zR_3, zI_3)`` this is ``dzeta/dt = A zeta / (2 pi (1 + t/tau))``
with ``A`` linear in ``S = sin(2 phi)/L^2`` and ``C = cos(2 phi)/L^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import expm

from .integrate import dopri54
from .pointvortex import SpiralConfig, integrate_kr


def _angles(cfg: SpiralConfig) -> tuple[NDArray, NDArray]:
    d = cfg.z0[:, None] - cfg.z0[None, :]
    L = np.abs(d)
    # theta_ji = theta_ij + pi leaves 2 theta unchanged; mirror so S and C are exactly symmetric
    theta = np.triu(np.angle(d))
    return L, theta + theta.T


def phase(cfg: SpiralConfig, t: float) -> float:
    """``Lambda tau log(1 + t/tau)``."""
    return float(cfg.Lam * cfg.tau * np.log1p(t / cfg.tau))


def trig_coefficients(cfg: SpiralConfig, t: float) -> tuple[NDArray, NDArray]:
    """Symmetric 3x3 arrays ``S_ji(t)``, ``C_ji(t)`` (zero diagonal)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    L, theta = _angles(cfg)
    arg = 2 * (phase(cfg, t) + theta)
    off = ~np.eye(3, dtype=bool)
    S = np.zeros((3, 3))
    C = np.zeros((3, 3))
    S[off] = np.sin(arg[off]) / L[off] ** 2
    C[off] = np.cos(arg[off]) / L[off] ** 2
    return S, C


def assemble(masses: ArrayLike, S: NDArray, C: NDArray) -> NDArray:
    """6x6 matrix of the component equations

    ``dR_j = sum_i m_i ((R_j - R_i) S_ji - (I_j - I_i) C_ji)``,
    ``dI_j = sum_i m_i (-(R_j - R_i) C_ji - (I_j - I_i) S_ji)``.
    """
    m = np.asarray(masses, dtype=float)
    A = np.zeros((6, 6))
    for j in range(3):
        R, I = 2 * j, 2 * j + 1
        for i in range(3):
            if i == j:
                continue
            Ri, Ii = 2 * i, 2 * i + 1
            s, c = m[i] * S[j, i], m[i] * C[j, i]
            A[R, R] += s
            A[R, Ri] -= s
            A[R, I] -= c
            A[R, Ii] += c
            A[I, R] -= c
            A[I, Ri] += c
            A[I, I] -= s
            A[I, Ii] += s
    return A


def matrix_A(cfg: SpiralConfig, t: float) -> NDArray:
    """``A(t)`` such that ``dzeta/dt = A zeta / (2 pi (1 + t/tau))``."""
    S, C = trig_coefficients(cfg, t)
    return assemble(cfg.masses, S, C)


def matrix_B(cfg: SpiralConfig, t: float) -> NDArray:
    """Closed-form ``B(t) = -int_0^t A(s) / (2 pi (1 + s/tau)) ds``.

    Uses ``int_0^t sin(2 phi)/(2 pi (1+s/tau)) ds = (cos 2theta - cos 2phi(t)) / (4 pi Lambda)``
    and ``int_0^t cos(2 phi)/(2 pi (1+s/tau)) ds = (sin 2phi(t) - sin 2theta) / (4 pi Lambda)``.
    """
    L, theta = _angles(cfg)
    ph = phase(cfg, t)
    off = ~np.eye(3, dtype=bool)
    IS = np.zeros((3, 3))
    IC = np.zeros((3, 3))
    k = 4 * np.pi * cfg.Lam
    IS[off] = (np.cos(2 * theta[off]) - np.cos(2 * (ph + theta[off]))) / (k * L[off] ** 2)
    IC[off] = (np.sin(2 * (ph + theta[off])) - np.sin(2 * theta[off])) / (k * L[off] ** 2)
    return -assemble(cfg.masses, IS, IC)


def exp_pm_B(cfg: SpiralConfig, t: float) -> tuple[NDArray, NDArray]:
    """``(e^{B(t)}, e^{-B(t)})``."""
    B = matrix_B(cfg, t)
    return expm(B), expm(-B)


def entry_bound(cfg: SpiralConfig) -> float:
    """Uniform bound ``(1/6) exp(24 L12(0)^2 / L13(0)^2)`` on the entries of ``e^{+-B}``."""
    L12, _, L13 = cfg.L0
    return float(np.exp(24 * L12**2 / L13**2) / 6)


def to_complex(zeta: ArrayLike) -> NDArray:
    zeta = np.asarray(zeta, dtype=float)
    return zeta[..., 0::2] + 1j * zeta[..., 1::2]


def to_real(z: ArrayLike) -> NDArray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (6,))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


@dataclass
class LinearizedPropagation:
    """Perturbation at the requested times by both routes."""

    t: NDArray
    route_a: NDArray  # e^{-B(t)} zeta0
    route_b: NDArray  # direct integration

    @property
    def discrepancy(self) -> NDArray:
        return np.max(np.abs(self.route_a - self.route_b), axis=-1)


def propagate_linearized(
    cfg: SpiralConfig, zeta0: ArrayLike, t: ArrayLike, tol: float = 1e-12
) -> LinearizedPropagation:
    """Propagate a real 6-vector perturbation.

    Route A is the closed form ``e^{-B(t)} zeta0``; route B integrates the
    time-dependent linear system directly and is the reference, since ``A(t)``
    does not commute with its integral in general.
    """
    zeta0 = np.asarray(zeta0, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ts = np.concatenate([[0.0], t]) if t[0] != 0 else t

    def rhs(s, z):
        return matrix_A(cfg, s) @ z / (2 * np.pi * (1 + s / cfg.tau))

    Zb, _ = dopri54(rhs, zeta0, ts, tol=tol)
    if t[0] != 0:
        Zb = Zb[1:]
    Za = np.array([expm(-matrix_B(cfg, s)) @ zeta0 for s in t])
    return LinearizedPropagation(t=t, route_a=Za, route_b=Zb)


def nonlinear_difference(
    cfg: SpiralConfig, zeta0: ArrayLike, delta: float, t: ArrayLike, tol: float = 1e-13
) -> NDArray:
    """``(z(t; z*(0) + delta zeta0) - z*(t)) / delta`` from the full point-vortex flow."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    ts = np.concatenate([[0.0], t])
    z0p = cfg.z0 + delta * to_complex(zeta0)
    zp = integrate_kr(cfg.masses, z0p, ts, tol=tol).z[1:]
    zs = integrate_kr(cfg.masses, cfg.z0, ts, tol=tol).z[1:]
    return to_real((zp - zs) / delta)


def linearization_table(cfg: SpiralConfig, t: ArrayLike) -> NDArray:
    """Columns ``t, normA, normB, maxExpEntry, bound`` (Frobenius norms)."""
    rows = []
    bound = entry_bound(cfg)
    for s in np.asarray(t, dtype=float):
        A = matrix_A(cfg, s)
        B = matrix_B(cfg, s)
        Ep, Em = expm(B), expm(-B)
        rows.append([s, np.linalg.norm(A), np.linalg.norm(B),
                     max(np.max(np.abs(Ep)), np.max(np.abs(Em))), bound])
    return np.array(rows)
