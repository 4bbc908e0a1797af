"""Three point vortices on self-similar expanding spirals.

Positions are stored as complex numbers ``z = x + i y``. The Kirchhoff-Routh
system reads ``conj(dz_j/dt) = sum_{l != j} m_l / (2 pi i (z_j - z_l))`` and the
self-similar solution is ``z_j(t) = z_j(0) (1 + t/tau)^(1/2 + i Lambda tau)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .integrate import IntegratorStats, dopri54

PAIRS = ((0, 1), (1, 2), (0, 2))  # (1,2), (2,3), (1,3)


class ConfigurationError(ValueError):
    """Raised when masses or positions violate the spiral constraints."""


def pair_lengths(z: ArrayLike) -> NDArray:
    """Return ``(L12, L23, L13)`` for positions ``z`` of shape ``(..., 3)``."""
    z = np.asarray(z)
    return np.stack([np.abs(z[..., i] - z[..., j]) for i, j in PAIRS], axis=-1)


def signed_area(z: ArrayLike) -> float:
    """Signed area of the triangle 1 -> 2 -> 3 (positive when counter-clockwise)."""
    z = np.asarray(z, dtype=complex)
    return 0.5 * float(np.imag(np.conj(z[1] - z[0]) * (z[2] - z[0])))


@dataclass(frozen=True)
class ConstraintReport:
    """Residuals of the admissibility conditions for a mass/position triple."""

    harmonic_mean: float
    angular_momentum: float
    center: float
    mass_signs: bool
    non_equilateral: bool
    ordering: bool
    positive_orientation: bool

    def max_residual(self) -> float:
        return max(abs(self.harmonic_mean), abs(self.angular_momentum), abs(self.center))

    def ok(self, tol: float = 1e-12) -> bool:
        return (
            self.max_residual() <= tol
            and self.mass_signs
            and self.non_equilateral
            and self.ordering
            and self.positive_orientation
        )


def check_constraints(masses: ArrayLike, z0: ArrayLike) -> ConstraintReport:
    """Evaluate the mass, harmonic-mean, angular-momentum and shape conditions.

    Residuals are scaled to be dimensionless: the harmonic-mean residual by
    ``max|m|^2``, the angular-momentum residual by ``max|m|^2 max L^2`` and the
    centre of vorticity by ``max|m| max L``.
    """
    m = np.asarray(masses, dtype=float)
    z = np.asarray(z0, dtype=complex)
    L12, L23, L13 = pair_lengths(z)
    mmax = np.max(np.abs(m))
    lmax = max(L12, L23, L13)
    hm = (m[0] * m[1] + m[1] * m[2] + m[0] * m[2]) / mmax**2
    am = (m[0] * m[1] * L12**2 + m[1] * m[2] * L23**2 + m[0] * m[2] * L13**2) / (
        mmax**2 * lmax**2
    )
    center = abs(np.sum(m * z)) / (mmax * lmax)
    return ConstraintReport(
        harmonic_mean=float(hm),
        angular_momentum=float(am),
        center=float(center),
        mass_signs=bool(m[0] > 0 and m[1] > 0 and m[2] < 0 and m.sum() > 0),
        non_equilateral=bool(abs(L23 - L13) > 1e-12 * lmax),
        ordering=bool(L23 > L12 > L13),
        positive_orientation=signed_area(z) > 0,
    )


CONSTRAINTS = ("mass_signs", "harmonic_mean", "angular_momentum", "non_equilateral", "ordering")


def length_constraints(masses: ArrayLike, L0: ArrayLike, tol: float = 1e-12) -> dict[str, tuple[float, bool]]:
    """Named residuals and verdicts of the admissibility conditions for masses and lengths ``(L12, L23, L13)``.

    Signed residuals use the same scalings as :func:`check_constraints`; the
    sign and shape conditions report their margin (positive when satisfied).

    Raises
    ------
    ValueError
        On non-finite or non-positive input lengths.
    """
    m = np.asarray(masses, dtype=float)
    L = np.asarray(L0, dtype=float)
    if m.shape != (3,) or L.shape != (3,):
        raise ValueError("need three masses and three lengths")
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(L))):
        raise ValueError("non-finite input")
    if np.any(L <= 0):
        raise ValueError("lengths must be positive")
    L12, L23, L13 = L
    mmax = np.max(np.abs(m))
    hm = (m[0] * m[1] + m[1] * m[2] + m[0] * m[2]) / mmax**2
    am = (m[0] * m[1] * L12**2 + m[1] * m[2] * L23**2 + m[0] * m[2] * L13**2) / (mmax**2 * L.max() ** 2)
    signs = float(min(m[0], m[1], -m[2], m.sum()))
    equi = float(abs(L23 - L13) / L.max())
    order = float(min(L23 - L12, L12 - L13) / L.max())
    return {
        "mass_signs": (signs, signs > 0),
        "harmonic_mean": (float(hm), abs(hm) <= tol),
        "angular_momentum": (float(am), abs(am) <= tol),
        "non_equilateral": (equi, equi > tol),
        "ordering": (order, order > 0),
    }


def spiral_constants(masses: ArrayLike, z0: ArrayLike) -> tuple[float, float]:
    """Closed-form ``(tau, Lambda)`` from the masses and initial lengths."""
    m = np.asarray(masses, dtype=float)
    L12, L23, L13 = pair_lengths(z0)
    area = signed_area(z0)
    inv_tau = 2.0 / np.pi * m[2] * area / L12**2 * (1.0 / L23**2 - 1.0 / L13**2)
    Pi = (m[0] / m[1]) * (L13**2 / L23**2)
    lam = ((m[0] + m[1]) ** 3 + m[0] ** 3 * (1 + 1 / Pi) + m[1] ** 3 * (1 + Pi)) / (
        4 * np.pi * (m[0] + m[1]) ** 2 * L12**2
    )
    return float(1.0 / inv_tau), float(lam)


def kr_velocity(masses: ArrayLike, z: NDArray) -> NDArray:
    """Kirchhoff-Routh velocities ``dz_j/dt`` for complex positions ``z``."""
    m = np.asarray(masses, dtype=float)
    d = z[:, None] - z[None, :]
    np.fill_diagonal(d, np.inf)
    return 1j / (2 * np.pi) * np.sum(m[None, :] / np.conj(d), axis=1)


@dataclass(frozen=True)
class SpiralConfig:
    """An admissible three-vortex configuration and its spiral constants.

    Attributes
    ----------
    masses : ndarray, shape (3,)
    z0 : ndarray of complex, shape (3,)
        Initial positions with centre of vorticity at the origin.
    tau, Lam : float
        Expansion time scale and rotation rate.
    """

    masses: NDArray
    z0: NDArray
    tau: float
    Lam: float

    @property
    def L0(self) -> NDArray:
        """Initial lengths ``(L12, L23, L13)``."""
        return pair_lengths(self.z0)

    def scale(self, t: ArrayLike) -> NDArray:
        """Length scale factor ``(1 + t/tau)^(1/2)``."""
        return np.sqrt(1.0 + np.asarray(t, dtype=float) / self.tau)

    def position(self, t: ArrayLike) -> NDArray:
        """Exact spiral positions, shape ``(len(t), 3)`` (or ``(3,)`` for scalar t)."""
        t = np.asarray(t, dtype=float)
        expo = 0.5 + 1j * self.Lam * self.tau
        f = np.exp(expo * np.log1p(t / self.tau))
        return f[..., None] * self.z0

    def velocity(self, t: ArrayLike) -> NDArray:
        """Exact spiral velocities ``dz/dt``."""
        t = np.asarray(t, dtype=float)
        expo = 0.5 + 1j * self.Lam * self.tau
        f = expo / self.tau * np.exp((expo - 1) * np.log1p(t / self.tau))
        return f[..., None] * self.z0

    def lengths(self, t: ArrayLike) -> NDArray:
        """Pair lengths ``(L12, L23, L13)`` at time(s) ``t``."""
        return self.scale(t)[..., None] * self.L0

    def T0(self) -> float:
        """Smallest time at which every pair length is at least twice the largest initial length."""
        L = self.L0
        return float(self.tau * (4.0 * L.max() ** 2 / L.min() ** 2 - 1.0))

    def cutoff_K(self) -> float:
        """Cutoff radius constant so that every cutoff annulus avoids the other cores."""
        return float(self.L0[2] / 4.0)


def synthesize_config(
    masses: ArrayLike, L13: float = 1.0, L12: float | None = None
) -> SpiralConfig:
    """Build an admissible configuration from masses and a length scale.

    The angular-momentum condition fixes one relation between the lengths. By
    default the triangle has a right angle at vertex 1, which gives
    ``L12^2 = -(m2/m3) L13^2``. An explicit ``L12`` may be supplied instead;
    ``L23`` then follows from the angular-momentum condition.

    Raises
    ------
    ConfigurationError
        If the masses or resulting lengths are inadmissible.
    """
    m = np.asarray(masses, dtype=float)
    if m.shape != (3,):
        raise ConfigurationError("masses must have three entries")
    if not (m[0] > 0 and m[1] > 0 and m[2] < 0 and m.sum() > 0):
        raise ConfigurationError("require m1, m2 > 0, m3 < 0 and m1 + m2 + m3 > 0")
    hm = m[0] * m[1] + m[1] * m[2] + m[0] * m[2]
    if abs(hm) > 1e-12 * np.max(np.abs(m)) ** 2:
        raise ConfigurationError(f"harmonic-mean condition violated (residual {hm:.3e})")
    if L13 <= 0:
        raise ConfigurationError("L13 must be positive")
    if L12 is None:
        L12 = L13 * np.sqrt(-m[1] / m[2])
    L23sq = -(m[0] / m[2]) * L12**2 - (m[0] / m[1]) * L13**2
    if L23sq <= 0:
        raise ConfigurationError("angular-momentum condition has no real L23")
    L23 = np.sqrt(L23sq)
    if not (L23 > L12 > L13):
        raise ConfigurationError(f"ordering L23 > L12 > L13 violated: {L23}, {L12}, {L13}")
    cos_a = (L12**2 + L13**2 - L23**2) / (2 * L12 * L13)
    if not -1 < cos_a < 1:
        raise ConfigurationError("lengths violate the triangle inequality")
    alpha = np.arccos(cos_a)
    z = np.array([0.0, L12 * np.exp(-1j * alpha), L13], dtype=complex)
    z -= np.sum(m * z) / m.sum()
    rep = check_constraints(m, z)
    if not rep.ok(1e-10):
        raise ConfigurationError(f"synthesized configuration inadmissible: {rep}")
    tau, lam = spiral_constants(m, z)
    if not (tau > 0 and lam > 0):
        raise ConfigurationError("spiral constants must be positive")
    return SpiralConfig(masses=m, z0=z, tau=tau, Lam=lam)


def config_from_positions(masses: ArrayLike, z0: ArrayLike, tol: float = 1e-10) -> SpiralConfig:
    """Validate explicit initial positions and attach the spiral constants."""
    m = np.asarray(masses, dtype=float)
    z = np.asarray(z0, dtype=complex)
    rep = check_constraints(m, z)
    if not rep.ok(tol):
        raise ConfigurationError(f"inadmissible configuration: {rep}")
    tau, lam = spiral_constants(m, z)
    return SpiralConfig(masses=m, z0=z, tau=tau, Lam=lam)


@dataclass
class Trajectory:
    """Sampled point-vortex trajectory."""

    t: NDArray
    z: NDArray  # complex, shape (nt, 3)
    stats: IntegratorStats

    def lengths(self) -> NDArray:
        return pair_lengths(self.z)


def integrate_kr(
    masses: ArrayLike, z0: ArrayLike, t_out: ArrayLike, tol: float = 1e-10
) -> Trajectory:
    """Integrate the Kirchhoff-Routh system with the embedded 5(4) stepper."""
    m = np.asarray(masses, dtype=float)
    z0 = np.asarray(z0, dtype=complex)
    t_out = np.asarray(t_out, dtype=float)
    Z, stats = dopri54(lambda t, z: kr_velocity(m, z), z0, t_out, tol=tol)
    return Trajectory(t=t_out, z=Z, stats=stats)


def growth_exponent(t: ArrayLike, L: ArrayLike) -> float:
    """Least-squares slope of ``log L`` against ``log t`` (pass ``1 + t/tau`` for the self-similar clock)."""
    return float(np.polyfit(np.log(np.asarray(t)), np.log(np.asarray(L)), 1)[0])
