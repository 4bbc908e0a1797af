"""Pseudo-spectral solver for the vorticity form of the 2D Euler equations.

``d_t omega + u . grad omega = 0`` with ``u = grad_perp psi``, ``-Delta psi = omega``
on a periodic box ``[-box/2, box/2)^2``. Velocity convention: ``u = (psi_y, -psi_x)``,
so a positive vortex turns counter-clockwise as in the point-vortex module.

The nonlinear term is taken in conservative form ``div(u omega)`` with the 2/3
rule, so the mean of ``omega`` (the circulation) is untouched by construction.
The mean cannot enter the periodic inversion; the uniform background
``-Gamma/box^2`` it leaves behind induces a rigid rotation about the vorticity
centroid, which is cancelled by adding the opposite rotation
``(Gamma / (2 box^2)) (x - x_c)_perp`` to the velocity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np
from numpy.typing import NDArray
from scipy import fft

from .pointvortex import SpiralConfig


class ResolutionError(ValueError):
    """Grid too coarse for the vortex cores or box too small for the horizon."""


class CFLError(ValueError):
    """Time step violates ``dt <= 0.5 dx / max|u|``."""


class BlobLostError(RuntimeError):
    """A tracked blob's windowed circulation dropped below 0.9 of its mass."""


class RadialProfile(Protocol):
    mass: float
    core: float

    def U(self, r: NDArray) -> NDArray: ...


@dataclass(frozen=True)
class BumpProfile:
    """Smooth compact vorticity bump ``(1 - r^2)_+^p`` (``C^(p-1)``), a resolvable stand-in for ``U``."""

    p: int = 8

    @property
    def mass(self) -> float:
        return float(np.pi / (self.p + 1))

    @property
    def core(self) -> float:
        return 1.0

    def U(self, r: NDArray) -> NDArray:
        r = np.asarray(r, dtype=float)
        return np.clip(1 - r**2, 0.0, None) ** self.p


@dataclass(frozen=True)
class GaussianProfile:
    """``exp(-r^2)``: spectrally resolvable once the grid puts several cells per unit of ``eps``."""

    @property
    def mass(self) -> float:
        return float(np.pi)

    @property
    def core(self) -> float:
        return 1.0

    def U(self, r: NDArray) -> NDArray:
        r = np.asarray(r, dtype=float)
        return np.exp(-(r**2))


@dataclass
class VorticityField:
    """Vorticity samples on a periodic ``n x n`` grid.

    ``omega[i, k]`` sits at ``x = -box/2 + k dx``, ``y = -box/2 + i dx``.
    """

    n: int
    box: float
    omega: NDArray
    t: float = 0.0
    center: complex = 0j  # vorticity centroid used by the background correction
    threads: int = 1

    @property
    def dx(self) -> float:
        return self.box / self.n

    def coords(self) -> tuple[NDArray, NDArray]:
        x = -self.box / 2 + self.dx * np.arange(self.n)
        return np.meshgrid(x, x, indexing="xy")

    def circulation(self) -> float:
        return float(np.sum(self.omega) * self.dx**2)

    def impulse(self) -> complex:
        X, Y = self.coords()
        return complex(np.sum((X + 1j * Y) * self.omega) * self.dx**2)

    def angular_impulse(self) -> float:
        X, Y = self.coords()
        return float(np.sum((X**2 + Y**2) * self.omega) * self.dx**2)

    def enstrophy(self) -> float:
        return float(np.sum(self.omega**2) * self.dx**2)

    def copy(self) -> "VorticityField":
        return VorticityField(self.n, self.box, self.omega.copy(), self.t, self.center, self.threads)


class SpectralEuler:
    """Right-hand side and RK4 stepper for one grid."""

    def __init__(self, n: int, box: float, threads: int = 1, filtered: bool = True):
        if n & (n - 1):
            raise ValueError("n must be a power of two")
        self.n, self.box, self.threads, self.filtered = n, box, threads, filtered
        k = 2 * np.pi * fft.fftfreq(n, box / n)
        kr = 2 * np.pi * fft.rfftfreq(n, box / n)
        self.kx = kr[None, :]
        self.ky = k[:, None]
        k2 = self.kx**2 + self.ky**2
        k2[0, 0] = 1.0
        self.inv_k2 = 1.0 / k2
        self.inv_k2[0, 0] = 0.0
        kmax = n // 2
        cut = 2.0 / 3.0 * kmax * 2 * np.pi / box
        self.mask = (np.abs(self.kx) < cut) & (np.abs(self.ky) < cut)
        # exponential filter applied to the state once per step; it removes what
        # the truncated dynamics pushes toward the 2/3 cut, where it would otherwise
        # pile up and ring across the box
        self.filter = self.mask * np.exp(-36 * ((np.abs(self.kx) / cut) ** 36 + (np.abs(self.ky) / cut) ** 36))
        x = -box / 2 + box / n * np.arange(n)
        self.X, self.Y = np.meshgrid(x, x, indexing="xy")

    def _f(self, a):
        return fft.rfft2(a, workers=self.threads)

    def _fi(self, a):
        return fft.irfft2(a, s=(self.n, self.n), workers=self.threads)

    def velocity(self, omega: NDArray, gamma: float = 0.0, center: complex = 0j) -> tuple[NDArray, NDArray]:
        """``(u, v)`` including the background-rotation correction."""
        wh = self._f(omega)
        ph = wh * self.inv_k2
        u = self._fi(1j * self.ky * ph)
        v = self._fi(-1j * self.kx * ph)
        if gamma:
            s = gamma / (2 * self.box**2)
            u = u - s * (self.Y - center.imag)
            v = v + s * (self.X - center.real)
        return u, v

    def rhs(self, omega: NDArray, gamma: float, center: complex) -> NDArray:
        wh = self._f(omega) * self.mask
        w = self._fi(wh)
        ph = wh * self.inv_k2
        u = self._fi(1j * self.ky * ph)
        v = self._fi(-1j * self.kx * ph)
        flux = 1j * self.kx * self._f(u * w) + 1j * self.ky * self._f(v * w)
        out = -flux * self.mask
        if gamma:
            # rigid rotation term: -(u_rot . grad omega), divergence free
            s = gamma / (2 * self.box**2)
            gx = self._fi(1j * self.kx * wh)
            gy = self._fi(1j * self.ky * wh)
            rot = -s * (-(self.Y - center.imag) * gx + (self.X - center.real) * gy)
            return self._fi(out) + rot
        return self._fi(out)

    def max_speed(self, f: VorticityField, gamma: float) -> float:
        u, v = self.velocity(f.omega, gamma, f.center)
        return float(np.sqrt(np.max(u**2 + v**2)))

    def cfl_limit(self, f: VorticityField, gamma: float) -> float:
        return 0.5 * f.dx / max(self.max_speed(f, gamma), 1e-300)

    def step(self, f: VorticityField, dt: float, gamma: float | None = None) -> VorticityField:
        """One classical RK4 step (``dt < 0`` integrates backward).

        Raises
        ------
        FloatingPointError
            If the field becomes non-finite.
        """
        g = f.circulation() if gamma is None else gamma
        w = f.omega
        k1 = self.rhs(w, g, f.center)
        k2 = self.rhs(w + 0.5 * dt * k1, g, f.center)
        k3 = self.rhs(w + 0.5 * dt * k2, g, f.center)
        k4 = self.rhs(w + dt * k3, g, f.center)
        new = w + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if self.filtered:
            new = self._fi(self._f(new) * self.filter)
        if not np.all(np.isfinite(new)):
            raise FloatingPointError("non-finite vorticity")
        return VorticityField(f.n, f.box, new, f.t + dt, f.center, f.threads)


def step(field: VorticityField, dt: float, solver: SpectralEuler | None = None,
         correct_background: bool = True) -> VorticityField:
    """Advance one RK4 step after checking the CFL condition.

    Raises
    ------
    CFLError
        If ``|dt| > 0.5 dx / max|u|``.
    """
    solver = solver or SpectralEuler(field.n, field.box, field.threads)
    g = field.circulation() if correct_background else 0.0
    lim = solver.cfl_limit(field, g)
    if abs(dt) > lim:
        raise CFLError(f"dt={dt} exceeds CFL limit {lim}")
    return solver.step(field, dt, g)


def blob_field(n: int, box: float, centers: NDArray, weights: NDArray, eps: float,
               profile: RadialProfile, t: float = 0.0, threads: int = 1) -> VorticityField:
    """``omega = eps^-2 sum_j weights_j U(|x - c_j| / eps)`` on the grid."""
    f = VorticityField(n, box, np.zeros((n, n)), t, 0j, threads)
    X, Y = f.coords()
    Z = X + 1j * Y
    for c, w in zip(np.asarray(centers, dtype=complex), np.asarray(weights, dtype=float)):
        f.omega += w * profile.U(np.abs(Z - c) / eps) / eps**2
    gam = f.circulation()
    if gam:
        f.center = complex(np.sum(Z * f.omega) * f.dx**2 / gam)
    return f


def check_resolution(n: int, box: float, eps: float, profile: RadialProfile,
                     separation: float, cells: int = 16, box_factor: float = 8.0) -> None:
    """Raise :class:`ResolutionError` unless ``2 eps core / dx >= cells`` and ``box >= box_factor * separation``."""
    dx = box / n
    across = 2 * eps * profile.core / dx
    if across < cells:
        raise ResolutionError(
            f"{across:.3g} cells across a vortex core (need {cells}); requires n >= "
            f"{int(np.ceil(cells * box / (2 * eps * profile.core)))}")
    if box < box_factor * separation:
        raise ResolutionError(f"box {box} < {box_factor} x separation {separation:.4g}")


def init_field(cfg: SpiralConfig, profile: RadialProfile, eps: float, n: int, box: float,
               horizon: float = 0.0, t0: float | None = None, threads: int = 1,
               cells: int = 16, box_factor: float = 8.0) -> VorticityField:
    """``omega(x, T0) = eps^-2 sum_j (m_j/M) U((x - xi*_j(T0))/eps)``.

    Raises
    ------
    ResolutionError
        If the cores are under-resolved or the box is small for the separation at ``T0 + horizon``.
    """
    t0 = cfg.T0() if t0 is None else t0
    sep = float(np.max(cfg.lengths(t0 + horizon)))
    check_resolution(n, box, eps, profile, sep, cells, box_factor)
    return blob_field(n, box, cfg.position(t0), cfg.masses / profile.mass, eps, profile, t0, threads)


@dataclass
class BlobDiagnostics:
    t: float
    j: int
    circ: float
    center: complex
    dev: float
    support_radius: float
    mass_outside_3eps: float


def measure_blobs(f: VorticityField, predicted: NDArray, eps: float, window: float,
                  masses: NDArray | None = None, frac: float = 1 - 1e-8) -> list[BlobDiagnostics]:
    """Windowed circulation, centroid and support radius of each blob.

    The support radius is the smallest radius about the measured center that holds
    ``frac`` of the blob's windowed ``|omega|``. ``mass_outside_3eps`` is the share of
    the total ``|omega|`` lying outside every ``B_{3 eps}`` around the predictions.

    Raises
    ------
    BlobLostError
        If ``masses`` is given and a windowed circulation falls below ``0.9 m_j``.
    """
    X, Y = f.coords()
    Z = X + 1j * Y
    a = np.abs(f.omega)
    total = np.sum(a)
    near = np.zeros(Z.shape, dtype=bool)
    for c in predicted:
        near |= np.abs(Z - c) < 3 * eps
    outside = float(np.sum(a[~near]) / total)
    out = []
    for j, c in enumerate(predicted):
        win = np.abs(Z - c) < window
        w = f.omega[win]
        circ = float(np.sum(w) * f.dx**2)
        if masses is not None and circ / masses[j] < 0.9:
            raise BlobLostError(f"blob {j} circulation {circ} vs mass {masses[j]} at t={f.t}")
        cen = complex(np.sum(Z[win] * w) / np.sum(w))
        d = np.abs(Z[win] - cen)
        order = np.argsort(d)
        cum = np.cumsum(np.abs(w)[order])
        k = int(np.searchsorted(cum, frac * cum[-1]))
        rad = float(d[order][min(k, len(d) - 1)])
        out.append(BlobDiagnostics(f.t, j, circ, cen, float(abs(cen - c)), rad, outside))
    return out


def write_checkpoint(f: VorticityField, path: str | Path, extra: dict | None = None) -> None:
    """Raw little-endian float64 row-major array at ``path.bin`` plus ``path.json``."""
    path = Path(path)
    f.omega.astype("<f8").tofile(path.with_suffix(".bin"))
    meta = {"n": f.n, "box": f.box, "t": f.t, "endianness": "little", "dtype": "float64",
            "center": [f.center.real, f.center.imag], **(extra or {})}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=1))


def read_checkpoint(path: str | Path, threads: int = 1) -> tuple[VorticityField, dict]:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    n = int(meta["n"])
    om = np.fromfile(path.with_suffix(".bin"), dtype="<f8").reshape(n, n).astype(float)
    c = meta.get("center", [0.0, 0.0])
    return VorticityField(n, float(meta["box"]), om, float(meta["t"]), complex(c[0], c[1]), threads), meta


@dataclass
class TrackingRun:
    diagnostics: list[BlobDiagnostics]
    final: VorticityField
    dt: float
    steps: int
    conservation: dict = field(default_factory=dict)

    def table(self) -> NDArray:
        """Rows ``t, j, circ, cx, cy, dev, support_radius, mass_outside_3eps``."""
        return np.array([[d.t, d.j, d.circ, d.center.real, d.center.imag, d.dev, d.support_radius,
                          d.mass_outside_3eps] for d in self.diagnostics])

    def max_dev(self) -> float:
        return max(d.dev for d in self.diagnostics)

    def max_outside(self) -> float:
        return max(d.mass_outside_3eps for d in self.diagnostics)

    def separation_exponent(self, tau: float) -> float:
        """Slope of ``log`` mean pair distance against ``log(1 + t/tau)``."""
        ts = sorted({d.t for d in self.diagnostics})
        L = []
        for s in ts:
            c = [d.center for d in self.diagnostics if d.t == s]
            L.append(np.mean([abs(c[0] - c[1]), abs(c[1] - c[2]), abs(c[0] - c[2])]))
        return float(np.polyfit(np.log1p(np.array(ts) / tau), np.log(L), 1)[0])


def invariants(f: VorticityField) -> dict[str, float]:
    """Circulation, impulse, angular impulse, enstrophy and their natural scales."""
    X, Y = f.coords()
    Z = X + 1j * Y
    a = np.abs(f.omega) * f.dx**2
    return {"circulation": f.circulation(), "impulse": f.impulse(), "angular": f.angular_impulse(),
            "enstrophy": f.enstrophy(), "scale0": float(np.sum(a)), "scale1": float(np.sum(np.abs(Z) * a)),
            "scale2": float(np.sum(np.abs(Z) ** 2 * a))}


def conservation_drift(before: dict, after: dict) -> dict[str, float]:
    """Relative drifts; moments are measured against the matching moment of ``|omega|``."""
    return {
        "circulation": abs(after["circulation"] - before["circulation"]) / before["scale0"],
        "impulse": abs(after["impulse"] - before["impulse"]) / before["scale1"],
        "angular": abs(after["angular"] - before["angular"]) / before["scale2"],
        "enstrophy_change": (after["enstrophy"] - before["enstrophy"]) / before["enstrophy"],
    }


def evolve(f: VorticityField, dt: float, nsteps: int, solver: SpectralEuler | None = None,
           every: int = 0, callback: Callable[[VorticityField, int], None] | None = None,
           recheck: int = 100, gamma: float | None = None) -> VorticityField:
    """Fixed-step RK4 for ``nsteps``; the CFL condition is re-checked every ``recheck`` steps.

    ``gamma`` is the circulation used by the background correction; by default it
    is measured on ``f`` (pass the stored value when resuming for bitwise restarts).

    Raises
    ------
    CFLError
        If the step becomes unstable.
    """
    solver = solver or SpectralEuler(f.n, f.box, f.threads)
    g = f.circulation() if gamma is None else gamma
    for s in range(nsteps):
        if s % recheck == 0:
            lim = solver.cfl_limit(f, g)
            if abs(dt) > lim:
                raise CFLError(f"dt={dt} exceeds CFL limit {lim} at step {s}")
        f = solver.step(f, dt, g)
        if callback is not None and every and (s + 1) % every == 0:
            callback(f, s + 1)
    return f


def run_and_track(cfg: SpiralConfig, profile: RadialProfile, eps: float, horizon: float, n: int,
                  box: float, dt: float | None = None, samples: int = 50, threads: int = 1,
                  t0: float | None = None, start: VorticityField | None = None,
                  checkpoint: str | Path | None = None, gamma: float | None = None,
                  cells: int = 16, box_factor: float = 8.0) -> TrackingRun:
    """Evolve from ``t0`` (default ``T0``) to ``t0 + horizon`` and sample blob diagnostics.

    ``start`` resumes from a saved field; its ``t`` then replaces ``t0`` as the
    starting time while ``t0 + horizon`` stays the end time. The checkpoint
    records ``dt`` and the circulation so a resumed run repeats the same steps.

    Raises
    ------
    ResolutionError, CFLError, BlobLostError
    """
    t0 = cfg.T0() if t0 is None else t0
    f = start if start is not None else init_field(cfg, profile, eps, n, box, horizon, t0, threads,
                                                   cells, box_factor)
    solver = SpectralEuler(f.n, f.box, threads)
    g = f.circulation() if gamma is None else gamma
    if dt is None:
        dt = 0.5 * solver.cfl_limit(f, g)
    lim = solver.cfl_limit(f, g)
    if abs(dt) > lim:
        raise CFLError(f"dt={dt} exceeds CFL limit {lim}")
    t_end = t0 + horizon
    nsteps = max(0, int(np.ceil((t_end - f.t) / dt - 1e-9)))
    every = max(1, nsteps // samples)
    xs = cfg.position(f.t)
    window = 0.45 * float(np.min(cfg.lengths(f.t)))
    diags = measure_blobs(f, xs, eps, window, cfg.masses)
    inv0 = invariants(f)

    def cb(fld, s):
        pred = cfg.position(fld.t)
        win = 0.45 * float(np.min(cfg.lengths(fld.t)))
        diags.extend(measure_blobs(fld, pred, eps, win, cfg.masses))

    f = evolve(f, dt, nsteps, solver, every, cb, gamma=g)
    if nsteps % every:
        cb(f, nsteps)
    if checkpoint is not None:
        write_checkpoint(f, checkpoint, {"dt": dt, "steps": nsteps, "gamma": g})
    return TrackingRun(diags, f, dt, nsteps, conservation_drift(inv0, invariants(f)))


def two_blob_period(eps: float = 0.2, d: float = 1.0, m: float = 1.0, n: int = 256, box: float = 6.0,
                    nsteps: int = 600, dt: float | None = None, threads: int = 1) -> tuple[float, float]:
    """Measured and point-vortex co-rotation periods of two equal blobs.

    The measured period comes from the angle swept by the centroid of the
    upper-half-plane blob over ``nsteps``.
    """
    prof = BumpProfile()
    f = blob_field(n, box, np.array([-d / 2, d / 2], dtype=complex),
                   np.array([m, m]) / prof.mass, eps, prof, 0.0, threads)
    solver = SpectralEuler(n, box, threads)
    g = f.circulation()
    if dt is None:
        dt = 0.4 * solver.cfl_limit(f, g)
    X, Y = f.coords()
    Z = X + 1j * Y
    angles = [0.0]
    ref = [d / 2 + 0j]

    def cb(fld, s):
        w = fld.omega * (np.abs(Z - ref[0]) < d / 2)
        c = complex(np.sum(Z * w) / np.sum(w))
        a = np.angle(c / ref[0])
        angles.append(angles[-1] + a)
        ref[0] = c

    f = evolve(f, dt, nsteps, solver, every=10, callback=cb)
    rate = angles[-1] / (f.t)
    return float(2 * np.pi / rate), float(2 * np.pi**2 * d**2 / m)
