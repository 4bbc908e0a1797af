"""Embedded Runge-Kutta 5(4) integrator (Dormand-Prince) with PI step control.

A small, dependency-free stepper used where step statistics and an explicit
local error tolerance are part of the contract. Output times are hit exactly by
truncating the step, so no dense-output interpolation error is introduced.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import NDArray

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


class StepSizeError(RuntimeError):
    """The step size fell below the floating-point resolution of ``t`` (typically a collision)."""


@dataclass
class IntegratorStats:
    """Counters collected during an integration."""

    accepted: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    max_error_estimate: float = 0.0
    step_sizes: list[float] = field(default_factory=list)


def dopri54(
    rhs: Callable[[float, NDArray], NDArray],
    y0: NDArray,
    t_out: NDArray,
    tol: float = 1e-10,
    h0: float | None = None,
    max_steps: int = 10_000_000,
) -> tuple[NDArray, IntegratorStats]:
    """Integrate ``y' = rhs(t, y)`` and return the state at each time in ``t_out``.

    Parameters
    ----------
    rhs : callable
        Right-hand side, ``rhs(t, y) -> dy``. Real or complex arrays are accepted.
    y0 : ndarray
        Initial state at ``t_out[0]``.
    t_out : ndarray
        Strictly monotone output times; ``t_out[0]`` is the initial time.
    tol : float
        Local error tolerance, applied as ``atol = rtol = tol``.

    Returns
    -------
    Y : ndarray
        Array of shape ``(len(t_out),) + y0.shape``.
    stats : IntegratorStats

    Raises
    ------
    StepSizeError
        If the step underflows, e.g. as the solution approaches a singularity.
    RuntimeError
        If ``max_steps`` is exceeded.
    """
    t_out = np.asarray(t_out, dtype=float)
    y = np.array(y0, dtype=np.result_type(y0, float))
    direction = 1.0 if t_out[-1] >= t_out[0] else -1.0
    Y = np.empty((len(t_out),) + y.shape, dtype=y.dtype)
    Y[0] = y
    stats = IntegratorStats()
    t = float(t_out[0])
    k1 = rhs(t, y)
    stats.rhs_evals += 1

    if h0 is None:
        scale = tol + tol * np.abs(y)
        d0 = np.sqrt(np.mean((np.abs(y) / scale) ** 2))
        d1 = np.sqrt(np.mean((np.abs(k1) / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = abs(h0)
    err_prev = 1e-4
    alpha, beta, safety = 0.7 / 5, 0.4 / 5, 0.9
    K = np.empty((7,) + y.shape, dtype=y.dtype)

    for n in range(1, len(t_out)):
        t_end = float(t_out[n])
        while direction * (t_end - t) > 0:
            if stats.accepted + stats.rejected > max_steps:
                raise RuntimeError("dopri54: maximum number of steps exceeded")
            if h < 16 * np.spacing(abs(t)):
                raise StepSizeError(f"dopri54: step size {h:.3e} underflows at t={t:.17g}")
            last = h >= abs(t_end - t) * (1 - 1e-12)
            step = abs(t_end - t) if last else h
            hs = direction * step
            K[0] = k1
            for i in range(1, 7):
                yi = y + hs * np.tensordot(_A[i], K[:i], axes=1)
                K[i] = rhs(t + _C[i] * hs, yi)
            stats.rhs_evals += 6
            y_new = y + hs * np.tensordot(_B5[:6], K[:6], axes=1)
            err_vec = hs * np.tensordot(_E, K, axes=1)
            sc = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((np.abs(err_vec) / sc) ** 2)))
            if err <= 1.0:
                t = t_end if last else t + hs
                y = y_new
                k1 = K[6]
                stats.accepted += 1
                stats.step_sizes.append(step)
                stats.max_error_estimate = max(stats.max_error_estimate, err * tol)
                err = max(err, 1e-10)
                fac = safety * err ** (-alpha) * err_prev**beta
                h = step * min(5.0, max(0.2, fac))
                err_prev = err
            else:
                stats.rejected += 1
                h = step * max(0.2, safety * err ** (-1 / 5))
        Y[n] = y
    return Y, stats
