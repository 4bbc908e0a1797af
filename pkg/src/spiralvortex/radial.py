"""Piecewise Chebyshev representation of smooth radial functions on [0, R].

The vortex profile is strongly concentrated near the origin, so a single
polynomial on [0, 1] is inefficient. Panels are graded geometrically toward the
origin and each holds a Chebyshev series sampled at first-kind points (which
never touch the panel ends, convenient for expressions singular at r = 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.typing import ArrayLike, NDArray
from scipy.fft import dct


def graded_breaks(core: float, R: float = 1.0, ratio: float = 2.0, first: float = 0.5) -> NDArray:
    """Breakpoints ``0, first*core, core, ratio*core, ... , R``."""
    b = [0.0, first * core]
    x = core
    while x < R / ratio**0.5:
        b.append(x)
        x *= ratio
    b.append(R)
    return np.unique(np.array(b))


def cheb_nodes(n: int) -> NDArray:
    """First-kind Chebyshev points on [-1, 1], increasing."""
    return -np.cos(np.pi * (np.arange(n) + 0.5) / n)


def _coeffs_from_values(v: NDArray) -> NDArray:
    # values at increasing first-kind nodes -> Chebyshev coefficients
    n = v.shape[0]
    c = dct(v[::-1], type=2, axis=0) / n
    c[0] /= 2
    return c


@dataclass
class RadialFunction:
    """Piecewise Chebyshev series on panels ``[breaks[i], breaks[i+1]]``.

    Evaluation outside ``[breaks[0], breaks[-1]]`` extrapolates the end panels;
    callers handle the exterior region explicitly.
    """

    breaks: NDArray
    coeffs: NDArray  # shape (npanel, n)

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def from_callable(cls, f: Callable[[NDArray], NDArray], breaks: ArrayLike, n: int = 40):
        breaks = np.asarray(breaks, dtype=float)
        x = cheb_nodes(n)
        a, b = breaks[:-1, None], breaks[1:, None]
        r = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
        vals = np.asarray(f(r.ravel()), dtype=float).reshape(r.shape)
        return cls(breaks, _coeffs_from_values(vals.T).T)

    @staticmethod
    def nodes(breaks: ArrayLike, n: int = 40) -> NDArray:
        """Sampling points used by :meth:`from_values`, shape ``(npanel, n)``."""
        breaks = np.asarray(breaks, dtype=float)
        x = cheb_nodes(n)
        a, b = breaks[:-1, None], breaks[1:, None]
        return 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]

    @classmethod
    def from_values(cls, breaks: ArrayLike, values: NDArray):
        """Build from values at :meth:`nodes`."""
        return cls(np.asarray(breaks, dtype=float), _coeffs_from_values(np.asarray(values).T).T)

    def _locate(self, r: NDArray) -> tuple[NDArray, NDArray]:
        idx = np.clip(np.searchsorted(self.breaks, r, side="right") - 1, 0, len(self.breaks) - 2)
        a, b = self.breaks[idx], self.breaks[idx + 1]
        return idx, (2 * r - a - b) / (b - a)

    def __call__(self, r: ArrayLike) -> NDArray:
        r = np.asarray(r, dtype=float)
        shape = r.shape
        r = r.ravel()
        idx, x = self._locate(r)
        out = np.empty_like(r)
        for p in np.unique(idx):
            sel = idx == p
            out[sel] = C.chebval(x[sel], self.coeffs[p])
        return out.reshape(shape)

    def deriv(self, m: int = 1) -> "RadialFunction":
        h = 0.5 * np.diff(self.breaks)
        out = []
        for p in range(len(h)):
            c = C.chebder(self.coeffs[p], m) / h[p] ** m
            out.append(np.pad(c, (0, self.n - len(c))))
        return RadialFunction(self.breaks, np.array(out))

    def integral(self) -> "RadialFunction":
        """Antiderivative vanishing at ``breaks[0]``, continuous across panels."""
        h = 0.5 * np.diff(self.breaks)
        out = []
        acc = 0.0
        for p in range(len(h)):
            c = C.chebint(self.coeffs[p], lbnd=-1) * h[p]
            c[0] += acc
            acc = C.chebval(1.0, c)
            out.append(c[: self.n + 1])
        coeffs = np.array(out)
        return RadialFunction(self.breaks, coeffs)

    def definite(self) -> float:
        """Integral over the whole support."""
        h = 0.5 * np.diff(self.breaks)
        total = 0.0
        for p in range(len(h)):
            c = C.chebint(self.coeffs[p], lbnd=-1)
            total += C.chebval(1.0, c) * h[p]
        return float(total)

    def tail(self) -> float:
        """Magnitude of the trailing coefficients relative to the leading ones (a resolution gauge)."""
        c = np.abs(self.coeffs)
        return float(np.max(c[:, -3:]) / max(np.max(c), 1e-300))
