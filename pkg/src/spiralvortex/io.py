"""Run configuration, CSV/JSON output and slope fits shared by the command-line tools."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class RunConfig:
    """One schema for every command; keys a command does not use are ignored by it.

    Times are in units of ``tau`` for the point-vortex and Euler horizons
    (``horizon``, ``t_max``, ``sim_horizon``, ``t_start``) and in units of ``T0``
    for the approximation sweep (``t_over_T0``). ``t_start = None`` starts the
    Euler run at ``T0``.
    """

    masses: list[float] = field(default_factory=lambda: [1.0, 1.0, -0.5])
    L13: float = 1.0
    L12: float | None = None
    orientation: str = "positive"
    tol: float = 1e-10
    horizon: float = 50.0
    samples: int = 201
    # linearization
    t_max: float = 100.0
    deltas: list[float] = field(default_factory=lambda: [1e-3, 1e-4, 1e-5])
    # profile and modal
    gamma: float = 19.0
    nodes: int = 40
    modes: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    spectrum_modes: list[int] = field(default_factory=lambda: [0, 1, 2, 3])
    nev: int = 3
    # approximation
    epsilons: list[float] = field(default_factory=lambda: [0.1, 0.05, 0.025])
    t_over_T0: list[float] = field(default_factory=lambda: [2.0])
    slope: bool = True
    # euler
    eps_over_L13: float = 1.0 / 40.0
    n: int = 512
    box: float | None = None
    dt: float | None = None
    vortex_profile: str = "U"
    sim_horizon: float = 5.0
    t_start: float | None = None
    min_cells: int = 16
    box_factor: float = 8.0
    checkpoint_every: int = 0
    resume: str | None = None
    provided: frozenset = field(default=frozenset(), init=False, repr=False, compare=False)

    def require(self, *keys: str) -> None:
        """Raise unless every key was given explicitly in the loaded document."""
        missing = [k for k in keys if k not in self.provided]
        if missing:
            raise ConfigError(f"missing key: {', '.join(missing)}")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        cfg = cls(**d)
        cfg.provided = frozenset(d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls()
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        return cls.from_dict(d)

    def validate(self) -> None:
        if not isinstance(self.masses, list) or len(self.masses) != 3:
            raise ConfigError("masses must be a list of three numbers")
        if self.orientation not in ("positive", "negative"):
            raise ConfigError("orientation must be 'positive' or 'negative'")
        if self.vortex_profile not in ("U", "bump", "gaussian"):
            raise ConfigError("vortex_profile must be 'U', 'bump' or 'gaussian'")
        if self.tol <= 0 or self.samples < 2 or self.n < 8:
            raise ConfigError("tol, samples or n out of range")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("provided")
        return d


def write_csv(path: str | Path, header: list[str], rows: ArrayLike) -> None:
    """Comma-separated, dot-decimal, 17 significant digits."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=",".join(header), comments="")


def read_csv(path: str | Path) -> tuple[list[str], NDArray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(repr(float(x))) if np.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_json(path: str | Path, obj: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=1))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    npts: int


def fit_slope(x: ArrayLike, y: ArrayLike) -> SlopeFit:
    """Least-squares slope of ``log|y|`` against ``log x`` with its standard error.

    Raises
    ------
    ValueError
        With fewer than three points.
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if x.size < 3:
        raise ValueError("a slope fit needs at least three points")
    res = stats.linregress(np.log(x), np.log(y))
    return SlopeFit(float(res.slope), float(res.stderr), int(x.size))
