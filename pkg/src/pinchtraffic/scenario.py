"""System parameters and the geometry constants derived from them.

Waveguide indices are 0-based throughout the package: waveguide ``n`` sits at
``y[n] = n * d_h - D_y / 2``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8  # m/s


class InvalidParams(ValueError):
    pass


# config key -> SystemParams field
CONFIG_KEYS = {
    "f_c_hz": "f_c",
    "d_x_m": "d_x",
    "d_y_m": "d_y",
    "d_v_m": "d_v",
    "p_dbm": "p_dbm",
    "sigma2_dbm": "sigma2_dbm",
    "mu2_db": "mu2_db",
    "n_antennas": "n_antennas",
    "n_h": "n_h",
    "n_v": "n_v",
    "beta": "beta",
    "eps_t": "eps_t",
    "eps_d": "eps_d",
    "n_hotspots": "n_hotspots",
    "tau": "tau",
    "j_subintervals": "j_subintervals",
}


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(value)


@dataclass(frozen=True)
class SystemParams:
    """Physical and numerical parameters; defaults are the 28 GHz, 6-waveguide reference setup."""

    f_c: float = 28e9
    d_x: float = 60.0
    d_y: float = 200.0
    d_v: float = 10.0
    p_dbm: float = 40.0
    sigma2_dbm: float = -70.0
    mu2_db: float = -60.0
    n_antennas: int = 6
    n_h: int = 400
    n_v: int = 120
    beta: float = 0.01
    eps_t: float = 1e-3
    eps_d: float = 1e-3
    n_hotspots: int = 3
    tau: float = 0.02
    j_subintervals: int = 10

    def __post_init__(self):
        problems = []
        if not self.f_c > 0:
            problems.append("f_c must be > 0")
        if not self.d_x > 0 or not self.d_y > 0:
            problems.append("d_x and d_y must be > 0")
        if not self.d_v > 0:
            problems.append("d_v must be > 0")
        for name in ("n_antennas", "n_h", "n_v", "n_hotspots", "j_subintervals"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                problems.append(f"{name} must be an integer >= 1")
        if not self.beta >= 0:
            problems.append("beta must be >= 0")
        if not 0 < self.tau < 1:
            problems.append("tau must lie in (0, 1)")
        if not self.eps_t > 0 or not self.eps_d > 0:
            problems.append("eps_t and eps_d must be > 0")
        if problems:
            raise InvalidParams("; ".join(problems))

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SystemParams":
        """Build from a config mapping keyed by ``CONFIG_KEYS`` (field names also accepted)."""
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = CONFIG_KEYS.get(key, key)
            if name not in fields:
                raise InvalidParams(f"unknown scenario key {key!r}")
            kwargs[name] = int(value) if fields[name].type == "int" else float(value)
        return cls(**kwargs)

    def to_mapping(self) -> dict:
        return {key: getattr(self, name) for key, name in CONFIG_KEYS.items()}


@dataclass(frozen=True, eq=False)
class Geometry:
    """Derived constants shared by every SNR kernel.

    ``c_n[n] = y[n]**2 + d_v**2`` is the squared distance between antenna ``n``
    and a grid point at the same horizontal position.
    """

    params: SystemParams
    rho: float
    eta: float
    wavelength: float
    d_h: float
    y: np.ndarray
    c_n: np.ndarray
    mu2: float

    @property
    def n_antennas(self) -> int:
        return self.params.n_antennas

    @property
    def d_x(self) -> float:
        return self.params.d_x

    @property
    def beta(self) -> float:
        return self.params.beta


def derive_geometry(params: SystemParams) -> Geometry:
    n = params.n_antennas
    if n == 1:
        # single waveguide on the region centreline
        d_h = math.nan
        y = np.zeros(1)
    else:
        d_h = params.d_y / (n - 1)
        y = np.arange(n) * d_h - params.d_y / 2.0
    c_n = y**2 + params.d_v**2
    y.setflags(write=False)
    c_n.setflags(write=False)
    return Geometry(
        params=params,
        rho=float(db_to_linear(params.p_dbm - params.sigma2_dbm)),
        eta=SPEED_OF_LIGHT**2 / (4.0 * math.pi * params.f_c) ** 2,
        wavelength=SPEED_OF_LIGHT / params.f_c,
        d_h=d_h,
        y=y,
        c_n=c_n,
        mu2=float(db_to_linear(params.mu2_db)),
    )


def _check_index(geom: Geometry, n: int) -> None:
    if not 0 <= n < geom.n_antennas:
        raise IndexError(f"waveguide index {n} outside [0, {geom.n_antennas})")


def distance_sq(geom: Geometry, n: int, x_grid, x_ant):
    """Squared antenna-to-grid distance ``(x_grid - x_ant)**2 + C_n``."""
    _check_index(geom, n)
    return (np.asarray(x_grid, dtype=float) - x_ant) ** 2 + geom.c_n[n]
