"""Reference placements and solvers: exhaustive scan, projected gradient ascent,
hotspot-centre heuristic and a fixed half-wavelength array."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .channel import f_n, f_n_prime, g_term, kernel
from .opt_maxmin import _column_residual
from .scenario import Geometry
from .traffic import ActiveSet, GridField, TrafficMap

BASELINE_KINDS = ("exhaustive", "projected-gradient", "hotspot-center", "fixed-array")


class OutOfRegion(ValueError):
    pass


@dataclass
class BaselineKind:
    tag: str
    delta_x: float | None = None
    k_max: int | None = None

    def __post_init__(self):
        if self.tag not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline {self.tag!r}")
        if self.delta_x is not None and not self.delta_x > 0:
            raise ValueError("delta_x must be > 0")
        if self.k_max is not None and self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass
class BaselineResult:
    deployment: np.ndarray
    objective: float
    wall_time: float


def scan_points(d_x: float, delta_x: float) -> np.ndarray:
    """``K + 1`` equally spaced points on ``[0, D_x]`` with ``K = ceil(D_x / delta_x)``.

    The step is ``D_x / K``, so halving ``delta_x`` on a grid that already divides
    ``D_x`` yields a superset of points.
    """
    if not delta_x > 0:
        raise ValueError("delta_x must be > 0")
    k = max(1, math.ceil(d_x / delta_x - 1e-9))
    return np.linspace(0.0, d_x, k + 1)


def exhaustive_waveguide(geom: Geometry, grid: GridField, n: int, delta_x: float) -> tuple[float, float]:
    xs = scan_points(geom.d_x, delta_x)
    values = f_n(geom, grid, n, xs)
    k = int(np.argmax(values))  # first maximum -> smallest x on ties
    return float(xs[k]), float(values[k])


def exhaustive_average(geom: Geometry, grid: GridField, delta_x: float) -> BaselineResult:
    t0 = time.perf_counter()
    best = [exhaustive_waveguide(geom, grid, n, delta_x) for n in range(geom.n_antennas)]
    wall = time.perf_counter() - t0
    return BaselineResult(np.array([b[0] for b in best]), float(sum(b[1] for b in best)), wall)


def projected_gradient_waveguide(
    geom: Geometry,
    grid: GridField,
    n: int,
    x0: float | None = None,
    k_max: int = 30,
    eps_d: float | None = None,
    initial_step: float | None = None,
) -> tuple[float, float]:
    """Projected ascent along ``sign(f_n')`` with backtracking step halving.

    A trial step is accepted only if it increases ``f_n``; the step resets to
    ``initial_step`` (default ``D_x / 10``) after an acceptance and halves after a
    rejection. Stops after ``k_max`` trials or once the step drops below ``eps_d``.
    """
    d_x = geom.d_x
    eps_d = geom.params.eps_d if eps_d is None else eps_d
    step0 = d_x / 10.0 if initial_step is None else initial_step
    x = d_x / 2.0 if x0 is None else float(x0)
    if not 0.0 <= x <= d_x:
        raise ValueError("x0 outside [0, D_x]")
    fx = f_n(geom, grid, n, x)
    step = step0
    for _ in range(k_max):
        if step < eps_d:
            break
        slope = f_n_prime(geom, grid, n, x)
        if slope == 0.0:
            break
        trial = min(max(x + step * math.copysign(1.0, slope), 0.0), d_x)
        f_trial = f_n(geom, grid, n, trial) if trial != x else fx
        if f_trial > fx:
            x, fx = trial, f_trial
            step = step0
        else:
            step *= 0.5
    return x, fx


def projected_gradient_average(
    geom: Geometry, grid: GridField, x0=None, k_max: int = 30, eps_d: float | None = None
) -> BaselineResult:
    t0 = time.perf_counter()
    starts = [None] * geom.n_antennas if x0 is None else list(x0)
    res = [
        projected_gradient_waveguide(geom, grid, n, starts[n], k_max=k_max, eps_d=eps_d)
        for n in range(geom.n_antennas)
    ]
    wall = time.perf_counter() - t0
    return BaselineResult(np.array([r[0] for r in res]), float(sum(r[1] for r in res)), wall)


def hotspot_center_deployment(tmap: TrafficMap, geom: Geometry) -> np.ndarray:
    """Antenna ``n`` goes to the x-centre of hotspot ``n mod L`` in descending-weight order."""
    ranked = tmap.sorted_by_weight()
    centers = [min(max(h.mu_x, 0.0), geom.d_x) for h in ranked]
    return np.array([centers[n % len(centers)] for n in range(geom.n_antennas)])


def fixed_array_deployment(geom: Geometry) -> np.ndarray:
    """Half-wavelength-spaced positions centred on ``D_x / 2``."""
    n = geom.n_antennas
    half = geom.wavelength / 2.0
    if n * half > geom.d_x:
        raise OutOfRegion("array aperture exceeds the region length")
    return geom.d_x / 2.0 + (np.arange(1, n + 1) - (n + 1) / 2.0) * half


def exhaustive_maxmin_coordinate(
    geom: Geometry, grid: GridField, active: ActiveSet, x_tilde, n: int, delta_x: float
) -> tuple[float, float]:
    """Dense scan of ``min_active (A + g_n(x))`` over ``x`` for one coordinate."""
    res = _column_residual(geom, active, grid, np.asarray(x_tilde, dtype=float), n)
    xs = scan_points(geom.d_x, delta_x)
    best_x, best_t = 0.0, -math.inf
    for i in range(0, xs.size, 2048):
        chunk = xs[i:i + 2048]
        s = (res.x[None, :] - chunk[:, None]) ** 2 + geom.c_n[n]
        worst = np.min(res.A[None, :] + kernel(geom, s), axis=1)
        k = int(np.argmax(worst))
        if worst[k] > best_t:
            best_x, best_t = float(chunk[k]), float(worst[k])
    return best_x, best_t


def evaluate_maxmin_objective(geom: Geometry, grid: GridField, active: ActiveSet, x_tilde, n: int, xs) -> np.ndarray:
    """``min_active (A + g_n(x))`` at each of ``xs`` with the other antennas fixed."""
    res = _column_residual(geom, active, grid, np.asarray(x_tilde, dtype=float), n)
    xs = np.asarray(xs, dtype=float)
    return np.array([np.min(res.A + g_term(geom, n, res.x, x)) for x in xs.reshape(-1)]).reshape(xs.shape)
