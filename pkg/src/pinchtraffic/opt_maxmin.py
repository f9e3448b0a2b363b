"""Traffic-restricted max-min placement by block coordinate descent.

Each coordinate update maximises ``min_{active} (A_uv + g_n(x))`` over one
antenna position. For a level ``t`` the set of positions meeting every active
grid is an intersection of intervals centred on the grid x-positions, and the
intersection shrinks as ``t`` grows, so the best level is found by bisection on
``t`` with an interval-intersection feasibility test.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import check_deployment, column_snr, g_term, kernel
from .scenario import Geometry, _check_index, linear_to_db
from .traffic import ActiveSet, GridField


@dataclass(frozen=True)
class FeasInterval:
    lo: float
    hi: float

    @classmethod
    def empty_interval(cls) -> "FeasInterval":
        return cls(math.inf, -math.inf)

    @property
    def empty(self) -> bool:
        return not self.lo <= self.hi

    @property
    def midpoint(self) -> float:
        if self.empty:
            raise ValueError("empty interval has no midpoint")
        return 0.5 * (self.lo + self.hi)

    def contains(self, other: "FeasInterval") -> bool:
        return other.empty or (not self.empty and self.lo <= other.lo and other.hi <= self.hi)


@dataclass
class ResidualField:
    """Contribution ``A`` of every antenna except ``n`` at each active grid position ``x``."""

    members: np.ndarray
    x: np.ndarray
    A: np.ndarray
    n: int


@dataclass
class MaxMinReport:
    deployment: np.ndarray
    worst_snr: float
    worst_grid: tuple[int, int]
    trace: list[float]
    sweeps: int
    wall_time: float
    updates: list[tuple[int, int]] = field(default_factory=list)  # (sweep, n) per trace entry after the first

    @property
    def worst_db(self) -> float:
        return float(linear_to_db(self.worst_snr))

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "deployment": [float(v) for v in self.deployment],
            "worst_snr": self.worst_snr,
            "worst_db": self.worst_db,
            "worst_grid": [int(self.worst_grid[0]), int(self.worst_grid[1])],
            "trace": [float(v) for v in self.trace],
            "sweeps": self.sweeps,
        }
        if include_timing:
            out["wall_time_s"] = self.wall_time
        return out

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2)

    def trace_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["update", "sweep", "n", "worst_linear", "worst_db"])
            labels = [(0, -1)] + list(self.updates)
            for k, (value, (sweep, n)) in enumerate(zip(self.trace, labels)):
                writer.writerow([k, sweep, n, repr(float(value)), repr(float(linear_to_db(value)))])


def _others_snr(geom: Geometry, x_pos: np.ndarray, x_tilde: np.ndarray, n: int) -> np.ndarray:
    total = np.zeros_like(x_pos, dtype=float)
    for m, xm in enumerate(x_tilde):
        if m != n:
            total += g_term(geom, m, x_pos, xm)
    return total


def residual(geom: Geometry, active: ActiveSet, grid: GridField, x_tilde, n: int) -> ResidualField:
    _check_index(geom, n)
    x_tilde = np.asarray(x_tilde, dtype=float)
    cols = active.columns
    a_col = _others_snr(geom, grid.x[cols], x_tilde, n)
    pos = np.searchsorted(cols, active.u)
    return ResidualField(members=active.members, x=grid.x[active.u], A=a_col[pos], n=n)


def _column_residual(geom, active, grid, x_tilde, n) -> ResidualField:
    # one representative member per distinct column; the SNR does not depend on v
    cols = active.columns
    first = np.searchsorted(active.u, cols)
    x = grid.x[cols]
    return ResidualField(members=active.members[first], x=x, A=_others_snr(geom, x, x_tilde, n), n=n)


def half_widths(geom: Geometry, n: int, A, t: float, eps_d: float, cap: float | None = None) -> np.ndarray:
    """Vectorised ``d`` with ``A + g_n(d) = t``: ``inf`` when ``A >= t``, ``nan`` when unreachable.

    The returned value is the feasible end of a bisection bracket of width at
    most ``eps_d``, so ``A + g_n(d) >= t`` holds at it. With ``cap`` set, any
    half-width known to exceed ``cap`` is reported as ``cap``.
    """
    _check_index(geom, n)
    A = np.asarray(A, dtype=float)
    need = t - A
    out = np.full(A.shape, np.nan)
    out[need <= 0] = np.inf
    c = geom.c_n[n]
    solve = (need > 0) & (kernel(geom, c) >= need)
    if not solve.any():
        return out
    r = need[solve]
    lo = np.zeros_like(r)
    if cap is not None:
        wide = kernel(geom, cap * cap + c) >= r
        lo[wide] = cap
        hi = np.full_like(r, cap)
        todo = ~wide
    else:
        hi = np.full_like(r, max(math.sqrt(c), 1.0))
        while True:
            grow = kernel(geom, hi * hi + c) >= r
            if not grow.any():
                break
            lo[grow] = hi[grow]
            hi[grow] *= 2.0
        todo = np.ones(r.shape, dtype=bool)
    hi = np.where(todo, hi, lo)
    while np.any(hi - lo > eps_d):
        mid = 0.5 * (lo + hi)
        ok = kernel(geom, mid * mid + c) >= r
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    out[solve] = lo
    return out


def half_width(geom: Geometry, n: int, A: float, t: float, eps_d: float):
    """Scalar half-width: ``math.inf`` (whole axis), ``None`` (no feasible position) or ``d >= 0``."""
    d = float(half_widths(geom, n, np.array([A]), t, eps_d)[0])
    return None if math.isnan(d) else d


def feasible_set(geom: Geometry, res: ResidualField, t: float, eps_d: float | None = None) -> FeasInterval:
    """Positions of antenna ``res.n`` keeping every grid in ``res`` at level ``t`` or above."""
    eps_d = geom.params.eps_d if eps_d is None else eps_d
    d = half_widths(geom, res.n, res.A, t, eps_d, cap=geom.d_x)
    if np.isnan(d).any():
        return FeasInterval.empty_interval()
    lo = max(0.0, float(np.max(res.x - d)))
    hi = min(geom.d_x, float(np.min(res.x + d)))
    if lo > hi:
        return FeasInterval.empty_interval()
    return FeasInterval(lo, hi)


def worst_active_snr(geom: Geometry, grid: GridField, active: ActiveSet, x_tilde) -> tuple[float, tuple[int, int]]:
    gamma = column_snr(geom, grid.x, check_deployment(geom, x_tilde))
    per_member = gamma[active.u]
    k = int(np.argmin(per_member))
    u, v = active.members[k]
    return float(per_member[k]), (int(u), int(v))


def coordinate_update(
    geom: Geometry,
    active: ActiveSet,
    grid: GridField,
    x_tilde,
    n: int,
    eps_t: float | None = None,
    eps_d: float | None = None,
) -> tuple[float, float]:
    """Globally re-place antenna ``n`` for the worst active-grid SNR; returns (x, achieved level)."""
    eps_t = geom.params.eps_t if eps_t is None else eps_t
    eps_d = geom.params.eps_d if eps_d is None else eps_d
    x_tilde = np.asarray(x_tilde, dtype=float)
    x_cur = float(x_tilde[n])
    res = _column_residual(geom, active, grid, x_tilde, n)

    t_cur = float(np.min(res.A + g_term(geom, n, res.x, x_cur)))
    t_lo = t_cur
    t_hi = float(np.min(res.A)) + float(kernel(geom, geom.c_n[n]))
    best = feasible_set(geom, res, t_lo, eps_d)
    if best.empty:
        best = FeasInterval(x_cur, x_cur)
    while t_hi - t_lo > eps_t * t_lo:
        t = 0.5 * (t_lo + t_hi)
        interval = feasible_set(geom, res, t, eps_d)
        if interval.empty:
            t_hi = t
        else:
            t_lo, best = t, interval
    x_new = best.midpoint
    t_new = float(np.min(res.A + g_term(geom, n, res.x, x_new)))
    if t_new < t_cur:
        return x_cur, t_cur
    return x_new, t_new


def optimize_maxmin(
    geom: Geometry,
    grid: GridField,
    active: ActiveSet,
    x0=None,
    tmap=None,
    max_sweeps: int = 100,
    eps_t: float | None = None,
    eps_d: float | None = None,
) -> MaxMinReport:
    """Cyclic BCD from ``x0`` (default: hotspot-centre placement for ``tmap``).

    Stops once a full sweep raises the worst active-grid SNR by less than
    ``eps_t`` (relative) or after ``max_sweeps`` sweeps.
    """
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    eps_t = geom.params.eps_t if eps_t is None else eps_t
    if x0 is None:
        if tmap is None:
            raise ValueError("need an initial deployment or a traffic map")
        from .baselines import hotspot_center_deployment

        x0 = hotspot_center_deployment(tmap, geom)
    t0 = time.perf_counter()
    x = check_deployment(geom, x0).copy()
    current, _ = worst_active_snr(geom, grid, active, x)
    trace = [current]
    updates = []
    sweeps = 0
    for sweep in range(1, max_sweeps + 1):
        sweeps = sweep
        start = current
        for n in range(geom.n_antennas):
            previous = x[n]
            x[n], _ = coordinate_update(geom, active, grid, x, n, eps_t, eps_d)
            # the update's own level sums the antennas in a different order; keep
            # one evaluator for the trace so rounding cannot make it dip
            value, _ = worst_active_snr(geom, grid, active, x)
            if value < current:
                x[n] = previous
            else:
                current = value
            trace.append(current)
            updates.append((sweep, n))
        if current - start < eps_t * start:
            break
    wall = time.perf_counter() - t0
    worst, where = worst_active_snr(geom, grid, active, x)
    return MaxMinReport(
        deployment=x,
        worst_snr=worst,
        worst_grid=where,
        trace=trace,
        sweeps=sweeps,
        wall_time=wall,
        updates=updates,
    )
