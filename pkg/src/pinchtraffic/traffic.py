"""Gaussian-mixture traffic maps, their grid discretisation and the active set."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .scenario import SystemParams


class DegenerateMap(ValueError):
    """Raised when a traffic map puts (numerically) no mass inside the region."""


@dataclass(frozen=True)
class Hotspot:
    alpha: float
    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("hotspot weight must be >= 0")
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ValueError("hotspot standard deviations must be > 0")


@dataclass(frozen=True)
class TrafficMap:
    hotspots: tuple[Hotspot, ...]

    def __post_init__(self):
        object.__setattr__(self, "hotspots", tuple(self.hotspots))
        if not self.hotspots:
            raise ValueError("a traffic map needs at least one hotspot")
        total = math.fsum(h.alpha for h in self.hotspots)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"hotspot weights sum to {total!r}, expected 1")

    def __len__(self):
        return len(self.hotspots)

    @classmethod
    def from_list(cls, items: Iterable[dict], normalize: bool = False) -> "TrafficMap":
        spots = [Hotspot(**{k: float(v) for k, v in item.items()}) for item in items]
        if normalize:
            total = math.fsum(h.alpha for h in spots)
            spots = [Hotspot(h.alpha / total, h.mu_x, h.mu_y, h.sigma_x, h.sigma_y) for h in spots]
        return cls(tuple(spots))

    def to_list(self) -> list[dict]:
        return [asdict(h) for h in self.hotspots]

    def sorted_by_weight(self) -> list[Hotspot]:
        """Hotspots by descending weight; ties keep list order."""
        return sorted(self.hotspots, key=lambda h: -h.alpha)


def pdf(tmap: TrafficMap, x, y):
    """Mixture density at ``(x, y)`` (broadcasts over arrays)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    total = np.zeros(np.broadcast(x, y).shape)
    for h in tmap.hotspots:
        zx = (x - h.mu_x) / h.sigma_x
        zy = (y - h.mu_y) / h.sigma_y
        total = total + h.alpha * np.exp(-0.5 * (zx * zx + zy * zy)) / (
            2.0 * math.pi * h.sigma_x * h.sigma_y
        )
    return total


@dataclass(frozen=True, eq=False)
class GridField:
    """Grid centres and normalised per-cell traffic probabilities ``p[u, v]``."""

    x: np.ndarray
    y: np.ndarray
    p: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.p.shape

    @cached_property
    def p_col(self) -> np.ndarray:
        """Traffic mass per horizontal column, ``sum_v p[u, v]``.

        Average SNR depends on a cell only through ``x_u``, so every per-grid sum
        collapses onto these column weights.
        """
        return self.p.sum(axis=1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["u", "v", "x", "y", "p"])
            for u, xu in enumerate(self.x):
                for v, yv in enumerate(self.y):
                    writer.writerow([u, v, repr(float(xu)), repr(float(yv)), repr(float(self.p[u, v]))])


def grid_centers(params: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    du = params.d_x / params.n_h
    dv = params.d_y / params.n_v
    x = (np.arange(params.n_h) + 0.5) * du
    y = -params.d_y / 2.0 + (np.arange(params.n_v) + 0.5) * dv
    return x, y


def discretize(tmap: TrafficMap, params: SystemParams) -> GridField:
    x, y = grid_centers(params)
    cell_area = (params.d_x / params.n_h) * (params.d_y / params.n_v)
    raw = pdf(tmap, x[:, None], y[None, :]) * cell_area
    total = raw.sum()
    if not total > 0 or not np.isfinite(total):
        raise DegenerateMap("traffic map has no mass on the grid")
    p = raw / total
    for arr in (x, y, p):
        arr.setflags(write=False)
    return GridField(x=x, y=y, p=p)


@dataclass(frozen=True, eq=False)
class ActiveSet:
    """Grid cells whose traffic weight reaches ``p_th``; ``members`` is (K, 2) of (u, v)."""

    members: np.ndarray
    p_th: float

    def __len__(self):
        return len(self.members)

    @property
    def u(self) -> np.ndarray:
        return self.members[:, 0]

    @cached_property
    def columns(self) -> np.ndarray:
        """Distinct horizontal indices covered by the active set (sorted)."""
        return np.unique(self.members[:, 0])


def active_set(grid: GridField, tau: float) -> ActiveSet:
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    p_th = tau * float(grid.p.max())
    members = np.argwhere(grid.p >= p_th)
    return ActiveSet(members=members, p_th=p_th)


def sample_random_map(rng_seed, params: SystemParams, n_hotspots: int | None = None) -> TrafficMap:
    """Random map with uniform centres and a shared diagonal covariance.

    Weights are drawn from uniform(0, 1] and normalised; the covariance is
    ``diag((0.15 D_x)^2, (0.2 D_y)^2)``.
    """
    L = params.n_hotspots if n_hotspots is None else n_hotspots
    if L < 1:
        raise ValueError("need at least one hotspot")
    rng = np.random.default_rng(rng_seed)
    mu_x = rng.uniform(0.0, params.d_x, size=L)
    mu_y = rng.uniform(-params.d_y / 2.0, params.d_y / 2.0, size=L)
    weights = 1.0 - rng.random(L)  # (0, 1]
    weights = weights / weights.sum()
    # exact renormalisation so the TrafficMap invariant holds to 1e-12
    weights[-1] = 1.0 - math.fsum(weights[:-1])
    sx = 0.15 * params.d_x
    sy = 0.2 * params.d_y
    return TrafficMap(
        tuple(
            Hotspot(float(a), float(mx), float(my), sx, sy)
            for a, mx, my in zip(weights, mu_x, mu_y)
        )
    )


def map_from_centers(centers: Sequence[tuple[float, float]], weights, sigma_x, sigma_y) -> TrafficMap:
    """Convenience constructor for hand-built maps (weights are normalised)."""
    items = [
        dict(alpha=a, mu_x=cx, mu_y=cy, sigma_x=sigma_x, sigma_y=sigma_y)
        for a, (cx, cy) in zip(weights, centers)
    ]
    return TrafficMap.from_list(items, normalize=True)
