"""Average-SNR kernels, the per-waveguide objectives ``f_n`` and a fading Monte-Carlo check.

All SNR values are linear. A deployment is a length-N float array of antenna
x-coordinates in ``[0, D_x]``.
"""

from __future__ import annotations

import csv

import numpy as np

from .scenario import Geometry, _check_index, distance_sq, linear_to_db
from .traffic import GridField

_CHUNK = 4096


class ShapeMismatch(ValueError):
    pass


def check_deployment(geom: Geometry, x_tilde) -> np.ndarray:
    x = np.asarray(x_tilde, dtype=float).reshape(-1)
    if x.shape != (geom.n_antennas,):
        raise ValueError(f"deployment has {x.size} entries, expected {geom.n_antennas}")
    if np.any(x < 0) or np.any(x > geom.d_x) or not np.all(np.isfinite(x)):
        raise ValueError("deployment leaves the box [0, D_x]")
    return x


def kernel(geom: Geometry, s):
    """Average SNR delivered over squared distance ``s``: rho (eta e^{-beta s} + mu^2) / s."""
    return geom.rho * (geom.eta * np.exp(-geom.beta * s) + geom.mu2) / s


def kernel_slope(geom: Geometry, s):
    """``-d kernel / d s`` (positive)."""
    e = geom.eta * np.exp(-geom.beta * s)
    return geom.rho * (e * (geom.beta * s + 1.0) + geom.mu2) / (s * s)


def g_term(geom: Geometry, n: int, x_grid, x_ant):
    """Contribution of antenna ``n`` at ``x_ant`` to the average SNR of grid points at ``x_grid``."""
    return kernel(geom, distance_sq(geom, n, x_grid, x_ant))


def column_snr(geom: Geometry, x_cols, x_tilde) -> np.ndarray:
    """Average SNR at horizontal positions ``x_cols`` (independent of the grid row)."""
    x_cols = np.asarray(x_cols, dtype=float)
    total = np.zeros_like(x_cols)
    for n, xn in enumerate(x_tilde):
        total += g_term(geom, n, x_cols, xn)
    return total


def avg_snr_grid(geom: Geometry, grid: GridField, x_tilde) -> np.ndarray:
    """Closed-form local average SNR for every grid cell, shape (N_h, N_v)."""
    x_tilde = check_deployment(geom, x_tilde)
    col = column_snr(geom, grid.x, x_tilde)
    return np.repeat(col[:, None], grid.y.size, axis=1)


def network_avg(snr: np.ndarray, grid: GridField) -> float:
    snr = np.asarray(snr)
    if snr.shape != grid.p.shape:
        raise ShapeMismatch(f"SNR field {snr.shape} vs grid {grid.p.shape}")
    return float(np.sum(grid.p * snr))


def weighted_gain(geom: Geometry, grid: GridField, c, x):
    """Traffic-weighted kernel sum at antenna positions ``x`` with per-point constants ``c``.

    ``c`` broadcasts against ``x``; ``f_n`` is the special case ``c = C_n``.
    """
    return _weighted(geom, grid, c, x, slope=False)


def weighted_gain_slope(geom: Geometry, grid: GridField, c, x):
    """Derivative of ``weighted_gain`` with respect to ``x``."""
    return _weighted(geom, grid, c, x, slope=True)


def _weighted(geom, grid, c, x, slope):
    x = np.asarray(x, dtype=float)
    c_full = np.broadcast_to(np.asarray(c, dtype=float), x.shape).reshape(-1)
    xu, pu = grid.x, grid.p_col
    flat = x.reshape(-1)

    def fun(lo, hi):
        diff = xu[None, :] - flat[lo:hi, None]
        s = diff * diff + c_full[lo:hi, None]
        if slope:
            return (2.0 * diff * kernel_slope(geom, s)) @ pu
        return kernel(geom, s) @ pu

    if flat.size <= _CHUNK:
        out = fun(0, flat.size)
    else:
        out = np.concatenate([fun(i, i + _CHUNK) for i in range(0, flat.size, _CHUNK)])
    return out.reshape(x.shape) if x.ndim else float(out[0])


def f_n(geom: Geometry, grid: GridField, n: int, x):
    """Traffic-weighted average SNR contributed by waveguide ``n`` with its antenna at ``x``."""
    _check_index(geom, n)
    return weighted_gain(geom, grid, geom.c_n[n], x)


def f_n_prime(geom: Geometry, grid: GridField, n: int, x):
    """Analytic derivative of ``f_n`` with respect to the antenna position."""
    _check_index(geom, n)
    return weighted_gain_slope(geom, grid, geom.c_n[n], x)


def network_objective(geom: Geometry, grid: GridField, x_tilde) -> float:
    """``sum_n f_n(x_n)``; equal to ``network_avg(avg_snr_grid(...))``."""
    x_tilde = check_deployment(geom, x_tilde)
    return float(sum(f_n(geom, grid, n, xn) for n, xn in enumerate(x_tilde)))


def mc_oracle(geom: Geometry, x_cell: float, x_tilde, n_samples: int, rng_seed) -> tuple[float, float]:
    """Sample the instantaneous SNR at a grid point under random LoS/NLoS fading.

    Each antenna contributes ``|xi h_los + h_nlos|^2`` with ``xi ~ Bernoulli(e^{-beta r^2})``,
    ``|h_los|^2 = eta / r^2`` with a uniform phase and ``h_nlos ~ CN(0, mu^2 / r^2)``.
    Returns the sample mean and its standard error.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x_tilde = np.asarray(x_tilde, dtype=float)
    r2 = np.array([distance_sq(geom, n, x_cell, xn) for n, xn in enumerate(x_tilde)])
    p_los = np.exp(-geom.beta * r2)
    los_amp = np.sqrt(geom.eta / r2)
    nlos_std = np.sqrt(geom.mu2 / r2 / 2.0)  # per real dimension

    rng = np.random.Generator(np.random.Philox(rng_seed))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        m = min(_CHUNK * 16, n_samples - done)
        xi = rng.random((m, r2.size)) < p_los
        phase = rng.uniform(0.0, 2.0 * np.pi, size=(m, r2.size))
        nlos = rng.standard_normal((m, r2.size, 2)) * nlos_std[:, None]
        re = xi * los_amp * np.cos(phase) + nlos[..., 0]
        im = xi * los_amp * np.sin(phase) + nlos[..., 1]
        snr = geom.rho * np.sum(re * re + im * im, axis=1)
        total += snr.sum()
        total_sq += np.dot(snr, snr)
        done += m
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    return float(mean), float(np.sqrt(var / n_samples))


def snr_to_csv(path, grid: GridField, snr: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["u", "v", "x", "y", "gamma_linear", "gamma_db"])
        for u, xu in enumerate(grid.x):
            for v, yv in enumerate(grid.y):
                g = float(snr[u, v])
                writer.writerow([u, v, repr(float(xu)), repr(float(yv)), repr(g), repr(float(linear_to_db(g)))])
