"""Monte-Carlo experiment driver: algorithm comparison, parameter sweeps and the top-view case.

Rows follow the CSV header in ``CSV_HEADER``. ``objective_db`` is the metric the
experiment optimises (network average SNR, or worst active-grid SNR for the
max-min experiments); ``worst_db`` is always the worst active-grid SNR of the
deployment.
"""

from __future__ import annotations

import csv
import json
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import (
    exhaustive_average,
    fixed_array_deployment,
    hotspot_center_deployment,
    projected_gradient_average,
)
from .channel import column_snr, mc_oracle, network_objective
from .opt_average import optimize_average
from .opt_maxmin import optimize_maxmin, worst_active_snr
from .scenario import SystemParams, derive_geometry, linear_to_db
from .traffic import TrafficMap, active_set, discretize, map_from_centers, sample_random_map

CSV_HEADER = [
    "experiment",
    "trial_seed",
    "sweep_var",
    "sweep_value",
    "method",
    "objective_db",
    "worst_db",
    "wall_time_s",
]
EXPERIMENT_KINDS = ("alg-compare", "sweep-N", "sweep-Dx", "sweep-tau", "timing", "topview")
SWEEP_VARS = {"sweep-N": "n", "sweep-Dx": "d_x", "sweep-tau": "tau"}
DESK_PARAMS = SystemParams(n_h=100, n_v=60)


@dataclass
class ExperimentSpec:
    kind: str
    trials: int = 20
    seed: int = 0
    sweep_values: list = field(default_factory=list)
    objective: str = "avg"  # "avg" | "maxmin"
    methods: tuple = ()
    params: SystemParams = DESK_PARAMS
    delta_div: float = 5.0  # exhaustive step = wavelength / delta_div
    k_max: int = 30
    max_sweeps: int = 100
    include_timing: bool = True
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.objective not in ("avg", "maxmin"):
            raise ValueError("objective must be 'avg' or 'maxmin'")
        values = list(self.sweep_values)
        if self.kind in SWEEP_VARS and not values:
            raise ValueError("a sweep needs at least one value")
        if values != sorted(values):
            raise ValueError("sweep values must be sorted")
        if self.kind == "sweep-N":
            values = [int(v) for v in values]
        self.sweep_values = values


@dataclass
class ResultRow:
    experiment: str
    trial_seed: int
    sweep_var: str
    sweep_value: float
    method: str
    objective_db: float
    worst_db: float
    wall_time_s: float

    def as_list(self, include_timing: bool = True) -> list:
        return [
            self.experiment,
            self.trial_seed,
            self.sweep_var,
            _fmt(self.sweep_value),
            self.method,
            _fmt(self.objective_db),
            _fmt(self.worst_db),
            _fmt(self.wall_time_s if include_timing else 0.0),
        ]


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def trial_seeds(seed: int, trials: int) -> list[int]:
    """Independent per-trial seeds spawned from one root seed."""
    return [int(s.generate_state(1, dtype=np.uint32)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]


def _db(value: float) -> float:
    return float(linear_to_db(value))


def _run_trials(spec: ExperimentSpec, fn) -> list[ResultRow]:
    seeds = trial_seeds(spec.seed, spec.trials)
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(fn, [spec] * len(seeds), seeds))
    else:
        chunks = [fn(spec, s) for s in seeds]
    return [row for chunk in chunks for row in chunk]


def _alg_compare_trial(spec: ExperimentSpec, trial_seed: int) -> list[ResultRow]:
    rows = []
    values = spec.sweep_values or [spec.params.n_antennas]
    for n_ant in values:
        params = spec.params.replace(n_antennas=int(n_ant))
        geom = derive_geometry(params)
        tmap = sample_random_map(trial_seed, params)
        grid = discretize(tmap, params)
        act = active_set(grid, params.tau)
        methods = spec.methods or ("proposed", "exhaustive", "pg")
        for method in methods:
            if method == "proposed":
                rep = optimize_average(geom, grid, tmap)
                dep, obj, wall = rep.deployment, rep.objective, rep.wall_time
            elif method == "exhaustive":
                res = exhaustive_average(geom, grid, geom.wavelength / spec.delta_div)
                dep, obj, wall = res.deployment, res.objective, res.wall_time
            elif method == "pg":
                res = projected_gradient_average(geom, grid, k_max=spec.k_max)
                dep, obj, wall = res.deployment, res.objective, res.wall_time
            else:
                raise ValueError(f"unknown method {method!r} for alg-compare")
            worst, _ = worst_active_snr(geom, grid, act, dep)
            rows.append(ResultRow(spec.kind, trial_seed, "n", int(n_ant), method, _db(obj), _db(worst), wall))
    return rows


def run_alg_compare(spec: ExperimentSpec) -> list[ResultRow]:
    """Proposed vs exhaustive vs projected-gradient on the network-average objective."""
    return _run_trials(spec, _alg_compare_trial)


def _sweep_trial(spec: ExperimentSpec, trial_seed: int) -> list[ResultRow]:
    var = SWEEP_VARS[spec.kind]
    methods = spec.methods or ("proposed", "hotspot-center", "fixed-array")
    rows = []
    for value in spec.sweep_values:
        change = {"n": {"n_antennas": int(value)}, "d_x": {"d_x": float(value)}, "tau": {"tau": float(value)}}[var]
        params = spec.params.replace(**change)
        geom = derive_geometry(params)
        tmap = sample_random_map(trial_seed, params)
        grid = discretize(tmap, params)
        act = active_set(grid, params.tau)
        for method in methods:
            t0 = time.perf_counter()
            if method == "proposed":
                if spec.objective == "avg":
                    dep = optimize_average(geom, grid, tmap).deployment
                else:
                    dep = optimize_maxmin(geom, grid, act, tmap=tmap, max_sweeps=spec.max_sweeps).deployment
            elif method == "hotspot-center":
                dep = hotspot_center_deployment(tmap, geom)
            elif method == "fixed-array":
                dep = fixed_array_deployment(geom)
            elif method == "pg":
                dep = projected_gradient_average(geom, grid, k_max=spec.k_max).deployment
            else:
                raise ValueError(f"unknown method {method!r} for sweeps")
            wall = time.perf_counter() - t0
            worst, _ = worst_active_snr(geom, grid, act, dep)
            avg = network_objective(geom, grid, dep)
            objective = avg if spec.objective == "avg" else worst
            rows.append(ResultRow(f"{spec.kind}-{spec.objective}", trial_seed, var, value, method,
                                  _db(objective), _db(worst), wall))
    return rows


def run_sweep(spec: ExperimentSpec) -> list[ResultRow]:
    """Proposed vs hotspot-centre vs fixed array over N, D_x or tau."""
    if spec.kind not in SWEEP_VARS:
        raise ValueError(f"{spec.kind!r} is not a sweep")
    return _run_trials(spec, _sweep_trial)


def default_topview_map(params: SystemParams) -> TrafficMap:
    """Fixed asymmetric four-hotspot field used for the single-waveguide top view."""
    dx, dy = params.d_x, params.d_y
    return map_from_centers(
        [(0.2 * dx, -0.25 * dy), (0.35 * dx, 0.2 * dy), (0.75 * dx, 0.3 * dy), (0.9 * dx, -0.3 * dy)],
        weights=[0.45, 0.25, 0.2, 0.1],
        sigma_x=0.08 * dx,
        sigma_y=0.1 * dy,
    )


def run_topview(spec: ExperimentSpec, out_dir, tmap: TrafficMap | None = None) -> dict:
    """Single waveguide on y = 0: heatmap CSV plus both optimised positions as JSON.

    Writes ``topview_grid.csv`` and ``topview.json`` into ``out_dir`` and returns
    the JSON payload.
    """
    params = spec.params.replace(n_antennas=1)
    geom = derive_geometry(params)
    tmap = default_topview_map(params) if tmap is None else tmap
    grid = discretize(tmap, params)
    act = active_set(grid, params.tau)
    avg = optimize_average(geom, grid, tmap)
    mm = optimize_maxmin(geom, grid, act, tmap=tmap, max_sweeps=spec.max_sweeps)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid.to_csv(out_dir / "topview_grid.csv")
    payload = {
        "seed": spec.seed,
        "d_x": params.d_x,
        "d_y": params.d_y,
        "tau": params.tau,
        "p_th": act.p_th,
        "hotspots": tmap.to_list(),
        "x_avg": float(avg.deployment[0]),
        "x_maxmin": float(mm.deployment[0]),
        "avg_objective_db": avg.objective_db,
        "maxmin_worst_db": mm.worst_db,
        "avg_solution_worst_db": _db(worst_active_snr(geom, grid, act, avg.deployment)[0]),
        "maxmin_solution_avg_db": _db(network_objective(geom, grid, mm.deployment)),
    }
    (out_dir / "topview.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return payload


def write_rows_csv(rows: list[ResultRow], dest, include_timing: bool = True) -> None:
    """Write rows with ``CSV_HEADER`` to a path or an open text stream."""
    if hasattr(dest, "write"):
        _write_rows(csv.writer(dest, lineterminator="\n"), rows, include_timing)
        return
    with open(dest, "w", newline="") as fh:
        _write_rows(csv.writer(fh, lineterminator="\n"), rows, include_timing)


def _write_rows(writer, rows, include_timing):
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_list(include_timing))


def summarize(rows: list[ResultRow]) -> list[dict]:
    """Per (experiment, sweep value, method) means across trials.

    ``*_mean_lin_db`` averages in linear scale then converts; ``*_mean_db``
    averages the dB values directly.
    """
    groups = defaultdict(list)
    order = []
    for row in rows:
        key = (row.experiment, row.sweep_var, row.sweep_value, row.method)
        if key not in groups:
            order.append(key)
        groups[key].append(row)
    out = []
    for key in sorted(order, key=lambda k: (k[0], k[1], k[2], order.index(k))):
        group = groups[key]
        obj = np.array([r.objective_db for r in group])
        worst = np.array([r.worst_db for r in group])
        out.append(
            {
                "experiment": key[0],
                "sweep_var": key[1],
                "sweep_value": key[2],
                "method": key[3],
                "trials": len(group),
                "objective_mean_lin_db": _db(np.mean(10.0 ** (obj / 10.0))),
                "objective_mean_db": float(np.mean(obj)),
                "worst_mean_lin_db": _db(np.mean(10.0 ** (worst / 10.0))),
                "worst_mean_db": float(np.mean(worst)),
                "wall_time_mean_s": float(np.mean([r.wall_time_s for r in group])),
            }
        )
    return out


def write_summary_csv(summary: list[dict], path, include_timing: bool = True) -> None:
    if not summary:
        return
    keys = list(summary[0])
    if not include_timing:
        keys.remove("wall_time_mean_s")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(keys)
        for item in summary:
            writer.writerow([_fmt(item[k]) if not isinstance(item[k], str) else item[k] for k in keys])


@dataclass
class ValidationCase:
    x_cell: float
    deployment: np.ndarray
    closed_form: float
    mc_mean: float
    mc_stderr: float

    @property
    def z(self) -> float:
        return abs(self.mc_mean - self.closed_form) / self.mc_stderr

    @property
    def passed(self) -> bool:
        return self.z <= 3.0


def run_validation(params: SystemParams, cases: int = 10, samples: int = 100_000, seed: int = 0) -> list[ValidationCase]:
    """Closed-form average SNR vs fading Monte-Carlo at random (deployment, grid column) pairs."""
    geom = derive_geometry(params)
    rng = np.random.default_rng(seed)
    out = []
    for child in np.random.SeedSequence(seed).spawn(cases):
        dep = rng.uniform(0.0, params.d_x, geom.n_antennas)
        u = int(rng.integers(params.n_h))
        x_cell = (u + 0.5) * params.d_x / params.n_h
        exact = float(column_snr(geom, np.array([x_cell]), dep)[0])
        mean, se = mc_oracle(geom, x_cell, dep, samples, int(child.generate_state(1)[0]))
        out.append(ValidationCase(x_cell, dep, exact, mean, se))
    return out


def run(spec: ExperimentSpec) -> list[ResultRow]:
    if spec.kind in ("alg-compare", "timing"):
        return run_alg_compare(spec)
    if spec.kind in SWEEP_VARS:
        return run_sweep(spec)
    raise ValueError("use run_topview for the top-view experiment")


def finite_rows(rows: list[ResultRow]) -> bool:
    return all(math.isfinite(v) for r in rows for v in (r.objective_db, r.worst_db, r.wall_time_s))
