"""Candidate-based global maximisation of the traffic-weighted network average SNR.

The objective separates into per-waveguide terms ``f_n``. Each ``f_n`` is
maximised by bracketing sign changes of ``f_n'`` on a coarse grid, bisecting
every bracket, classifying the roots, and comparing ``f_n`` over the resulting
local maxima, the (clipped) hotspot x-centres and the two endpoints.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import weighted_gain, weighted_gain_slope
from .scenario import Geometry, _check_index, linear_to_db
from .traffic import GridField, TrafficMap

LOCAL_MAX = "local-max"
LOCAL_MIN = "local-min"
FLAT = "flat-undetermined"


class InvalidBracket(ValueError):
    pass


@dataclass
class StationaryPoint:
    x: float
    kind: str
    bracket: tuple[float, float]
    f_value: float

    def to_dict(self) -> dict:
        return {"x": self.x, "kind": self.kind, "bracket": list(self.bracket), "f_value": self.f_value}


@dataclass
class WaveguideResult:
    n: int
    chosen_x: float
    chosen_f: float
    candidates: list[StationaryPoint] = field(default_factory=list)
    # interior samples where |f'| dips without a sign change: a pair of roots
    # may hide between the coarse samples there
    unresolved_dips: int = 0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "chosen_x": self.chosen_x,
            "chosen_f": self.chosen_f,
            "chosen_f_db": float(linear_to_db(self.chosen_f)),
            "candidates": [c.to_dict() for c in self.candidates],
            "unresolved_dips": self.unresolved_dips,
        }


@dataclass
class AvgOptReport:
    deployment: np.ndarray
    objective: float
    per_n: list[WaveguideResult]
    wall_time: float

    @property
    def objective_db(self) -> float:
        return float(linear_to_db(self.objective))

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "deployment": [float(v) for v in self.deployment],
            "objective": self.objective,
            "objective_db": self.objective_db,
            "per_n": [r.to_dict() for r in self.per_n],
        }
        if include_timing:
            out["wall_time_s"] = self.wall_time
        return out

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2)


def bracket_sign_changes(f_prime: Callable, a: float, b: float, J: int) -> list[tuple[float, float]]:
    """Brackets ``[x_j, x_{j+1}]`` over ``J`` uniform subintervals where ``f_prime`` flips sign.

    ``f_prime`` is called once on the array of ``J + 1`` sample points. A sample
    where ``f_prime`` is exactly zero is returned as the zero-width bracket ``(x_j, x_j)``.
    """
    if not a < b or J < 1:
        raise ValueError("need a < b and J >= 1")
    xs = np.linspace(a, b, J + 1)
    return _brackets_from_samples(xs, np.asarray(f_prime(xs), dtype=float))


def _brackets_from_samples(xs, h, with_values=False):
    out = []
    last = len(xs) - 1
    for j in range(last + 1):
        if h[j] == 0.0:
            out.append(((float(xs[j]), float(xs[j])), (0.0, 0.0)))
        elif j < last and h[j] * h[j + 1] < 0.0:
            out.append(((float(xs[j]), float(xs[j + 1])), (float(h[j]), float(h[j + 1]))))
    return out if with_values else [br for br, _ in out]


def bisect_roots(f_prime: Callable, brackets, eps_d: float, end_values=None, indexed: bool = False) -> np.ndarray:
    """Bisect several brackets in lockstep until each has width <= eps_d; return midpoints.

    ``f_prime`` is called on arrays holding one point per bracket. The update
    keeps ``[a, c]`` when ``h(a) h(c) <= 0`` and ``[c, b]`` otherwise.
    ``end_values`` may carry the already-sampled ``(h(a), h(b))`` pairs; near a
    flat stationary point a fresh evaluation can differ from the sample in its
    last bits and hence in sign. With ``indexed`` set, ``f_prime(x, idx)`` also
    receives the bracket index of every point, so each bracket may carry its
    own function.
    """
    if len(brackets) == 0:
        return np.empty(0)
    ab = np.asarray(brackets, dtype=float).reshape(-1, 2)
    a = ab[:, 0].copy()
    b = ab[:, 1].copy()
    if np.any(b < a):
        raise InvalidBracket("bracket with b < a")
    everyone = np.arange(a.size)
    call = (lambda x, idx: f_prime(x, idx)) if indexed else (lambda x, idx: f_prime(x))
    if end_values is None:
        ha = np.asarray(call(a, everyone), dtype=float).reshape(-1)
        hb = np.asarray(call(b, everyone), dtype=float).reshape(-1)
    else:
        ends = np.asarray(end_values, dtype=float).reshape(-1, 2)
        ha, hb = ends[:, 0].copy(), ends[:, 1].copy()
    if np.any((ha * hb > 0) & (b > a)):
        raise InvalidBracket("f' does not change sign across a bracket")
    # a zero at the left end: collapse so the loop below leaves it alone
    b = np.where(ha == 0.0, a, b)
    a = np.where((hb == 0.0) & (ha != 0.0), b, a)
    while True:
        live = (b - a) > eps_d
        if not live.any():
            break
        c = 0.5 * (a + b)
        idx = np.flatnonzero(live)
        hc = np.asarray(call(c[live], idx), dtype=float).reshape(-1)
        left = ha[live] * hc <= 0.0
        b[idx[left]] = c[idx[left]]
        a[idx[~left]] = c[idx[~left]]
        ha[idx[~left]] = hc[~left]
    return 0.5 * (a + b)


def bisect_root(f_prime: Callable, bracket: tuple[float, float], eps_d: float) -> float:
    a, b = bracket
    if a == b:
        return float(a)
    return float(bisect_roots(f_prime, [bracket], eps_d)[0])


def classify(f_prime: Callable, root: float, probe: float) -> str:
    """Label a stationary point by the sign of ``f_prime`` at ``root -/+ probe``."""
    left, right = np.asarray(f_prime(np.array([root - probe, root + probe])), dtype=float)
    if left > 0 and right < 0:
        return LOCAL_MAX
    if left < 0 and right > 0:
        return LOCAL_MIN
    return FLAT


def _classify_many(f_prime, roots, probe):
    if len(roots) == 0:
        return []
    roots = np.asarray(roots)
    h = np.asarray(f_prime(np.concatenate([roots - probe, roots + probe])), dtype=float)
    left, right = h[: roots.size], h[roots.size:]
    kinds = np.full(roots.size, FLAT, dtype=object)
    kinds[(left > 0) & (right < 0)] = LOCAL_MAX
    kinds[(left < 0) & (right > 0)] = LOCAL_MIN
    return list(kinds)


def search_intervals(tmap: TrafficMap, d_x: float) -> list[tuple[float, float]]:
    """Adjacent intervals between 0, the sorted clipped hotspot x-centres and D_x."""
    centers = np.clip([h.mu_x for h in tmap.hotspots], 0.0, d_x)
    points = np.unique(np.concatenate([[0.0], centers, [d_x]]))
    return [(float(lo), float(hi)) for lo, hi in zip(points[:-1], points[1:]) if hi > lo]


def _count_dips(h: np.ndarray) -> int:
    mag = np.abs(h)
    same = h[:-2] * h[2:] > 0
    same &= h[:-2] * h[1:-1] > 0
    return int(np.sum(same & (mag[1:-1] < mag[:-2]) & (mag[1:-1] < mag[2:])))


def optimize_waveguide(
    geom: Geometry,
    grid: GridField,
    tmap: TrafficMap,
    n: int,
    J: int | None = None,
    eps_d: float | None = None,
    probe: float | None = None,
) -> WaveguideResult:
    """Globally maximise ``f_n`` over the candidate set built from stationary points."""
    _check_index(geom, n)
    return _solve(geom, grid, tmap, [n], J, eps_d, probe)[0]


def _solve(geom, grid, tmap, ns, J, eps_d, probe) -> list[WaveguideResult]:
    """Candidate search for several waveguides at once.

    The per-waveguide problems are independent; batching them only shares the
    derivative evaluations (each point carries its waveguide's ``C_n``).
    """
    J = geom.params.j_subintervals if J is None else J
    if J < 1:
        raise ValueError("J must be >= 1")
    eps_d = geom.params.eps_d if eps_d is None else eps_d
    probe = eps_d if probe is None else probe
    d_x = geom.d_x
    c_of = geom.c_n[np.asarray(ns, dtype=int)]

    intervals = search_intervals(tmap, d_x)
    xs = np.concatenate([np.linspace(lo, hi, J + 1) for lo, hi in intervals])
    h_all = weighted_gain_slope(geom, grid, c_of[:, None], np.broadcast_to(xs, (len(ns), xs.size)))

    brackets, ends, owner, dips = [], [], [], []
    for k in range(len(ns)):
        found = {}
        count = 0
        for i in range(len(intervals)):
            seg = slice(i * (J + 1), (i + 1) * (J + 1))
            h = h_all[k, seg]
            count += _count_dips(h)
            # a root sitting exactly on a shared interval end appears twice
            found.update(_brackets_from_samples(xs[seg], h, with_values=True))
        for br in sorted(found):
            brackets.append(br)
            ends.append(found[br])
            owner.append(k)
        dips.append(count)
    owner = np.asarray(owner, dtype=int)

    def fp(x, idx):
        return weighted_gain_slope(geom, grid, c_of[owner[idx]], x)

    roots = bisect_roots(fp, brackets, eps_d, end_values=ends, indexed=True)
    if roots.size:
        probes = fp(np.concatenate([roots - probe, roots + probe]), np.concatenate([np.arange(roots.size)] * 2))
        left, right = probes[: roots.size], probes[roots.size:]
        kinds = np.full(roots.size, FLAT, dtype=object)
        kinds[(left > 0) & (right < 0)] = LOCAL_MAX
        kinds[(left < 0) & (right > 0)] = LOCAL_MIN
    else:
        kinds = np.empty(0, dtype=object)
    root_x = np.clip(roots, 0.0, d_x)
    fixed = np.unique(np.concatenate([np.clip([h.mu_x for h in tmap.hotspots], 0.0, d_x), [0.0, d_x]]))
    # one batched evaluation of f at every stationary point and fixed candidate
    pts = np.concatenate([root_x, np.tile(fixed, len(ns))])
    pt_c = np.concatenate([c_of[owner], np.repeat(c_of, fixed.size)])
    vals = weighted_gain(geom, grid, pt_c, pts)
    root_f, fixed_f = vals[: roots.size], vals[roots.size:].reshape(len(ns), fixed.size)

    results = []
    for k, n in enumerate(ns):
        mine = np.flatnonzero(owner == k)
        stationary = [
            StationaryPoint(float(roots[j]), str(kinds[j]), brackets[j], float(root_f[j])) for j in mine
        ]
        keep = mine[kinds[mine] != LOCAL_MIN] if mine.size else mine
        cand_x = np.concatenate([root_x[keep], fixed])
        values = np.concatenate([root_f[keep], fixed_f[k]])
        best = int(np.argmax(values))
        results.append(
            WaveguideResult(
                n=int(n),
                chosen_x=float(cand_x[best]),
                chosen_f=float(values[best]),
                candidates=stationary,
                unresolved_dips=dips[k],
            )
        )
    return results


def optimize_average(
    geom: Geometry,
    grid: GridField,
    tmap: TrafficMap,
    J: int | None = None,
    eps_d: float | None = None,
    order=None,
) -> AvgOptReport:
    """Solve every per-waveguide problem and assemble the deployment.

    ``order`` optionally permutes the processing order of the waveguides.
    """
    t0 = time.perf_counter()
    order = list(range(geom.n_antennas)) if order is None else [int(n) for n in order]
    if sorted(order) != list(range(geom.n_antennas)):
        raise ValueError("order must be a permutation of the waveguide indices")
    results = dict(zip(order, _solve(geom, grid, tmap, order, J, eps_d, None)))
    wall = time.perf_counter() - t0
    per_n = [results[n] for n in range(geom.n_antennas)]
    deployment = np.array([r.chosen_x for r in per_n])
    objective = float(sum(r.chosen_f for r in per_n))
    return AvgOptReport(deployment=deployment, objective=objective, per_n=per_n, wall_time=wall)
