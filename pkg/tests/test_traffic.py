import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinchtraffic.scenario import SystemParams
from pinchtraffic.traffic import (
    DegenerateMap,
    Hotspot,
    TrafficMap,
    active_set,
    discretize,
    grid_centers,
    map_from_centers,
    pdf,
    sample_random_map,
)

from conftest import grid_from_columns


def test_pdf_mode_value():
    tmap = map_from_centers([(10.0, 5.0)], [1.0], 3.0, 7.0)
    assert pdf(tmap, 10.0, 5.0) == pytest.approx(1.0 / (2 * math.pi * 3.0 * 7.0), rel=1e-12)


def test_pdf_duplicate_hotspots_collapse():
    one = map_from_centers([(10.0, 5.0)], [1.0], 3.0, 7.0)
    two = map_from_centers([(10.0, 5.0), (10.0, 5.0)], [1.0, 1.0], 3.0, 7.0)
    xs, ys = np.meshgrid(np.linspace(0, 60, 13), np.linspace(-100, 100, 11))
    np.testing.assert_allclose(pdf(one, xs, ys), pdf(two, xs, ys), rtol=1e-12)


@given(st.floats(-100, 200), st.floats(-300, 300), st.integers(0, 2**32 - 1))
def test_pdf_nonnegative(x, y, seed):
    tmap = sample_random_map(seed, SystemParams())
    assert pdf(tmap, x, y) >= 0


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        TrafficMap((Hotspot(0.5, 1, 1, 1, 1),))
    with pytest.raises(ValueError):
        TrafficMap(())
    with pytest.raises(ValueError):
        Hotspot(1.0, 0, 0, 0.0, 1.0)


def test_grid_centers_formula():
    p = SystemParams(d_x=60, d_y=200, n_h=4, n_v=5)
    x, y = grid_centers(p)
    np.testing.assert_allclose(x, [7.5, 22.5, 37.5, 52.5])
    np.testing.assert_allclose(y, [-80, -40, 0, 40, 80])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_discretize_normalized(seed, L):
    p = SystemParams(n_h=40, n_v=30)
    grid = discretize(sample_random_map(seed, p, L), p)
    assert math.fsum(grid.p.ravel()) == pytest.approx(1.0, abs=1e-12)
    assert np.all(grid.p >= 0)
    assert grid.p_col.sum() == pytest.approx(1.0, abs=1e-12)


def test_discretize_symmetry():
    p = SystemParams(n_h=50, n_v=40)
    grid = discretize(map_from_centers([(30.0, 0.0)], [1.0], 8.0, 30.0), p)
    np.testing.assert_allclose(grid.p, grid.p[::-1, :], atol=1e-12, rtol=0)
    np.testing.assert_allclose(grid.p, grid.p[:, ::-1], atol=1e-12, rtol=0)


def test_single_cell():
    grid = discretize(map_from_centers([(3.0, 2.0)], [1.0], 8.0, 30.0), SystemParams(n_h=1, n_v=1))
    assert grid.p.shape == (1, 1) and grid.p[0, 0] == 1.0


def test_discretize_degenerate():
    far = map_from_centers([(1e6, 0.0)], [1.0], 1.0, 1.0)
    with pytest.raises(DegenerateMap):
        discretize(far, SystemParams(n_h=10, n_v=10))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations(range(3)))
def test_discretize_permutation_invariant(seed, perm):
    p = SystemParams(n_h=30, n_v=20)
    tmap = sample_random_map(seed, p)
    shuffled = TrafficMap(tuple(tmap.hotspots[i] for i in perm))
    np.testing.assert_allclose(discretize(tmap, p).p, discretize(shuffled, p).p, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_refinement_consistency(seed):
    coarse = SystemParams(n_h=40, n_v=30)
    fine = coarse.replace(n_h=80, n_v=60)
    tmap = sample_random_map(seed, coarse)
    pc = discretize(tmap, coarse).p
    pf = discretize(tmap, fine).p
    agg = pf.reshape(40, 2, 30, 2).sum(axis=(1, 3))
    big = pc > 1e-3 * pc.max()
    np.testing.assert_allclose(agg[big], pc[big], rtol=0.05)


def test_active_set_threshold():
    p = SystemParams()
    grid = discretize(sample_random_map(3, p), p)
    act = active_set(grid, 0.02)
    assert act.p_th == pytest.approx(0.02 * grid.p.max())
    inside = grid.p[act.members[:, 0], act.members[:, 1]]
    assert np.all(inside >= act.p_th)
    assert len(act) == int(np.sum(grid.p >= act.p_th))


def test_active_set_unique_max():
    grid = grid_from_columns([1.0, 2.0, 3.0], [0.2, 0.5, 0.3])
    act = active_set(grid, 1 - 1e-12)
    assert act.members.tolist() == [[1, 0]]


def test_active_set_uniform_all_members():
    grid = grid_from_columns(np.arange(5.0), np.ones(5), n_v=4)
    assert len(active_set(grid, 0.999)) == 20


def test_active_set_tie_included():
    grid = grid_from_columns([1.0, 2.0], [0.5, 0.25])
    # p_th lands exactly on the smaller cell value
    assert len(active_set(grid, 0.5)) == 2


def test_active_set_bad_tau():
    grid = grid_from_columns([1.0], [1.0])
    for tau in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            active_set(grid, tau)


def test_sample_random_map_deterministic(table1):
    a = sample_random_map(42, table1)
    b = sample_random_map(42, table1)
    assert a == b
    assert len(a) == 3
    assert math.fsum(h.alpha for h in a.hotspots) == pytest.approx(1.0, abs=1e-12)
    assert all(h.alpha > 0 for h in a.hotspots)


def test_sampled_centres_mean(table1):
    ss = np.random.SeedSequence(5).spawn(10_000)
    c = np.array([[h.mu_x, h.mu_y] for s in ss for h in sample_random_map(s, table1, 1).hotspots])
    se = c.std(axis=0, ddof=1) / math.sqrt(len(c))
    assert abs(c[:, 0].mean() - table1.d_x / 2) <= 3 * se[0]
    assert abs(c[:, 1].mean()) <= 3 * se[1]


def test_grid_csv(tmp_path):
    p = SystemParams(n_h=4, n_v=3)
    grid = discretize(map_from_centers([(30.0, 0.0)], [1.0], 8.0, 30.0), p)
    path = tmp_path / "g.csv"
    grid.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "u,v,x,y,p"
    assert len(lines) == 1 + 12


def test_map_list_round_trip():
    tmap = sample_random_map(9, SystemParams())
    assert TrafficMap.from_list(tmap.to_list()) == tmap
