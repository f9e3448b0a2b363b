import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pinchtraffic.scenario import (
    SPEED_OF_LIGHT,
    InvalidParams,
    SystemParams,
    db_to_linear,
    derive_geometry,
    distance_sq,
    linear_to_db,
)


def test_defaults_reference_setup(table1):
    assert (table1.f_c, table1.d_x, table1.d_y, table1.d_v) == (28e9, 60.0, 200.0, 10.0)
    assert (table1.p_dbm, table1.sigma2_dbm, table1.mu2_db) == (40.0, -70.0, -60.0)
    assert (table1.n_antennas, table1.n_h, table1.n_v, table1.n_hotspots) == (6, 400, 120, 3)
    assert (table1.beta, table1.eps_t, table1.eps_d, table1.tau) == (0.01, 1e-3, 1e-3, 0.02)


def test_waveguide_layout_six_antennas(table1):
    g = derive_geometry(table1)
    assert g.d_h == pytest.approx(40.0)
    assert g.y[0] == pytest.approx(-100.0)
    assert g.c_n[0] == pytest.approx(10100.0)
    np.testing.assert_allclose(g.y, [-100, -60, -20, 20, 60, 100])


def test_wavelength_eta_rho(table1):
    g = derive_geometry(table1)
    assert g.wavelength == pytest.approx(1.0707e-2, rel=1e-4)
    # c^2 / (4 pi f_c)^2 evaluated independently
    assert g.eta == pytest.approx((SPEED_OF_LIGHT / (4 * math.pi * 28e9)) ** 2, rel=1e-12)
    assert g.eta == pytest.approx(7.2595e-7, rel=1e-4)
    assert g.rho == pytest.approx(1e11, rel=1e-12)
    assert g.mu2 == pytest.approx(1e-6, rel=1e-12)


def test_single_waveguide_on_centerline(table1):
    g = derive_geometry(table1.replace(n_antennas=1))
    assert g.y.tolist() == [0.0]
    assert g.c_n[0] == pytest.approx(100.0)


def test_distance_examples(table1):
    g = derive_geometry(table1)
    assert distance_sq(g, 0, 30.0, 0.0) == pytest.approx(11000.0)
    assert distance_sq(g, 2, 17.0, 17.0) == pytest.approx(g.c_n[2])


def test_distance_bad_index(table1):
    g = derive_geometry(table1)
    with pytest.raises(IndexError):
        distance_sq(g, 6, 1.0, 1.0)
    with pytest.raises(IndexError):
        distance_sq(g, -1, 1.0, 1.0)


@given(st.integers(0, 5), st.floats(0, 60), st.floats(0, 60))
def test_distance_symmetric(n, a, b):
    g = derive_geometry(SystemParams())
    assert distance_sq(g, n, a, b) == distance_sq(g, n, b, a)


@given(st.integers(3, 12))
def test_c_n_valley_shape(n_ant):
    g = derive_geometry(SystemParams(n_antennas=n_ant))
    k = int(np.argmin(g.c_n))
    assert np.all(np.diff(g.c_n[: k + 1]) < 0)
    assert np.all(np.diff(g.c_n[k:]) >= 0)
    assert abs(g.y[k]) == pytest.approx(np.min(np.abs(g.y)))
    assert np.all(g.c_n >= g.params.d_v ** 2)


def test_derive_geometry_pure(table1):
    a, b = derive_geometry(table1), derive_geometry(table1)
    assert a.rho == b.rho and a.eta == b.eta
    assert np.array_equal(a.c_n, b.c_n) and np.array_equal(a.y, b.y)


@pytest.mark.parametrize(
    "change",
    [
        {"d_x": 0.0},
        {"d_y": -1.0},
        {"d_v": 0.0},
        {"n_antennas": 0},
        {"n_h": 0},
        {"n_v": 0},
        {"beta": -0.1},
        {"tau": 0.0},
        {"tau": 1.0},
        {"eps_t": 0.0},
        {"eps_d": -1e-3},
        {"f_c": 0.0},
    ],
)
def test_invalid_params(change):
    with pytest.raises(InvalidParams):
        SystemParams(**change)


def test_from_mapping_round_trip(table1):
    assert SystemParams.from_mapping(table1.to_mapping()) == table1
    p = SystemParams.from_mapping({"d_x_m": 100, "n_antennas": 4.0})
    assert p.d_x == 100.0 and p.n_antennas == 4 and isinstance(p.n_antennas, int)
    with pytest.raises(InvalidParams):
        SystemParams.from_mapping({"nonsense": 1})


@given(st.floats(-200, 200))
def test_db_round_trip(v):
    assert float(linear_to_db(db_to_linear(v))) == pytest.approx(v, rel=1e-9, abs=1e-9)
