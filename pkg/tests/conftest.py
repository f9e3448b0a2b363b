import numpy as np
import pytest

from pinchtraffic.scenario import SystemParams, derive_geometry
from pinchtraffic.traffic import GridField, discretize, map_from_centers

DESK = SystemParams(n_h=100, n_v=60)


@pytest.fixture
def table1():
    return SystemParams()


@pytest.fixture
def desk():
    return DESK


@pytest.fixture
def desk_geom():
    return derive_geometry(DESK)


def single_hotspot(params, mu_x, mu_y=0.0, sigma_x=6.0, sigma_y=20.0):
    return map_from_centers([(mu_x, mu_y)], [1.0], sigma_x, sigma_y)


def grid_from_columns(x, p_col, n_v=1, d_y=200.0):
    """Hand-built grid with traffic ``p_col`` spread evenly over ``n_v`` rows."""
    x = np.asarray(x, dtype=float)
    p_col = np.asarray(p_col, dtype=float)
    y = -d_y / 2 + (np.arange(n_v) + 0.5) * d_y / n_v
    p = np.repeat((p_col / p_col.sum())[:, None] / n_v, n_v, axis=1)
    return GridField(x=x, y=y, p=p)


def desk_grid(tmap):
    return discretize(tmap, DESK)


_LINES = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_LINES] = {}


@pytest.fixture
def criterion(request):
    """``criterion(k, ok, detail)`` records one acceptance line and returns ``ok``."""

    def record(k, ok, detail=""):
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        request.config.stash[_LINES][k] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
