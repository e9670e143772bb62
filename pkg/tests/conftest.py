import numpy as np
import pytest

from virialnsf import fields as fd
from virialnsf import laws
from virialnsf import statelaw as sl
from virialnsf.coupler import FixedPointConfig, fixed_point_solve
from virialnsf.hydro import HydroParams, HydroState
from virialnsf.thermal import ThermalParams

_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """record(number, ok, detail): one pass/fail line per acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])


def small_data_setup(n=64, eps=1e-3):
    """The small-data configuration: rho = 1 + 0.01 sin(2 pi x), theta = 1, u = 0."""
    law = laws.reference_law()
    grid = fd.PeriodicGrid(1, n)
    (x,) = grid.coords()
    rho = 1.0 + 0.01 * np.sin(2.0 * np.pi * x)
    hydro0 = HydroState(rho, np.zeros((1, n)), 0.0)
    g0 = sl.good_unknown(law, rho, np.ones(n), eps)
    return law, grid, hydro0, g0


def small_data_run(n=64, dt=1e-3, eps=1e-3, omega=0.5, tol=1e-6, t_final=0.05):
    law, grid, hydro0, g0 = small_data_setup(n, eps)
    cfg = FixedPointConfig(omega=omega, tol=tol, max_iter=30, slab_length=t_final)
    traj, report = fixed_point_solve(grid, hydro0, g0, law, cfg, eps, HydroParams(),
                                     ThermalParams(dt=dt))
    return law, grid, traj, report


@pytest.fixture(scope="session")
def converged_run():
    """The criterion-8 run with omega = 0.5 (shared by several tests)."""
    return small_data_run()
