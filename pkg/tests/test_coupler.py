import numpy as np
import pytest

from conftest import small_data_setup
from virialnsf import fields as fd
from virialnsf import laws
from virialnsf import statelaw as sl
from virialnsf.coupler import (
    FixedPointConfig, SlabTrajectory, apply_L, continue_slabs, fixed_point_solve, slab_l2,
    slab_times, trajectory_distance,
)
from virialnsf.errors import ConvergenceFailure, NonPhysicalState
from virialnsf.hydro import HydroParams, HydroState
from virialnsf.thermal import ThermalParams

TP = ThermalParams(dt=1e-3)


def uniform_setup(n=16, eps=1e-3):
    law = laws.demo_law()
    grid = fd.PeriodicGrid(1, n)
    hydro0 = HydroState(np.full(n, 1.2), np.full((1, n), 0.3), 0.0)
    g0 = sl.good_unknown(law, hydro0.rho, np.full(n, 0.7), eps)
    return law, grid, hydro0, g0


def test_slab_times():
    t = slab_times(0.1, 0.05, 1e-2)
    assert len(t) == 6 and t[0] == 0.1 and t[-1] == pytest.approx(0.15)


def test_uniform_data_is_exact_fixed_point():
    law, grid, hydro0, g0 = uniform_setup()
    times = slab_times(0.0, 0.01, 1e-3)
    theta = np.full((len(times), 16), sl.theta_of_g(law, 1.2, g0[0], 1e-3))
    traj = apply_L(grid, times, theta, hydro0, g0, law, 1e-3, thermal_params=TP)
    assert np.allclose(traj.theta, theta, rtol=1e-13)
    traj, report = fixed_point_solve(grid, hydro0, g0, law, FixedPointConfig(slab_length=0.01),
                                     1e-3, thermal_params=TP)
    assert report.slab_iterations == [1]
    assert report.update_norms[0][0] < 1e-13


def test_zero_input_temperature_gives_positive_output():
    law, grid, hydro0, g0 = small_data_setup(n=16)
    times = slab_times(0.0, 0.01, 1e-3)
    traj = apply_L(grid, times, np.zeros((len(times), 16)), hydro0, g0, law, 1e-3,
                   thermal_params=TP)
    assert np.all(traj.theta > 0)


def test_map_contracts_on_small_data():
    law, grid, hydro0, g0 = small_data_setup(n=32)
    times = slab_times(0.0, 0.02, 1e-3)
    (x,) = grid.coords()
    a = np.ones((len(times), 32))
    b = a + 1e-3 * np.sin(2 * np.pi * x)
    la = apply_L(grid, times, a, hydro0, g0, law, 1e-3, thermal_params=TP)
    lb = apply_L(grid, times, b, hydro0, g0, law, 1e-3, thermal_params=TP)
    assert slab_l2(grid, times, la.theta - lb.theta) < slab_l2(grid, times, a - b)


def test_converged_run_has_monotone_norms(converged_run):
    _, _, traj, report = converged_run
    norms = report.update_norms[0]
    assert norms[-1] < 1e-6 and len(norms) <= 30
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_non_convergence_is_reported():
    law, grid, hydro0, g0 = small_data_setup(n=16)
    cfg = FixedPointConfig(max_iter=1, slab_length=0.01)
    with pytest.raises(ConvergenceFailure) as info:
        fixed_point_solve(grid, hydro0, g0, law, cfg, 1e-3, thermal_params=TP)
    assert len(info.value.history) == 1 and info.value.history[0] > 1e-6


def test_two_slabs_equal_one_for_uniform_data():
    law, grid, hydro0, g0 = uniform_setup()
    one, _ = continue_slabs(grid, hydro0, g0, law, FixedPointConfig(slab_length=0.02), 1e-3,
                            0.02, thermal_params=TP)
    two, rep = continue_slabs(grid, hydro0, g0, law, FixedPointConfig(slab_length=0.01), 1e-3,
                              0.02, thermal_params=TP)
    assert rep.slab_iterations == [1, 1]
    assert np.allclose(one.theta, two.theta, rtol=1e-13)
    assert np.allclose(one.times, two.times)


def test_slab_refinement_consistency_and_mass():
    law, grid, hydro0, g0 = small_data_setup(n=32)
    tol = 1e-6
    runs = []
    for length in (0.1, 0.05):
        cfg = FixedPointConfig(omega=1.0, tol=tol, slab_length=length)
        traj, _ = continue_slabs(grid, hydro0, g0, law, cfg, 1e-3, 0.2, thermal_params=ThermalParams(dt=2e-3))
        runs.append(traj)
    a, b = runs[0].theta[-1], runs[1].theta[-1]
    assert fd.lp_norm(grid, a - b, 2) / fd.lp_norm(grid, a, 2) < 5 * tol
    mass = [fd.integrate(grid, r) for r in runs[1].rho]
    assert np.max(np.abs(np.array(mass) - mass[0])) < 1e-12 * mass[0]


def test_concat_and_distance():
    law, grid, hydro0, g0 = uniform_setup()
    t1, _ = fixed_point_solve(grid, hydro0, g0, law, FixedPointConfig(slab_length=0.01), 1e-3,
                              thermal_params=TP)
    state, g = t1.terminal()
    t2, _ = fixed_point_solve(grid, state, g, law,
                              FixedPointConfig(slab_length=0.01), 1e-3, thermal_params=TP)
    both = t1.concat(t2)
    assert len(both.times) == len(t1.times) + len(t2.times) - 1
    assert trajectory_distance(grid, t1, t1) == 0.0


def test_errors_are_annotated_with_context():
    law = laws.reference_law(mu=1e-4)
    grid = fd.PeriodicGrid(1, 16)
    (x,) = grid.coords()
    rho = np.full(16, 1e-3)
    hydro0 = HydroState(rho, (rho * 40 * np.sin(2 * np.pi * x))[None], 0.0)
    g0 = sl.good_unknown(law, rho, np.ones(16), 1e-3)
    with pytest.raises(NonPhysicalState, match="slab 0"):
        continue_slabs(grid, hydro0, g0, law, FixedPointConfig(slab_length=0.2), 1e-3, 0.2,
                       HydroParams(rho_floor_abort=1e-4), TP)


def test_trajectory_validates_shapes():
    with pytest.raises(ValueError):
        SlabTrajectory(np.zeros(3), np.zeros((2, 4)), np.zeros((3, 1, 4)), np.zeros((3, 1, 4)),
                       np.zeros((3, 4)), np.zeros((3, 4)), 1e-3)
