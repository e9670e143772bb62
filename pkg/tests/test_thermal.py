import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from virialnsf import fields as fd
from virialnsf import laws
from virialnsf import statelaw as sl
from virialnsf.thermal import (
    ThermalParams, ThermalState, entropy_field, solve_thermal_slab, theta_field, thermal_residual,
    thermal_step,
)

REF = laws.reference_law()


def test_theta_field_examples():
    assert np.all(theta_field(np.zeros(8), np.ones(8), REF, 0.0) == 0)
    assert np.allclose(theta_field(np.full(8, 9.0), np.full(8, 2.0), REF, 0.0), 3.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 16))
def test_theta_field_round_trip(seed):
    rng = np.random.default_rng(seed)
    g = rng.uniform(1e-3, 10, 32)
    rho = rng.uniform(0.1, 3, 32)
    law = laws.concave_law()
    th = theta_field(g, rho, law, 1e-3)
    assert np.allclose(sl.good_unknown(law, rho, th, 1e-3), g, rtol=1e-10, atol=0)


def test_residual_examples():
    grid = fd.PeriodicGrid(1, 16)
    g = np.full(16, 2.0)
    rho = np.ones(16)
    u = grid.vector_zeros()
    assert np.all(thermal_residual(grid, g, g, rho, u, REF, 1e-3, 0.01) == 0)
    (x,) = grid.coords()
    g_old = 1 + 0.3 * np.sin(2 * np.pi * x)
    g_new = g_old * 1.01
    r = thermal_residual(grid, g_new, g_old, rho, u, REF, 1e-3, 0.01)
    assert fd.integrate(grid, r) == pytest.approx(fd.integrate(grid, g_new - g_old) / 0.01, rel=1e-12)


def test_uniform_step_is_fixed_in_one_iteration():
    grid = fd.PeriodicGrid(1, 16)
    state = ThermalState(np.full(16, 1.5), 1e-3)
    out, theta, iters = thermal_step(grid, state, np.ones(16), grid.vector_zeros(), REF)
    assert iters <= 1 and np.allclose(out.g, 1.5, rtol=1e-15)


def test_pure_diffusion_conserves_and_obeys_max_principle():
    grid = fd.PeriodicGrid(1, 64)
    (x,) = grid.coords()
    rho = np.ones(64)
    th0 = 1 + 0.5 * np.sin(2 * np.pi * x)
    state = ThermalState(sl.good_unknown(REF, rho, th0, 1e-3), 1e-3)
    total = fd.integrate(grid, state.g)
    hi, lo = th0.max(), th0.min()
    for _ in range(20):
        state, th, _ = thermal_step(grid, state, rho, grid.vector_zeros(), REF, ThermalParams(dt=1e-3))
        assert abs(fd.integrate(grid, state.g) - total) <= 1e-12 * total
        assert th.max() <= hi + 1e-12 and th.min() >= lo - 1e-12
        hi, lo = th.max(), th.min()


def test_shear_heating_increases_g_by_source():
    grid = fd.PeriodicGrid(2, 32)
    x, y = grid.coords()
    u = np.stack([np.sin(2 * np.pi * y), grid.zeros()])
    rho = np.ones(grid.shape)
    state = ThermalState(np.full(grid.shape, 1.0), 1e-3)
    dt = 1e-4
    out, _, _ = thermal_step(grid, state, rho, u, REF, ThermalParams(dt=dt))
    s = fd.stress_tensor(grid, u, REF.mu, REF.lam)
    source = fd.integrate(grid, fd.stress_contract(s, fd.velocity_gradient(grid, u)))
    gain = fd.integrate(grid, out.g) - fd.integrate(grid, state.g)
    assert gain > 0
    assert gain == pytest.approx(dt * source, abs=1e-10)


def test_slab_uniform_and_decay():
    grid = fd.PeriodicGrid(1, 32)
    times = np.linspace(0, 0.02, 11)
    rho = np.ones((11, 32))
    u = np.zeros((11, 1, 32))
    g0 = np.full(32, 2.0)
    g, th = solve_thermal_slab(grid, g0, times, rho, u, REF, 1e-3, ThermalParams(dt=2e-3))
    assert g.shape == (11, 32) and np.allclose(g, 2.0, rtol=1e-14)
    (x,) = grid.coords()
    g0 = sl.good_unknown(REF, rho[0], 1 + 0.5 * np.sin(2 * np.pi * x), 1e-3)
    _, th = solve_thermal_slab(grid, g0, times, rho, u, REF, 1e-3, ThermalParams(dt=2e-3))
    assert np.all(np.diff(th.max(axis=1)) <= 1e-12)


def test_positivity_with_eps():
    grid = fd.PeriodicGrid(1, 32)
    (x,) = grid.coords()
    g0 = 1e-6 + np.where(np.abs(x - 0.5) < 0.1, 1.0, 0.0)
    state = ThermalState(g0, 1e-3)
    for _ in range(5):
        state, _, _ = thermal_step(grid, state, np.ones(32), grid.vector_zeros(), REF,
                                   ThermalParams(dt=1e-3))
        assert state.g.min() > 0


def test_step_requires_positive_eps():
    grid = fd.PeriodicGrid(1, 8)
    with pytest.raises(ValueError):
        thermal_step(grid, ThermalState(np.ones(8), 0.0), np.ones(8), grid.vector_zeros(), REF)


def test_entropy_field_examples():
    one = np.ones(4)
    assert np.allclose(entropy_field(sl.good_unknown(REF, one, one), one, REF, 0.0), 2.0)
    assert np.allclose(entropy_field(sl.good_unknown(REF, one, one, 0.1), one, REF, 0.1), 2.0)


def test_entropy_bounded_by_g_and_rho():
    rng = np.random.default_rng(5)
    rho = rng.uniform(0.1, 5, 500)
    th = rng.uniform(0.01, 10, 500)
    eps = 1e-3
    g = sl.good_unknown(REF, rho, th, eps)
    rs = entropy_field(g, rho, REF, eps, th)
    c = np.max(rs / (g + rho))
    assert np.isfinite(c) and np.all(rs <= c * g + c * rho + 1e-12)
