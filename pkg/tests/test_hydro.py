import numpy as np
import pytest

from virialnsf import fields as fd
from virialnsf import laws
from virialnsf.errors import ConfigError, NonPhysicalState
from virialnsf.hydro import (
    C2_FLOOR, HydroParams, HydroState, hydro_rhs, hydro_step, interpolate_theta, solve_hydro_slab,
    sound_speed, stable_dt, velocity,
)

REF = laws.reference_law()


def uniform(grid, rho=1.0, u=(0.0,)):
    m = np.stack([np.full(grid.shape, rho * c) for c in u])
    return HydroState(np.full(grid.shape, rho), m, 0.0)


def test_velocity_examples():
    g = fd.PeriodicGrid(2, 8)
    assert np.all(velocity(uniform(g, 1.0, (0.0, 0.0))) == 0)
    st = HydroState(np.full(g.shape, 2.0), np.stack([np.full(g.shape, 3.0), g.zeros()]))
    u = velocity(st)
    assert np.all(u[0] == 1.5) and np.all(u[1] == 0)
    rng = np.random.default_rng(3)
    rho = rng.random(g.shape) + 0.1
    m = rng.normal(size=(2,) + g.shape)
    assert np.allclose(rho * velocity(HydroState(rho, m)), m, rtol=1e-15, atol=0)


def test_velocity_rejects_vacuum():
    g = fd.PeriodicGrid(1, 8)
    rho = np.ones(8)
    rho[3] = 0.0
    with pytest.raises(NonPhysicalState, match="cell"):
        velocity(HydroState(rho, np.zeros((1, 8))))


def test_stable_dt_examples():
    g = fd.PeriodicGrid(1, 64)
    theta = g.zeros()
    dt = stable_dt(g, uniform(g), theta, laws.reference_law(mu=1e-6))
    assert dt == pytest.approx(0.4 * g.h / np.sqrt(5))
    slow = stable_dt(g, uniform(g, u=(10.0,)), theta, laws.reference_law(mu=1e-6))
    fast = stable_dt(g, uniform(g, u=(100.0,)), theta, laws.reference_law(mu=1e-6))
    assert fast < slow
    # non-monotone region: floored sound speed keeps dt finite and positive
    law = laws.nonmonotone_law()
    st = uniform(g, 0.1)
    assert sound_speed(law, st.rho, np.ones(64))[0] == pytest.approx(np.sqrt(C2_FLOOR))
    assert 0 < stable_dt(g, st, np.ones(64), law) < np.inf


@pytest.mark.parametrize("dim", [1, 2])
def test_uniform_state_is_fixed(dim):
    g = fd.PeriodicGrid(dim, 16)
    st = uniform(g, 1.3, (0.4,) * dim)
    theta = np.full(g.shape, 0.8)
    d_rho, d_m = hydro_rhs(g, st, theta, laws.demo_law())
    assert np.all(d_rho == 0) and np.all(d_m == 0)
    out = hydro_step(g, st, theta, laws.demo_law(), 1e-3)
    assert np.array_equal(out.rho, st.rho) and np.array_equal(out.m, st.m)


def _pressure_gradient_error(n):
    g = fd.PeriodicGrid(1, n)
    (x,) = g.coords()
    rho = 1 + 0.01 * np.sin(2 * np.pi * x)
    _, dm = hydro_rhs(g, HydroState(rho, np.zeros((1, n))), g.zeros(), REF)
    exact = -5 * rho ** 4 * 0.01 * 2 * np.pi * np.cos(2 * np.pi * x)
    return np.max(np.abs(dm[0] - exact))


def test_momentum_tendency_second_order():
    e1, e2 = _pressure_gradient_error(64), _pressure_gradient_error(128)
    assert 3.3 < e1 / e2 < 4.8


def test_mass_tendency_integrates_to_zero():
    g = fd.PeriodicGrid(2, 16)
    rng = np.random.default_rng(0)
    st = HydroState(1 + 0.1 * rng.random(g.shape), 0.1 * rng.normal(size=(2,) + g.shape))
    d_rho, d_m = hydro_rhs(g, st, np.ones(g.shape), REF)
    assert abs(fd.integrate(g, d_rho)) < 1e-13
    assert np.all(np.abs([fd.integrate(g, c) for c in d_m]) < 1e-12)


def test_uniform_mass_over_many_steps():
    g = fd.PeriodicGrid(1, 32)
    st = uniform(g, 1.0, (0.3,))
    theta = np.ones(32)
    for _ in range(1000):
        st = hydro_step(g, st, theta, REF, 1e-4)
    assert abs(fd.integrate(g, st.rho) - 1.0) < 1e-12


def test_slab_constant_trajectory_and_uniform_ramp():
    g = fd.PeriodicGrid(1, 16)
    st = uniform(g)
    times = np.linspace(0, 0.01, 5)
    ramp = [np.full(16, 1.0 + t) for t in times]
    out = solve_hydro_slab(g, st, times, ramp, laws.demo_law())
    assert len(out) == 5
    assert all(np.array_equal(s.rho, st.rho) and np.all(s.m == 0) for s in out)
    assert out[-1].t == pytest.approx(0.01)


def test_slab_coverage_error():
    g = fd.PeriodicGrid(1, 16)
    with pytest.raises(ConfigError):
        solve_hydro_slab(g, uniform(g), [0.0, 0.01], [g.zeros()] * 2, REF, t_end=0.02)


def test_interpolate_theta():
    a, b = np.zeros(3), np.ones(3)
    assert np.allclose(interpolate_theta([0, 1], [a, b], 0.25), 0.25)
    assert interpolate_theta([0, 1], [a, b], 1.0) is b


def test_density_collapse_aborts():
    g = fd.PeriodicGrid(1, 16)
    (x,) = g.coords()
    st = HydroState(np.full(16, 1e-3), (1e-3 * 50 * np.sin(2 * np.pi * x))[None])
    with pytest.raises(NonPhysicalState):
        for _ in range(200):
            st = hydro_step(g, st, g.zeros(), laws.reference_law(mu=1e-3), 5e-3,
                            HydroParams(rho_floor_abort=1e-4))
