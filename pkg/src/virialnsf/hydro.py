"""Continuity and momentum equations with a prescribed temperature field.

Explicit SSP-RK2 in time; LLF fluxes for advection, central pressure
gradient, compact viscous operator.  Density is never clipped: losing
positivity raises :class:`NonPhysicalState`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import fields as fd
from . import statelaw as sl
from .errors import ConfigError, NonPhysicalState

C2_FLOOR = 1e-12


@dataclass(frozen=True)
class HydroState:
    rho: np.ndarray
    m: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class HydroParams:
    cfl: float = 0.4
    rho_floor_abort: float = 1e-10

    def __post_init__(self):
        if not 0 < self.cfl < 1:
            raise ValueError("cfl must lie in (0, 1)")


def _check_rho(rho, params):
    bad = ~(rho > params.rho_floor_abort)
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonPhysicalState(
            f"density {float(rho[idx]):.3e} at cell {idx} below abort threshold "
            f"{params.rho_floor_abort:g}"
        )


def velocity(state: HydroState, params: HydroParams = HydroParams()):
    _check_rho(state.rho, params)
    return state.m / state.rho


def sound_speed(law, rho, theta):
    """sqrt(max(dP/drho, c2_floor)); the floor covers non-monotone regions."""
    return np.sqrt(np.maximum(sl.pressure_drho(law, rho, theta), C2_FLOOR))


def stable_dt(grid, state: HydroState, theta, law, params: HydroParams = HydroParams()):
    u = velocity(state, params)
    c = sound_speed(law, state.rho, theta)
    speed = np.max(np.abs(u), axis=0) + c
    dt = params.cfl * grid.h / float(np.max(speed))
    nu = 2.0 * grid.dim * (2.0 * law.mu + abs(law.lam)) / state.rho
    dt_visc = float(np.min(grid.h ** 2 / nu))
    return min(dt, dt_visc)


def hydro_rhs(grid, state: HydroState, theta, law, params=HydroParams(), source=None):
    """(drho/dt, dm/dt).  ``source(t)`` may return an additive (s_rho, s_m)."""
    rho, m = state.rho, state.m
    u = velocity(state, params)
    a = np.abs(u) + sound_speed(law, rho, theta)
    drho = -fd.flux_divergence(grid, fd.llf_flux(grid, rho, u, a))
    dm = np.empty_like(m)
    p = sl.pressure(law, rho, theta)
    grad_p = fd.gradient(grid, p)
    visc = fd.stress_divergence(grid, u, law.mu, law.lam)
    for j in range(grid.dim):
        adv = fd.flux_divergence(grid, fd.llf_flux(grid, m[j], u, a))
        dm[j] = -adv - grad_p[j] + visc[j]
    if source is not None:
        s_rho, s_m = source(state.t)
        drho = drho + s_rho
        dm = dm + s_m
    return drho, dm


def hydro_step(grid, state: HydroState, theta, law, dt, params=HydroParams(),
               theta_next=None, source=None):
    """One SSP-RK2 step; the second stage sees ``theta_next`` (default ``theta``)."""
    theta_next = theta if theta_next is None else theta_next
    d1, m1 = hydro_rhs(grid, state, theta, law, params, source)
    s1 = HydroState(state.rho + dt * d1, state.m + dt * m1, state.t + dt)
    _check_rho(s1.rho, params)
    d2, m2 = hydro_rhs(grid, s1, theta_next, law, params, source)
    rho = 0.5 * state.rho + 0.5 * (s1.rho + dt * d2)
    m = 0.5 * state.m + 0.5 * (s1.m + dt * m2)
    _check_rho(rho, params)
    return HydroState(rho, m, state.t + dt)


def interpolate_theta(times, samples, t):
    """Linear interpolation of a sampled temperature trajectory."""
    times = np.asarray(times)
    k = int(np.searchsorted(times, t, side="right")) - 1
    k = min(max(k, 0), len(times) - 2) if len(times) > 1 else 0
    if len(times) == 1:
        return samples[0]
    t0, t1 = times[k], times[k + 1]
    w = (t - t0) / (t1 - t0)
    if w == 0.0:
        return samples[k]
    if w == 1.0:
        return samples[k + 1]
    return (1.0 - w) * samples[k] + w * samples[k + 1]


def solve_hydro_slab(grid, initial: HydroState, theta_times, theta_samples, law,
                     params=HydroParams(), t_end=None, output_times=None, source=None,
                     max_dt=None):
    """March from ``initial.t`` to ``t_end`` with theta interpolated in time.

    Returns the list of states at ``output_times`` (default: the theta sample
    times).  Steps are shortened to land exactly on every output time.
    """
    theta_times = np.asarray(theta_times, dtype=float)
    if output_times is None:
        output_times = theta_times
    output_times = np.asarray(output_times, dtype=float)
    t_end = float(output_times[-1]) if t_end is None else float(t_end)
    span = max(abs(t_end), 1.0)
    if theta_times[0] > initial.t + 1e-12 * span or theta_times[-1] < t_end - 1e-12 * span:
        raise ConfigError(
            f"temperature samples cover [{theta_times[0]:g}, {theta_times[-1]:g}] "
            f"but the slab needs [{initial.t:g}, {t_end:g}]"
        )
    state = initial
    out = []
    for t_out in output_times:
        if t_out < state.t - 1e-12 * span:
            raise ConfigError("output times must be non-decreasing and start at t0")
        while t_out - state.t > 1e-12 * span:
            th0 = interpolate_theta(theta_times, theta_samples, state.t)
            dt = stable_dt(grid, state, th0, law, params)
            if max_dt is not None:
                dt = min(dt, max_dt)
            remaining = t_out - state.t
            if dt >= remaining:
                dt = remaining
            elif dt > 0.5 * remaining:
                dt = 0.5 * remaining
            th1 = interpolate_theta(theta_times, theta_samples, state.t + dt)
            state = hydro_step(grid, state, th0, law, dt, params, th1, source)
            if t_out - state.t <= 1e-12 * span:
                state = replace(state, t=float(t_out))
        out.append(replace(state, t=float(t_out)))
    return out
