"""Manufactured-solution convergence studies for the thermal and hydro solvers.

Thermal: 1-d, rho = 1, u = 0, theta*(t, x) = 1 + A sin(2 pi x) exp(-t), the
forcing being the exact residual of the continuous equation.  Hydro: 1-d,
theta = 0, rho* = 1 + A sin(2 pi (x - t)), u* = A sin(2 pi x) cos(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fields as fd
from . import statelaw as sl
from .hydro import HydroParams, HydroState, solve_hydro_slab
from .thermal import ThermalParams, solve_thermal_slab

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ConvergenceRow:
    size: float
    error: float
    order: float


def observed_orders(sizes, errors):
    """Rows with the order log(e_k-1/e_k)/log(s_k-1/s_k) (nan for the first)."""
    rows = []
    for k, (s, e) in enumerate(zip(sizes, errors)):
        if k == 0 or errors[k - 1] <= 0 or e <= 0:
            rows.append(ConvergenceRow(s, e, math.nan))
        else:
            rows.append(ConvergenceRow(
                s, e, math.log(errors[k - 1] / e) / math.log(sizes[k - 1] / s)))
    return rows


# ----------------------------------------------------------------------------
# thermal


def _theta_star(x, t, amp):
    return 1.0 + amp * np.sin(TWO_PI * x) * math.exp(-t)


def thermal_forcing(law, x, t, eps, amp):
    """f = d_t g* - d_x (kappa(theta*) d_x theta*) with rho = 1, u = 0."""
    th = _theta_star(x, t, amp)
    th_t = -amp * np.sin(TWO_PI * x) * math.exp(-t)
    th_x = amp * TWO_PI * np.cos(TWO_PI * x) * math.exp(-t)
    th_xx = -amp * TWO_PI ** 2 * np.sin(TWO_PI * x) * math.exp(-t)
    one = np.ones_like(x)
    g_t = sl.dg_dtheta(law, one, th, eps) * th_t
    diff = sl.conductivity_dtheta(law, th) * th_x ** 2 + sl.conductivity(law, th) * th_xx
    return g_t - diff


def thermal_mms_error(law, n, dt, t_end, eps=1e-3, amp=0.5):
    grid = fd.PeriodicGrid(1, n)
    (x,) = grid.coords()
    k = max(1, int(round(t_end / dt)))
    times = t_end * np.arange(k + 1) / k
    rho = np.ones((k + 1, n))
    u = np.zeros((k + 1, 1, n))
    g0 = sl.good_unknown(law, rho[0], _theta_star(x, 0.0, amp), eps)
    _, theta = solve_thermal_slab(
        grid, g0, times, rho, u, law, eps, ThermalParams(dt=t_end / k),
        forcing=lambda t: thermal_forcing(law, x, t, eps, amp))
    return fd.lp_norm(grid, theta[-1] - _theta_star(x, t_end, amp), 2)


def thermal_spatial_study(law, ns=(32, 64, 128), t_end=0.05, dt_coef=2.0, eps=1e-3):
    """dt = dt_coef * h^2 so that the time error scales like the space error."""
    errs = [thermal_mms_error(law, n, dt_coef / n ** 2, t_end, eps) for n in ns]
    return observed_orders([1.0 / n for n in ns], errs)


def thermal_temporal_study(law, dts=(0.02, 0.01, 0.005), n=256, t_end=0.2, eps=1e-3):
    errs = [thermal_mms_error(law, n, dt, t_end, eps) for dt in dts]
    return observed_orders(list(dts), errs)


# ----------------------------------------------------------------------------
# hydro


def _hydro_star(x, t, amp):
    rho = 1.0 + amp * np.sin(TWO_PI * (x - t))
    u = amp * np.sin(TWO_PI * x) * math.cos(t)
    return rho, u


def hydro_forcing(law, x, t, amp):
    """(s_rho, s_m) making (rho*, u*) an exact solution with theta = 0 in 1-d."""
    s = np.sin(TWO_PI * (x - t))
    c = np.cos(TWO_PI * (x - t))
    rho = 1.0 + amp * s
    rho_t = -amp * TWO_PI * c
    rho_x = amp * TWO_PI * c
    u = amp * np.sin(TWO_PI * x) * math.cos(t)
    u_t = -amp * np.sin(TWO_PI * x) * math.sin(t)
    u_x = amp * TWO_PI * np.cos(TWO_PI * x) * math.cos(t)
    u_xx = -amp * TWO_PI ** 2 * np.sin(TWO_PI * x) * math.cos(t)
    s_rho = rho_t + rho_x * u + rho * u_x
    m_t = rho_t * u + rho * u_t
    flux_x = rho_x * u * u + 2.0 * rho * u * u_x
    p_x = law.gamma * rho ** (law.gamma - 1.0) * rho_x
    visc = (2.0 * law.mu + law.lam) * u_xx
    s_m = m_t + flux_x + p_x - visc
    return s_rho, s_m[None, :]


def hydro_mms_error(law, n, t_end, amp=0.1, cfl=0.4):
    grid = fd.PeriodicGrid(1, n)
    (x,) = grid.coords()
    rho0, u0 = _hydro_star(x, 0.0, amp)
    state = HydroState(rho0, (rho0 * u0)[None, :], 0.0)
    theta = np.zeros(n)
    out = solve_hydro_slab(grid, state, [0.0, t_end], [theta, theta], law,
                           HydroParams(cfl=cfl), output_times=[t_end],
                           source=lambda t: hydro_forcing(law, x, t, amp))
    rho_e, u_e = _hydro_star(x, t_end, amp)
    err_r = fd.lp_norm(grid, out[-1].rho - rho_e, 2)
    err_m = fd.lp_norm(grid, out[-1].m[0] - rho_e * u_e, 2)
    return err_r + err_m


def hydro_study(law, ns=(32, 64, 128), t_end=0.1):
    errs = [hydro_mms_error(law, n, t_end) for n in ns]
    return observed_orders([1.0 / n for n in ns], errs)
