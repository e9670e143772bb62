r"""Regularised thermal step on the good unknown g.

Backward Euler for

.. math::

    \partial_t g + \operatorname{div}(g u) + \widetilde P_\varepsilon \operatorname{div} u
    = S:\nabla u + \operatorname{div}(\kappa(\theta) \nabla \theta),
    \qquad \theta = \theta(\rho, g),

solved by Newton's method with a sparse Jacobian.  The diffusion and
advection parts are in flux form, so every Jacobian column of those parts
sums to zero and ``sum(g)`` is conserved exactly (up to round-off) when
``u == 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fields as fd
from . import statelaw as sl
from .errors import ConvergenceFailure, DomainError, NegativeInput, NonPhysicalState


@dataclass(frozen=True)
class ThermalState:
    g: np.ndarray
    eps: float
    t: float = 0.0


@dataclass(frozen=True)
class ThermalParams:
    dt: float = 1e-3
    newton_tol: float = 1e-10
    newton_max: int = 50
    picard_lag: bool = False

    def __post_init__(self):
        if self.newton_tol <= 0 or self.dt <= 0:
            raise ValueError("dt and newton_tol must be positive")


def theta_field(g, rho, law, eps, guess=None):
    """Pointwise temperature from (rho, g)."""
    try:
        return np.asarray(sl.theta_of_g(law, rho, g, eps, theta_guess=guess), dtype=float)
    except (NegativeInput, DomainError, ConvergenceFailure) as exc:
        g = np.asarray(g)
        bad = np.argwhere(~(g >= 0))
        where = f" (first bad cell {tuple(int(i) for i in bad[0])})" if bad.size else ""
        raise type(exc)(f"{exc}{where}") from exc


def _diffusion_flux(grid, law, theta):
    kap = sl.conductivity(law, theta)
    return fd.face_average(grid, kap) * fd.face_difference(grid, theta)


def _advection_speed(u):
    return np.abs(u)


def thermal_sources(grid, rho, u, theta, law, eps):
    """(P~_eps div u, S : grad u) at the given state."""
    div_u = fd.divergence(grid, u)
    s = fd.stress_tensor(grid, u, law.mu, law.lam)
    shear = fd.stress_contract(s, fd.velocity_gradient(grid, u))
    return sl.reduced_pressure(law, rho, theta, eps) * div_u, shear


def thermal_residual(grid, g_new, g_old, rho, u, law, eps, dt, theta_new=None, forcing=None):
    """Backward-Euler residual R(g_new); rho and u at the new time level."""
    theta = theta_field(g_new, rho, law, eps) if theta_new is None else theta_new
    adv = fd.flux_divergence(grid, fd.llf_flux(grid, g_new, u, _advection_speed(u)))
    work, shear = thermal_sources(grid, rho, u, theta, law, eps)
    diff = fd.flux_divergence(grid, _diffusion_flux(grid, law, theta))
    r = (g_new - g_old) / dt + adv + work - shear - diff
    if forcing is not None:
        r = r - forcing
    return r


def _face_pairs(grid):
    idx = np.arange(grid.n ** grid.dim).reshape(grid.shape)
    return [(idx.ravel(), fd.shift(idx, i, 1).ravel()) for i in range(grid.dim)]


def _jacobian(grid, g, rho, u, theta, law, eps, dt):
    size = g.size
    h = grid.h
    theta_g = 1.0 / sl.dg_dtheta(law, rho, theta, eps)
    kap = sl.conductivity(law, theta)
    dkap = sl.conductivity_dtheta(law, theta)
    div_u = fd.divergence(grid, u)
    diag = np.full(size, 1.0 / dt)
    diag += (sl.reduced_pressure_dtheta(law, rho, theta, eps) * div_u * theta_g).ravel()
    rows, cols, vals = [np.arange(size)], [np.arange(size)], [diag]
    th, tg, kf, dk = theta.ravel(), theta_g.ravel(), kap.ravel(), dkap.ravel()
    a_abs = np.abs(u)
    for i, (c, nb) in enumerate(_face_pairs(grid)):
        # advection face flux F = 1/2 (g_c v_c + g_nb v_nb) - 1/2 a (g_nb - g_c)
        v = u[i].ravel()
        a = np.maximum(a_abs[i].ravel(), a_abs[i].ravel()[nb])
        dfa_c = 0.5 * v + 0.5 * a
        dfa_nb = 0.5 * v[nb] - 0.5 * a
        # diffusion face flux F = 1/2 (k_c + k_nb) (th_nb - th_c) / h, enters with minus
        dth = (th[nb] - th[c]) / h
        kface = 0.5 * (kf[c] + kf[nb])
        dfd_c = (0.5 * dk[c] * dth - kface / h) * tg[c]
        dfd_nb = (0.5 * dk[nb] * dth + kface / h) * tg[nb]
        f_c = (dfa_c - dfd_c) / h
        f_nb = (dfa_nb - dfd_nb) / h
        rows += [c, c, nb, nb]
        cols += [c, nb, c, nb]
        vals += [f_c, f_nb, -f_c, -f_nb]
    jac = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(size, size))
    return jac.tocsc()


def thermal_step(grid, state: ThermalState, rho, u, law, params: ThermalParams = ThermalParams(),
                 forcing=None, theta_guess=None):
    """Advance g by one backward-Euler step; returns (ThermalState, theta, newton_iters)."""
    eps = state.eps
    if eps <= 0:
        raise ValueError("thermal stepping needs eps > 0")
    dt = params.dt
    g_old = state.g
    g = g_old.copy()
    theta = theta_field(g, rho, law, eps, theta_guess)
    scale = float(np.max(np.abs(g_old))) / dt + 1e-300
    history = []
    for it in range(params.newton_max + 1):
        r = thermal_residual(grid, g, g_old, rho, u, law, eps, dt, theta, forcing)
        rnorm = float(np.max(np.abs(r))) / scale
        history.append(rnorm)
        if rnorm < params.newton_tol:
            break
        if it == params.newton_max:
            raise ConvergenceFailure(
                f"thermal Newton did not reach {params.newton_tol:g} in {params.newton_max} "
                f"iterations (residual {rnorm:.3e})", history=history, residual=rnorm)
        jac = _jacobian(grid, g, rho, u, theta, law, eps, dt)
        delta = spla.spsolve(jac, -r.ravel()).reshape(g.shape)
        step = 1.0
        for _ in range(60):
            trial = g + step * delta
            if np.all(trial > 0):
                break
            step *= 0.5
        else:
            raise NonPhysicalState("thermal Newton update could not keep g positive")
        g = trial
        theta = theta_field(g, rho, law, eps, theta)
        if np.max(np.abs(step * delta)) <= 4 * np.finfo(float).eps * np.max(np.abs(g)):
            # stagnated at round-off
            history.append(rnorm)
            break
    if not np.all(g > 0):
        raise NonPhysicalState("g lost positivity")
    return ThermalState(g, eps, state.t + dt), theta, len(history) - 1


def solve_thermal_slab(grid, g0, times, rho_traj, u_traj, law, eps,
                       params: ThermalParams = ThermalParams(), forcing=None):
    """March g over the sample times; step k uses rho/u at ``times[k+1]``.

    ``forcing(t)`` may return an additive source field.  Returns
    ``(g_traj, theta_traj)`` as arrays with a leading time axis.
    """
    times = np.asarray(times, dtype=float)
    if np.any(g0 <= 0):
        raise NonPhysicalState("initial g must be strictly positive")
    g_traj = [np.asarray(g0, dtype=float)]
    th_traj = [theta_field(g0, rho_traj[0], law, eps)]
    state = ThermalState(g_traj[0], eps, float(times[0]))
    for k in range(len(times) - 1):
        p = ThermalParams(dt=float(times[k + 1] - times[k]), newton_tol=params.newton_tol,
                          newton_max=params.newton_max, picard_lag=params.picard_lag)
        f = forcing(float(times[k + 1])) if forcing is not None else None
        state, theta, _ = thermal_step(grid, state, rho_traj[k + 1], u_traj[k + 1], law, p,
                                       forcing=f, theta_guess=th_traj[-1])
        g_traj.append(state.g)
        th_traj.append(theta)
    return np.stack(g_traj), np.stack(th_traj)


def entropy_field(g, rho, law, eps, theta=None):
    """rho s_eps = eps log(theta) + rho s(rho, theta)."""
    theta = theta_field(g, rho, law, eps) if theta is None else theta
    if np.any(theta <= 0):
        raise DomainError("entropy needs theta > 0 in every cell")
    out = rho * sl.entropy(law, rho, theta)
    if eps:
        out = out + eps * np.log(theta)
    return out
