"""Outer fixed point on the temperature trajectory of a time slab.

``apply_L`` runs the hydro solver with a prescribed temperature and then the
thermal solver with the resulting density and velocity.  The damped Picard
iteration ``theta <- (1 - omega) theta + omega L(theta)`` is repeated until
the slab-L2 residual ``|L(theta) - theta| / |theta|`` drops below ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import statelaw as sl
from .errors import ConvergenceFailure, VirialNSFError
from .hydro import HydroParams, HydroState, solve_hydro_slab
from .thermal import ThermalParams, solve_thermal_slab, theta_field


@dataclass(frozen=True)
class SlabTrajectory:
    times: np.ndarray
    rho: np.ndarray
    m: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    g: np.ndarray
    eps: float

    def __post_init__(self):
        k = len(self.times)
        if any(len(a) != k for a in (self.rho, self.m, self.u, self.theta, self.g)):
            raise ValueError("all trajectory fields need one sample per time")
        if k > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must increase strictly")

    def terminal(self):
        return HydroState(self.rho[-1], self.m[-1], float(self.times[-1])), self.g[-1]

    def concat(self, other: "SlabTrajectory"):
        """Join two consecutive slabs, dropping the duplicated junction sample."""
        def cat(a, b):
            return np.concatenate([a, b[1:]])
        return SlabTrajectory(cat(self.times, other.times), cat(self.rho, other.rho),
                              cat(self.m, other.m), cat(self.u, other.u),
                              cat(self.theta, other.theta), cat(self.g, other.g), self.eps)


@dataclass(frozen=True)
class FixedPointConfig:
    omega: float = 0.5
    tol: float = 1e-6
    max_iter: int = 50
    slab_length: float = 0.1

    def __post_init__(self):
        if not 0 < self.omega <= 1:
            raise ValueError("omega must lie in (0, 1]")
        if self.tol <= 0 or self.max_iter < 1 or self.slab_length <= 0:
            raise ValueError("tol, max_iter and slab_length must be positive")


@dataclass
class RunReport:
    slab_iterations: list = field(default_factory=list)
    update_norms: list = field(default_factory=list)
    status: str = "running"

    def to_text(self):
        lines = [f"status: {self.status}"]
        for k, (its, norms) in enumerate(zip(self.slab_iterations, self.update_norms)):
            lines.append(f"slab {k}: {its} iterations")
            lines += [f"  {j + 1:3d} {v:.6e}" for j, v in enumerate(norms)]
        return "\n".join(lines) + "\n"


def _annotate(exc, context):
    """Prefix the message of ``exc`` in place, keeping its attributes."""
    if exc.args:
        exc.args = (f"{context}: {exc.args[0]}",) + exc.args[1:]
    return exc


def slab_times(t0, slab_length, dt):
    k = max(1, int(round(slab_length / dt)))
    return t0 + slab_length * np.arange(k + 1) / k


def slab_l2(grid, times, f):
    """Discrete L2 norm in space-time over the slab samples."""
    dt = (times[-1] - times[0]) / max(len(times) - 1, 1)
    return float(np.sqrt(np.sum(f * f) * grid.cell_volume * dt))


def apply_L(grid, times, theta_samples, hydro0: HydroState, g0, law, eps,
            hydro_params=HydroParams(), thermal_params=ThermalParams()):
    """One application of the temperature map on a slab."""
    states = solve_hydro_slab(grid, hydro0, times, theta_samples, law, hydro_params)
    rho = np.stack([s.rho for s in states])
    m = np.stack([s.m for s in states])
    u = m / rho[:, None]
    g, theta = solve_thermal_slab(grid, g0, times, rho, u, law, eps, thermal_params)
    return SlabTrajectory(np.asarray(times, dtype=float), rho, m, u, theta, g, eps)


def fixed_point_solve(grid, hydro0: HydroState, g0, law, config: FixedPointConfig, eps,
                      hydro_params=HydroParams(), thermal_params=ThermalParams(),
                      theta_seed=None, report=None):
    """Damped Picard on one slab starting at ``hydro0.t``.

    The seed is the constant-in-time extension of ``theta(rho0, g0)`` unless
    ``theta_seed`` (a full set of samples) is given.
    """
    times = slab_times(hydro0.t, config.slab_length, thermal_params.dt)
    if theta_seed is None:
        theta0 = theta_field(g0, hydro0.rho, law, eps)
        theta_k = np.stack([theta0] * len(times))
    else:
        theta_k = np.asarray(theta_seed, dtype=float)
    report = report if report is not None else RunReport()
    norms = []
    report.update_norms.append(norms)
    report.slab_iterations.append(0)
    for it in range(1, config.max_iter + 1):
        try:
            traj = apply_L(grid, times, theta_k, hydro0, g0, law, eps,
                           hydro_params, thermal_params)
        except VirialNSFError as exc:
            report.status = f"error: {exc}"
            raise _annotate(exc, f"Picard iteration {it}")
        denom = slab_l2(grid, times, theta_k)
        r = slab_l2(grid, times, traj.theta - theta_k) / (denom if denom > 0 else 1.0)
        norms.append(r)
        report.slab_iterations[-1] = it
        if r < config.tol:
            return traj, report
        theta_k = (1.0 - config.omega) * theta_k + config.omega * traj.theta
    report.status = "not converged"
    raise ConvergenceFailure(
        f"fixed point not reached in {config.max_iter} iterations "
        f"(last residual {norms[-1]:.3e})", history=norms, residual=norms[-1])


def initial_g(law, rho0, theta0, eps):
    return sl.good_unknown(law, rho0, theta0, eps)


def continue_slabs(grid, hydro0: HydroState, g0, law, config: FixedPointConfig, eps, t_final,
                   hydro_params=HydroParams(), thermal_params=ThermalParams()):
    """Chain slabs of length ``config.slab_length`` up to ``t_final``.

    Each slab starts from the exact terminal (rho, m, g) arrays of the previous
    one.  Returns the concatenated trajectory and the run report.
    """
    report = RunReport()
    n_slabs = max(1, int(round((t_final - hydro0.t) / config.slab_length)))
    state, g = hydro0, np.asarray(g0, dtype=float)
    whole = None
    for k in range(n_slabs):
        try:
            traj, _ = fixed_point_solve(grid, state, g, law, config, eps,
                                        hydro_params, thermal_params, report=report)
        except VirialNSFError as exc:
            report.status = f"failed in slab {k}: {exc}"
            raise _annotate(exc, f"slab {k}")
        whole = traj if whole is None else whole.concat(traj)
        state, g = traj.terminal()
    report.status = "converged"
    return whole, report


def trajectory_distance(grid, a: SlabTrajectory, b: SlabTrajectory):
    """Slab-L2 distance between the temperature parts of two trajectories."""
    return slab_l2(grid, a.times, a.theta - b.theta)


__all__ = [
    "SlabTrajectory", "FixedPointConfig", "RunReport", "apply_L", "fixed_point_solve",
    "continue_slabs", "slab_times", "slab_l2", "initial_g", "trajectory_distance",
]
