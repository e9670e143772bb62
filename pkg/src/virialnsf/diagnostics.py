"""Conserved and dissipated functionals of a trajectory, and inequality residuals.

All time integrals are cumulative sums over the trajectory samples.  Unless
stated otherwise the integrand of an interval ``[t_k, t_k+1]`` is taken at
the right end point, matching the implicit thermal step.  Conduction
dissipation uses the face form ``kappa_f (dtheta)^2 / (h^2 theta_c theta_c+1)``,
for which the discrete entropy balance of pure diffusion is sign-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields

import numpy as np

from . import fields as fd
from . import statelaw as sl
from .errors import NonPhysicalState
from .thermal import entropy_field

SERIES_COLUMNS = (
    "time", "mass", "kinetic", "internal", "total_energy", "g_total", "entropy_total",
    "theta_gamma_norm", "conduction_dissipation", "velocity_dissipation_weighted",
    "phi_theta", "rho_gamma_a",
)

# Calibrated once on the small-data coupled run: the measured |E(T) - E(0)| / ((dt + h^2) T)
# is about 0.12 there (see tests/test_diagnostics.py).
DEFAULT_C_TOL = 1.0


@dataclass(frozen=True)
class DiagnosticSeries:
    time: np.ndarray
    mass: np.ndarray
    kinetic: np.ndarray
    internal: np.ndarray
    total_energy: np.ndarray
    g_total: np.ndarray
    entropy_total: np.ndarray
    theta_gamma_norm: np.ndarray
    conduction_dissipation: np.ndarray
    velocity_dissipation_weighted: np.ndarray
    phi_theta: np.ndarray
    rho_gamma_a: np.ndarray

    def rows(self):
        cols = [getattr(self, f.name) for f in dc_fields(self)]
        return [tuple(float(c[k]) for c in cols) for k in range(len(self.time))]


# ----------------------------------------------------------------------------
# pointwise densities


def kinetic_density(rho, m, threshold=1e-10):
    m2 = np.sum(m * m, axis=0)
    vac = rho <= threshold
    if np.any(vac & (m2 > 0)):
        raise NonPhysicalState("momentum in a vacuum cell")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(vac, 0.0, 0.5 * m2 / rho)


def total_energy(grid, rho, m, theta, law):
    """Discrete E = int |m|^2 / 2 rho + rho e(rho, theta)."""
    kin = kinetic_density(rho, m)
    internal = rho * sl.internal_energy(law, rho, theta)
    return fd.integrate(grid, kin) + fd.integrate(grid, internal)


def conduction_density(grid, law, theta):
    """Cell sum of face terms kappa_f (dtheta)^2 / (h^2 theta_c theta_c+1)."""
    kap = sl.conductivity(law, theta)
    out = np.zeros_like(theta)
    for i in range(grid.dim):
        t1 = fd.shift(theta, i, 1)
        kf = 0.5 * (kap + fd.shift(kap, i, 1))
        out += kf * (t1 - theta) ** 2 / (grid.h ** 2 * theta * t1)
    return out


def grad_u_squared(grid, u):
    g = fd.velocity_gradient(grid, u)
    return np.sum(g * g, axis=(0, 1))


def shear_heating(grid, u, law):
    s = fd.stress_tensor(grid, u, law.mu, law.lam)
    return fd.stress_contract(s, fd.velocity_gradient(grid, u))


# ----------------------------------------------------------------------------
# series


def _cumulative_right(times, values):
    dt = np.diff(times)
    return np.concatenate([[0.0], np.cumsum(dt * np.asarray(values)[1:])])


def _cumulative_trapz(times, values):
    v = np.asarray(values)
    dt = np.diff(times)
    return np.concatenate([[0.0], np.cumsum(0.5 * dt * (v[1:] + v[:-1]))])


def rho_gamma_a_exponent(law, dim):
    return law.gamma + 1.0 / (2.0 * dim)


def compute_series(grid, traj, law):
    """All series fields of a trajectory (``traj`` as produced by the coupler)."""
    eps = traj.eps
    t = np.asarray(traj.times)
    k = len(t)
    integ = lambda f: fd.integrate(grid, f)  # noqa: E731
    mass = np.array([integ(traj.rho[j]) for j in range(k)])
    kin = np.array([integ(kinetic_density(traj.rho[j], traj.m[j])) for j in range(k)])
    internal = np.array([integ(traj.rho[j] * sl.internal_energy(law, traj.rho[j], traj.theta[j]))
                         for j in range(k)])
    g_total = np.array([integ(traj.g[j]) for j in range(k)])
    ent = np.array([integ(entropy_field(traj.g[j], traj.rho[j], law, eps, traj.theta[j]))
                    for j in range(k)])
    th_gam = np.array([integ(traj.theta[j] ** law.gamma_theta) for j in range(k)])
    cond = np.array([integ(conduction_density(grid, law, traj.theta[j])) for j in range(k)])
    gu2 = np.array([integ(grad_u_squared(grid, traj.u[j])) for j in range(k)])
    gu2_w = np.array([integ(grad_u_squared(grid, traj.u[j]) / traj.theta[j]) for j in range(k)])
    th_ab = np.array([integ(traj.theta[j] ** law.alpha_bar) for j in range(k)])
    rga = np.array([integ(traj.rho[j] ** rho_gamma_a_exponent(law, grid.dim))
                    for j in range(k)])
    l2_ab = _cumulative_right(t, th_ab ** (2.0 / law.alpha_bar))
    phi = _cumulative_right(t, gu2) + l2_ab ** (law.alpha_bar / 2.0)
    return DiagnosticSeries(
        time=t, mass=mass, kinetic=kin, internal=internal, total_energy=kin + internal,
        g_total=g_total, entropy_total=ent, theta_gamma_norm=th_gam,
        conduction_dissipation=_cumulative_right(t, cond),
        velocity_dissipation_weighted=_cumulative_right(t, gu2_w),
        phi_theta=phi, rho_gamma_a=_cumulative_right(t, rga),
    )


# ----------------------------------------------------------------------------
# residuals


def tolerance(c_tol, dt, h, span):
    return c_tol * (dt + h * h) * span


def energy_inequality_residual(series: DiagnosticSeries):
    """E(t) - E(0); the inequality asks for <= 0 up to discretisation tolerance."""
    return series.total_energy - series.total_energy[0]


def g_balance_residual(grid, traj, law, series=None):
    """int g(t) - int g(0) - trapezoidal int int (S:grad u - P~_eps div u)."""
    t = np.asarray(traj.times)
    src = []
    for j in range(len(t)):
        u = traj.u[j]
        work = sl.reduced_pressure(law, traj.rho[j], traj.theta[j], traj.eps) \
            * fd.divergence(grid, u)
        src.append(fd.integrate(grid, shear_heating(grid, u, law) - work))
    g_tot = series.g_total if series is not None else \
        np.array([fd.integrate(grid, g) for g in traj.g])
    return g_tot - g_tot[0] - _cumulative_trapz(t, src)


def entropy_production_density(grid, traj, law, j):
    """(1/theta) S:grad u + conduction dissipation at sample j."""
    th = traj.theta[j]
    if np.any(th <= 0):
        raise sl.DomainError("entropy production needs theta > 0")
    return shear_heating(grid, traj.u[j], law) / th + conduction_density(grid, law, th)


def entropy_inequality_residual(grid, traj, law, series=None):
    """Per-interval (int rho s)(t_k+1) - (int rho s)(t_k) - dt * production(t_k+1)."""
    t = np.asarray(traj.times)
    ent = series.entropy_total if series is not None else np.array(
        [fd.integrate(grid, entropy_field(traj.g[j], traj.rho[j], law, traj.eps, traj.theta[j]))
         for j in range(len(t))])
    prod = np.array([fd.integrate(grid, entropy_production_density(grid, traj, law, j))
                     for j in range(1, len(t))])
    return np.diff(ent) - np.diff(t) * prod


def rho_power_identity_residual(grid, traj, n):
    """int rho^n(t) - int rho^n(0) + (n - 1) int int rho^n div u (trapezoidal)."""
    t = np.asarray(traj.times)
    rn = np.array([fd.integrate(grid, r ** n) for r in traj.rho])
    src = np.array([fd.integrate(grid, traj.rho[j] ** n * fd.divergence(grid, traj.u[j]))
                    for j in range(len(t))])
    return rn - rn[0] + (n - 1) * _cumulative_trapz(t, src)


@dataclass(frozen=True)
class AprioriReport:
    sup_theta_gamma: float
    conduction_total: float
    velocity_weighted_total: float
    phi_theta_final: float
    poincare_ratio: np.ndarray


def apriori_functionals(grid, traj, law, series=None):
    series = series if series is not None else compute_series(grid, traj, law)
    ratios = []
    for j in range(len(traj.times)):
        th = traj.theta[j]
        lhs = fd.integrate(grid, th ** law.alpha_bar)
        rhs = fd.integrate(grid, th ** law.gamma_theta) ** (law.alpha_bar / law.gamma_theta) \
            + fd.integrate(grid, conduction_density(grid, law, th))
        ratios.append(lhs / rhs if rhs > 0 else np.inf)
    return AprioriReport(
        sup_theta_gamma=float(np.max(series.theta_gamma_norm)),
        conduction_total=float(series.conduction_dissipation[-1]),
        velocity_weighted_total=float(series.velocity_dissipation_weighted[-1]),
        phi_theta_final=float(series.phi_theta[-1]),
        poincare_ratio=np.array(ratios),
    )


@dataclass(frozen=True)
class InequalityReport:
    energy_ok: bool
    entropy_ok: bool
    g_balance_ok: bool
    energy_worst: float
    entropy_worst: float
    g_balance_rel: float
    tol_e: float
    tol_s: float
    tol_g: float = 1e-3

    @property
    def ok(self):
        return self.energy_ok and self.entropy_ok and self.g_balance_ok

    def to_text(self):
        def s(b):
            return "PASS" if b else "FAIL"
        return (
            f"energy   {s(self.energy_ok)} max residual {self.energy_worst:.6e} (tol {self.tol_e:.3e})\n"
            f"entropy  {s(self.entropy_ok)} min residual {self.entropy_worst:.6e} (tol {self.tol_s:.3e})\n"
            f"g-balance {s(self.g_balance_ok)} relative {self.g_balance_rel:.6e} (tol {self.tol_g:g})\n"
        )


def check_inequalities(grid, traj, law, series=None, c_tol=DEFAULT_C_TOL, g_rel_tol=1e-3):
    """PASS/FAIL of the energy, entropy and g-balance statements on a trajectory."""
    series = series if series is not None else compute_series(grid, traj, law)
    t = np.asarray(traj.times)
    dt = float(np.max(np.diff(t))) if len(t) > 1 else 0.0
    e_res = energy_inequality_residual(series)
    tol_e = tolerance(c_tol, dt, grid.h, t - t[0])
    s_res = entropy_inequality_residual(grid, traj, law, series)
    tol_s = tolerance(c_tol, dt, grid.h, np.diff(t))
    g_res = g_balance_residual(grid, traj, law, series)
    g0 = abs(series.g_total[0]) or 1.0
    g_rel = float(np.max(np.abs(g_res))) / g0
    return InequalityReport(
        energy_ok=bool(np.all(e_res <= tol_e)),
        entropy_ok=bool(np.all(s_res >= -tol_s)) if s_res.size else True,
        g_balance_ok=g_rel < g_rel_tol,
        energy_worst=float(np.max(e_res)),
        entropy_worst=float(np.min(s_res)) if s_res.size else 0.0,
        g_balance_rel=g_rel,
        tol_e=float(tol_e[-1]),
        tol_s=float(np.max(tol_s)) if s_res.size else 0.0,
        tol_g=g_rel_tol,
    )
