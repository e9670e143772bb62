r"""Truncated virial equation of state and the thermodynamics derived from it.

The pressure law is

.. math::

    P(\rho, \theta) = \rho^\gamma + \theta \sum_{n=0}^{N} B_n(\theta) \rho^n ,

with :math:`B_1` constant.  Every function below is vectorised: ``rho`` and
``theta`` may be scalars or numpy arrays of any broadcast-compatible shape.
Quantities that carry a ``theta**2 * B_n'`` factor are continued by their
limit 0 at ``theta == 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceFailure, DomainError, IndexOutOfRange, NegativeInput

COEFFICIENT_KINDS = ("constant", "power", "rational-power", "sum")


def _falling(p, k):
    out = 1.0
    for j in range(k):
        out *= p - j
    return out


def _power_deriv(a, p, x, k):
    """k-th derivative of a*x**p, with exact zeros where the falling factorial vanishes."""
    c = a * _falling(p, k)
    if c == 0.0:
        return np.zeros_like(x)
    e = p - k
    with np.errstate(divide="ignore", invalid="ignore"):
        out = c * np.power(x, e)
    if e == 0:
        out = np.full_like(x, c)
    return out


@dataclass(frozen=True)
class CoefficientFn:
    """A virial coefficient B_n(theta) from a small closed family.

    ``constant``        a
    ``power``           a * theta**p
    ``rational-power``  a * theta**p / (1 + (theta/scale)**q)
    ``sum``             sum of ``terms``
    """

    kind: str
    amplitude: float = 0.0
    exponent: float = 0.0
    q: float = 1.0
    scale: float = 1.0
    terms: tuple = ()

    def __post_init__(self):
        if self.kind not in COEFFICIENT_KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "rational-power" and (self.q <= 0 or self.scale <= 0):
            raise ValueError("rational-power needs q > 0 and scale > 0")
        if self.kind == "sum":
            object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def constant(cls, a):
        return cls("constant", amplitude=float(a))

    @classmethod
    def power(cls, a, p):
        return cls("power", amplitude=float(a), exponent=float(p))

    @classmethod
    def rational(cls, a, p, q, scale=1.0):
        return cls("rational-power", amplitude=float(a), exponent=float(p),
                   q=float(q), scale=float(scale))

    @classmethod
    def sum_of(cls, *terms):
        return cls("sum", terms=tuple(terms))

    @property
    def is_zero(self):
        if self.kind == "sum":
            return all(t.is_zero for t in self.terms)
        return self.amplitude == 0.0

    def __call__(self, theta, order=0):
        return self.deriv(theta, order)

    def deriv(self, theta, order=0):
        """d^order B / d theta^order, vectorised.  Non-finite where singular."""
        if order not in (0, 1, 2, 3):
            raise ValueError("order must be 0..3")
        x = np.asarray(theta, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.amplitude if order == 0 else 0.0)
        if self.kind == "power":
            return _power_deriv(self.amplitude, self.exponent, x, order)
        if self.kind == "sum":
            out = np.zeros_like(x)
            for t in self.terms:
                out = out + t.deriv(x, order)
            return out
        return self._rational_deriv(x, order)

    def _rational_deriv(self, x, k):
        a, p, q, s = self.amplitude, self.exponent, self.q, self.scale
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # w(x) = h(z(x)), h(z) = 1/(1+z), z = (x/s)**q
            z = np.power(x / s, q)
            zd = [z] + [_power_deriv(s ** -q, q, x, j) for j in (1, 2, 3)]
            hd = [1.0 / (1.0 + z), -1.0 / (1.0 + z) ** 2,
                  2.0 / (1.0 + z) ** 3, -6.0 / (1.0 + z) ** 4]
            w = [hd[0],
                 hd[1] * zd[1],
                 hd[2] * zd[1] ** 2 + hd[1] * zd[2],
                 hd[3] * zd[1] ** 3 + 3.0 * hd[2] * zd[1] * zd[2] + hd[1] * zd[3]]
            out = np.zeros_like(x)
            for j in range(k + 1):
                u = _power_deriv(a, p, x, j)
                out = out + math.comb(k, j) * u * w[k - j]
        at0 = x == 0
        if np.any(at0):
            if p - k > 0:
                lim = 0.0
            elif p == k:
                lim = a * _falling(p, k)
            else:
                lim = np.nan
            out = np.where(at0, lim, out)
        return out


@dataclass(frozen=True)
class VirialLaw:
    """Complete equation-of-state record.

    ``b`` holds B_0..B_N; ``b[1]`` must be a constant (its value is
    ``b1_constant``).  Structural admissibility (exponent inequalities,
    concavity, growth) is the validator's job, not the constructor's.
    """

    gamma: float
    gamma_theta: float
    alpha: float
    alpha_bar: float
    n_trunc: int
    b: tuple
    b_bar: tuple
    mu: float
    lam: float
    kappa_a: float = 1.0
    kappa_b: float = 1.0
    m_const: float = 0.0
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        b = tuple(self.b)
        b_bar = tuple(float(v) for v in self.b_bar)
        if self.n_trunc < 0:
            raise ValueError("n_trunc must be non-negative")
        if len(b) != self.n_trunc + 1:
            raise ValueError(f"need {self.n_trunc + 1} coefficients B_0..B_N, got {len(b)}")
        if len(b_bar) != self.n_trunc + 1:
            raise ValueError(f"need {self.n_trunc + 1} limits, got {len(b_bar)}")
        if self.n_trunc >= 1 and b[1].kind != "constant":
            raise ValueError("B_1 must be constant")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "b_bar", b_bar)

    @property
    def b1_constant(self):
        return self.b[1].amplitude if self.n_trunc >= 1 else 0.0

    @property
    def higher(self):
        """Indices n >= 2 carrying a non-zero coefficient."""
        return [n for n in range(2, self.n_trunc + 1) if not self.b[n].is_zero]


class ThermoPoint(NamedTuple):
    rho: float
    theta: float


# ----------------------------------------------------------------------------
# coefficient access and the theta-combinations that appear everywhere


def eval_B(law: VirialLaw, n: int, theta, order: int = 0):
    """d^order B_n / d theta^order at ``theta``."""
    if not 0 <= n <= law.n_trunc:
        raise IndexOutOfRange(f"coefficient index {n} outside 0..{law.n_trunc}")
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0):
        raise DomainError("theta must be non-negative")
    out = law.b[n].deriv(th, order)
    if not np.all(np.isfinite(out)):
        raise DomainError(f"B_{n} derivative of order {order} is singular at theta <= 0")
    return out[()] if out.ndim == 0 else out


def _masked(theta, fn):
    th = np.asarray(theta, dtype=float)
    with np.errstate(all="ignore"):
        val = fn(th)
    return np.where(th > 0, val, 0.0)


def _theta_b(law, n, theta):
    return _masked(theta, lambda t: t * law.b[n].deriv(t, 0))


def _t2b1(law, n, theta):
    """theta^2 B_n'(theta)."""
    return _masked(theta, lambda t: t * t * law.b[n].deriv(t, 1))


def _d_t2b1(law, n, theta):
    """d/dtheta (theta^2 B_n') = 2 theta B_n' + theta^2 B_n''."""
    def f(t):
        return 2.0 * t * law.b[n].deriv(t, 1) + t * t * law.b[n].deriv(t, 2)
    return _masked(theta, f)


def _d2_t2b1(law, n, theta):
    """d^2/dtheta^2 (theta^2 B_n') = 2 B_n' + 4 theta B_n'' + theta^2 B_n'''."""
    def f(t):
        b = law.b[n]
        return 2.0 * b.deriv(t, 1) + 4.0 * t * b.deriv(t, 2) + t * t * b.deriv(t, 3)
    return _masked(theta, f)


def _btilde(law, n, theta):
    """B~_n = theta B_n' + B_n (integration constant 0)."""
    b = law.b[n]
    th = np.asarray(theta, dtype=float)
    with np.errstate(all="ignore"):
        return th * b.deriv(th, 1) + b.deriv(th, 0)


def _require_positive_rho(rho):
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0):
        raise DomainError("density must be strictly positive here")
    return r


def _out(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


# ----------------------------------------------------------------------------
# pressure


def pressure(law: VirialLaw, rho, theta):
    r = np.asarray(rho, dtype=float)
    th = np.asarray(theta, dtype=float)
    out = np.power(r, law.gamma)
    for n in range(law.n_trunc + 1):
        out = out + _theta_b(law, n, th) * np.power(r, n)
    return _out(out)


def pressure_drho(law: VirialLaw, rho, theta):
    """Analytic dP/drho; negative wherever the law is non-monotone."""
    r = np.asarray(rho, dtype=float)
    th = np.asarray(theta, dtype=float)
    out = law.gamma * np.power(r, law.gamma - 1.0)
    for n in range(1, law.n_trunc + 1):
        out = out + n * _theta_b(law, n, th) * np.power(r, n - 1)
    return _out(out)


def pressure_dtheta(law: VirialLaw, rho, theta):
    """dP/dtheta = sum (B_n + theta B_n') rho^n."""
    r = np.asarray(rho, dtype=float)
    th = np.asarray(theta, dtype=float)
    out = np.zeros(np.broadcast(r, th).shape)
    for n in range(law.n_trunc + 1):
        bt = _masked(th, lambda t, n=n: law.b[n].deriv(t, 0) + t * law.b[n].deriv(t, 1))
        # at theta = 0 the limit is B_n(0) where finite
        b0 = law.b[n].deriv(np.zeros(1), 0)[0]
        if np.isfinite(b0):
            bt = np.where(th > 0, bt, b0)
        out = out + bt * np.power(r, n)
    return _out(out)


def reduced_pressure(law: VirialLaw, rho, theta, eps=0.0):
    """P~_eps = -eps theta log theta + theta sum B_n rho^n (eps term is 0 at theta=0)."""
    r = np.asarray(rho, dtype=float)
    th = np.asarray(theta, dtype=float)
    out = np.zeros(np.broadcast(r, th).shape)
    for n in range(law.n_trunc + 1):
        out = out + _theta_b(law, n, th) * np.power(r, n)
    if eps:
        out = out - eps * _masked(th, lambda t: t * np.log(t))
    return _out(out)


def reduced_pressure_dtheta(law: VirialLaw, rho, theta, eps=0.0):
    r = np.asarray(rho, dtype=float)
    th = np.asarray(theta, dtype=float)
    out = np.zeros(np.broadcast(r, th).shape)
    for n in range(law.n_trunc + 1):
        out = out + _masked(
            th, lambda t, n=n: law.b[n].deriv(t, 0) + t * law.b[n].deriv(t, 1)
        ) * np.power(r, n)
    if eps:
        with np.errstate(divide="ignore"):
            out = out - eps * (np.log(th) + 1.0)
    return _out(out)


# ----------------------------------------------------------------------------
# energies


def reduced_energy(law: VirialLaw, rho, theta):
    """e~ = -theta^2 sum_{n>=2} B_n' rho^(n-1)/(n-1) + theta^2 B_0'/rho."""
    r = _require_positive_rho(rho)
    th = np.asarray(theta, dtype=float)
    out = _t2b1(law, 0, th) / r
    for n in law.higher:
        out = out - _t2b1(law, n, th) * np.power(r, n - 1) / (n - 1)
    return _out(out)


def internal_energy(law: VirialLaw, rho, theta):
    """Specific internal energy e = m + rho^(gamma-1)/(gamma-1) + e~."""
    r = _require_positive_rho(rho)
    cold = law.m_const + np.power(r, law.gamma - 1.0) / (law.gamma - 1.0)
    return _out(cold + reduced_energy(law, r, theta))


def good_unknown(law: VirialLaw, rho, theta, eps=0.0):
    """g = rho e~ + eps theta."""
    r = _require_positive_rho(rho)
    th = np.asarray(theta, dtype=float)
    out = eps * th + _t2b1(law, 0, th)
    for n in law.higher:
        out = out - _t2b1(law, n, th) * np.power(r, n) / (n - 1)
    return _out(out)


def dg_dtheta(law: VirialLaw, rho, theta, eps=0.0):
    """dg/dtheta at fixed rho."""
    r = np.asarray(rho, dtype=float)
    th = np.asarray(theta, dtype=float)
    out = eps + _d_t2b1(law, 0, th)
    for n in law.higher:
        out = out - _d_t2b1(law, n, th) * np.power(r, n) / (n - 1)
    return _out(out)


def d2g_dtheta2(law: VirialLaw, rho, theta):
    r = np.asarray(rho, dtype=float)
    th = np.asarray(theta, dtype=float)
    out = _d2_t2b1(law, 0, th)
    for n in law.higher:
        out = out - _d2_t2b1(law, n, th) * np.power(r, n) / (n - 1)
    return _out(out)


def dg_drho(law: VirialLaw, rho, theta):
    """dg/drho at fixed theta (eps-independent)."""
    r = np.asarray(rho, dtype=float)
    th = np.asarray(theta, dtype=float)
    out = np.zeros(np.broadcast(r, th).shape)
    for n in law.higher:
        out = out - _t2b1(law, n, th) * np.power(r, n - 1) * n / (n - 1)
    return _out(out)


def dtheta_drho(law: VirialLaw, rho, theta, eps=0.0):
    """dtheta/drho along a level set of g."""
    r = np.asarray(rho, dtype=float)
    th = np.asarray(theta, dtype=float)
    num = np.zeros(np.broadcast(r, th).shape)
    for n in law.higher:
        num = num + n / (n - 1) * _t2b1(law, n, th) * np.power(r, n - 1)
    den = dg_dtheta(law, r, th, eps)
    with np.errstate(all="ignore"):
        out = np.where(num == 0.0, 0.0, num / den)
    return _out(out)


def specific_heat(law: VirialLaw, rho, theta):
    """C_v = de/dtheta at fixed rho."""
    r = _require_positive_rho(rho)
    th = np.asarray(theta, dtype=float)
    out = _d_t2b1(law, 0, th) / r
    for n in law.higher:
        out = out - _d_t2b1(law, n, th) * np.power(r, n - 1) / (n - 1)
    return _out(out)


def entropy(law: VirialLaw, rho, theta):
    """Specific entropy s with B~_n = theta B_n' + B_n.

    The constant B_1 contributes -B_1 log rho so that ds/drho = -dP/dtheta / rho^2.
    """
    r = _require_positive_rho(rho)
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0):
        raise DomainError("entropy requires theta > 0")
    out = _btilde(law, 0, th) / r
    for n in law.higher:
        out = out - _btilde(law, n, th) * np.power(r, n - 1) / (n - 1)
    if law.b1_constant:
        out = out - law.b1_constant * np.log(r)
    return _out(out)


# ----------------------------------------------------------------------------
# temperature from the good unknown


def theta_of_g(law: VirialLaw, rho, g, eps=0.0, theta_guess=None, rtol=1e-14,
               max_iter=200):
    """Invert g(rho, .) by bracketed Newton with bisection fallback.

    Works elementwise on arrays.  The bracket [0, hi] is grown geometrically
    until g(hi) >= g; Newton steps that leave the bracket are replaced by
    bisection.
    """
    r = np.asarray(rho, dtype=float)
    gg = np.asarray(g, dtype=float)
    ee = np.asarray(eps, dtype=float)
    r, gg, ee = np.broadcast_arrays(r, gg, ee)
    r = r.astype(float).copy()
    gg = gg.astype(float).copy()
    if np.any(ee < 0):
        raise DomainError("eps must be non-negative")
    if np.any(gg < 0):
        raise NegativeInput("g must be non-negative")
    if np.any(r <= 0):
        raise DomainError("density must be strictly positive")
    shape = gg.shape
    r = r.ravel()
    gg = gg.ravel()
    ee = ee.ravel()
    theta = np.zeros_like(gg)
    active = gg > 0
    if not np.any(active):
        return _out(theta.reshape(shape))

    idx = np.nonzero(active)[0]
    ra, ga, ea = r[idx], gg[idx], ee[idx]
    lo = np.zeros_like(ga)
    if theta_guess is not None:
        guess = np.broadcast_to(np.asarray(theta_guess, dtype=float), shape).ravel()[idx]
        guess = np.where(np.isfinite(guess) & (guess > 0), guess, 1.0)
    else:
        guess = np.ones_like(ga)
    hi = np.maximum(guess, 1e-300)
    for _ in range(2100):
        low = good_unknown(law, ra, hi, ea) < ga
        if not np.any(low):
            break
        hi = np.where(low, hi * 2.0, hi)
    else:
        raise ConvergenceFailure("could not bracket the temperature")

    th = np.minimum(guess, hi)
    done = np.zeros(ga.shape, dtype=bool)
    for _ in range(max_iter):
        a = ~done
        ta, rr, gt, et = th[a], ra[a], ga[a], ea[a]
        f = good_unknown(law, rr, ta, et) - gt
        df = dg_dtheta(law, rr, ta, et)
        lo_a = np.where(f < 0, ta, lo[a])
        hi_a = np.where(f > 0, ta, hi[a])
        with np.errstate(all="ignore"):
            dx = f / df
            newton = ta - dx
        small = np.abs(dx) <= rtol * np.maximum(ta, 1e-300)
        bad = ~((newton >= lo_a) & (newton <= hi_a) & np.isfinite(newton) & (df > 0))
        nxt = np.where(bad & ~small, 0.5 * (lo_a + hi_a), newton)
        conv = (f == 0) | (small & ~bad) | (hi_a - lo_a <= rtol * hi_a)
        nxt = np.where(f == 0, ta, nxt)
        th[a] = nxt
        lo[a] = lo_a
        hi[a] = hi_a
        done[np.nonzero(a)[0][conv]] = True
        if np.all(done):
            break
    else:
        raise ConvergenceFailure(
            f"theta_of_g did not converge in {max_iter} iterations "
            f"({int(np.sum(~done))} points left)"
        )
    theta[idx] = th
    return _out(theta.reshape(shape))


# ----------------------------------------------------------------------------
# conductivity and barotropic reference potential


def conductivity(law: VirialLaw, theta):
    th = np.asarray(theta, dtype=float)
    return _out(law.kappa_a * np.power(th, law.alpha) + law.kappa_b)


def conductivity_dtheta(law: VirialLaw, theta):
    th = np.asarray(theta, dtype=float)
    return _out(law.alpha * law.kappa_a * np.power(th, law.alpha - 1.0))


def phi_potential(law: VirialLaw, rho):
    """phi(rho) = rho^gamma/(gamma-1) + sum_{2<=n<=N} Bbar_n rho^n/(n-1) + Bbar_0."""
    r = np.asarray(rho, dtype=float)
    out = np.power(r, law.gamma) / (law.gamma - 1.0) + law.b_bar[0]
    for n in range(2, law.n_trunc + 1):
        out = out + law.b_bar[n] * np.power(r, n) / (n - 1)
    return _out(out)


def phi_potential_drho(law: VirialLaw, rho):
    r = np.asarray(rho, dtype=float)
    out = law.gamma / (law.gamma - 1.0) * np.power(r, law.gamma - 1.0)
    for n in range(2, law.n_trunc + 1):
        out = out + law.b_bar[n] * n * np.power(r, n - 1) / (n - 1)
    return _out(out)


def p0_reference(law: VirialLaw, rho):
    """Barotropic reference pressure P_0(rho) = rho^gamma + sum_n Bbar_n rho^n."""
    r = np.asarray(rho, dtype=float)
    out = np.power(r, law.gamma)
    for n in range(law.n_trunc + 1):
        out = out + law.b_bar[n] * np.power(r, n)
    return _out(out)


def quasi_random_points(count, lo=0.05, hi=5.0, seed=0):
    """Deterministic 2-d Halton points scaled to [lo, hi]^2."""
    from scipy.stats import qmc

    pts = qmc.Halton(d=2, scramble=False).random(count + 1)[1:]
    return lo + (hi - lo) * pts[:, 0], lo + (hi - lo) * pts[:, 1]


def as_sequence(values: Sequence[float] | float):
    return np.atleast_1d(np.asarray(values, dtype=float))


def internal_energy_drho(law: VirialLaw, rho, theta):
    """de/drho at fixed theta."""
    r = _require_positive_rho(rho)
    th = np.asarray(theta, dtype=float)
    out = np.power(r, law.gamma - 2.0) - _t2b1(law, 0, th) / (r * r)
    for n in law.higher:
        out = out - _t2b1(law, n, th) * np.power(r, n - 2)
    return _out(out)
