"""Preset laws used in examples, tests and configuration files."""

from __future__ import annotations

from .statelaw import CoefficientFn, VirialLaw

C = CoefficientFn


def _base(b2, name, **kw):
    params = dict(gamma=5.0, gamma_theta=2.0, alpha=4.0, alpha_bar=3.0, n_trunc=2,
                  b=(C.power(1.0, 1.0), C.constant(0.0), b2), b_bar=(0.0, 0.0, 0.0),
                  mu=1.0, lam=0.0, kappa_a=1.0, kappa_b=1.0, m_const=0.0, name=name)
    params.update(kw)
    return VirialLaw(**params)


def reference_law(**kw):
    """gamma=5, N=2, B_0 = theta, B_1 = B_2 = 0, kappa = theta^4 + 1."""
    return _base(C.constant(0.0), "reference", **kw)


def demo_law(**kw):
    """Non-monotone law with B_2 = -1/2 theta^(1/5) / (1 + theta^(6/5))."""
    return _base(C.rational(-0.5, 0.2, 1.2, 1.0), "demo", **kw)


def concave_law(c=0.5, p=0.2, **kw):
    """B_2 = -c theta^p with 0 < p < 1; satisfies every structural check."""
    return _base(C.power(-c, p), "concave", **kw)


def constant_b2_law(c=-0.5, **kw):
    """B_2 constant and non-zero: violates the asymptotic bound on |theta B_2 - Bbar_2|."""
    return _base(C.constant(c), "constant-b2", **kw)


def nonconcave_law(**kw):
    """B_2 = -theta / (1 + theta^2): theta^2 B_2' increases for theta > 1."""
    return _base(C.rational(-1.0, 1.0, 2.0, 1.0), "nonconcave", **kw)


def nonmonotone_law(c1=-1.0, **kw):
    """Reference law plus a negative constant B_1: dP/drho < 0 at small rho, theta > 0.

    Passes every structural check (the growth bounds exempt n = 1).
    """
    return _base(C.constant(0.0), "nonmonotone", b=(C.power(1.0, 1.0), C.constant(c1),
                                                     C.constant(0.0)), **kw)


PRESETS = {
    "reference": reference_law,
    "demo": demo_law,
    "concave": concave_law,
    "constant-b2": constant_b2_law,
    "nonconcave": nonconcave_law,
    "nonmonotone": nonmonotone_law,
}


def preset(name, **kw):
    try:
        return PRESETS[name](**kw)
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
