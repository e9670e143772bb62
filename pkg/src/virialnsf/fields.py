"""Uniform periodic grids and second-order stencils on cell-centred fields.

Fields are plain numpy arrays.  A scalar field on a ``dim``-dimensional grid
has shape ``(n,) * dim``; a vector field has a leading component axis,
``(dim,) + (n,) * dim``; a tensor field has two, ``(dim, dim) + (n,) * dim``.
Face quantities use the same layout as vectors: component ``i`` at index
``c`` lives on the face between cells ``c`` and ``c + e_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PeriodicGrid:
    dim: int
    n: int
    length: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.n < 8:
            raise ValueError("need at least 8 cells per axis")

    @property
    def h(self):
        return self.length / self.n

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def cell_volume(self):
        return self.h ** self.dim

    def coords(self):
        """Cell-centre coordinates, one array per axis (``ij`` indexing)."""
        x = (np.arange(self.n) + 0.5) * self.h
        return np.meshgrid(*([x] * self.dim), indexing="ij")

    def zeros(self):
        return np.zeros(self.shape)

    def vector_zeros(self):
        return np.zeros((self.dim,) + self.shape)


def shift(f, axis, k):
    """Values of f at c + k e_axis (periodic)."""
    return np.roll(f, -k, axis=axis)


def gradient(grid: PeriodicGrid, f):
    out = np.empty((grid.dim,) + f.shape)
    for i in range(grid.dim):
        out[i] = (shift(f, i, 1) - shift(f, i, -1)) / (2.0 * grid.h)
    return out


def divergence(grid: PeriodicGrid, v):
    out = np.zeros(v.shape[1:])
    for i in range(grid.dim):
        out += (shift(v[i], i, 1) - shift(v[i], i, -1)) / (2.0 * grid.h)
    return out


def laplacian(grid: PeriodicGrid, f):
    out = np.zeros(f.shape)
    for i in range(grid.dim):
        out += shift(f, i, 1) - 2.0 * f + shift(f, i, -1)
    return out / grid.h ** 2


def vector_laplacian(grid: PeriodicGrid, v):
    return np.stack([laplacian(grid, v[i]) for i in range(grid.dim)])


def velocity_gradient(grid: PeriodicGrid, u):
    """G[i, j] = d u_i / d x_j (central)."""
    return np.stack([gradient(grid, u[i]) for i in range(grid.dim)])


def stress_tensor(grid: PeriodicGrid, u, mu, lam):
    """S = mu (grad u + grad u^T) + lam div u Id."""
    g = velocity_gradient(grid, u)
    s = mu * (g + np.swapaxes(g, 0, 1))
    div = np.trace(g, axis1=0, axis2=1)
    for i in range(grid.dim):
        s[i, i] += lam * div
    return s


def stress_divergence(grid: PeriodicGrid, u, mu, lam):
    """mu Lap u + (lam + mu) grad div u, compact Laplacian."""
    return mu * vector_laplacian(grid, u) + (lam + mu) * gradient(grid, divergence(grid, u))


def stress_contract(s, grad_u):
    """S : grad u = sum_ij S_ij G_ij."""
    return np.einsum("ij...,ij...->...", s, grad_u)


def integrate(grid: PeriodicGrid, f):
    return float(np.sum(f) * grid.cell_volume)


def lp_norm(grid: PeriodicGrid, f, p=2):
    if p == np.inf:
        return float(np.max(np.abs(f)))
    return float((np.sum(np.abs(f) ** p) * grid.cell_volume) ** (1.0 / p))


def llf_flux(grid: PeriodicGrid, q, v, wavespeed):
    """Local Lax-Friedrichs face fluxes of q advected by v.

    ``wavespeed`` is either a scalar field (shared by all axes) or a vector
    field with one speed per axis.
    """
    out = np.empty((grid.dim,) + q.shape)
    a_all = np.asarray(wavespeed)
    for i in range(grid.dim):
        a = a_all[i] if a_all.ndim == q.ndim + 1 else a_all
        q1, f0 = shift(q, i, 1), q * v[i]
        f1 = shift(f0, i, 1)
        af = np.maximum(a, shift(a, i, 1))
        out[i] = 0.5 * (f0 + f1) - 0.5 * af * (q1 - q)
    return out


def flux_divergence(grid: PeriodicGrid, flux):
    """sum_i (F_i[c] - F_i[c - e_i]) / h."""
    out = np.zeros(flux.shape[1:])
    for i in range(grid.dim):
        out += flux[i] - shift(flux[i], i, -1)
    return out / grid.h


def face_average(grid: PeriodicGrid, f):
    """Arithmetic mean of f on every face."""
    return np.stack([0.5 * (f + shift(f, i, 1)) for i in range(grid.dim)])


def face_difference(grid: PeriodicGrid, f):
    """(f[c + e_i] - f[c]) / h on every face."""
    return np.stack([(shift(f, i, 1) - f) / grid.h for i in range(grid.dim)])
