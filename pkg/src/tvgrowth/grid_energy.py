"""Discrete energies on a uniform grid of [0, 1].

Slopes live on edges (forward differences), the fidelity term uses trapezoid
weights on nodes.  With this choice the gradient of the discrete energy is
exactly the discrete Euler equation and its Hessian is tridiagonal; the
Neumann condition is natural and needs no ghost nodes.

The dual variable sigma lives on edge midpoints.  ``dual_functional_edges``
is the exact Lagrangian dual of the discrete primal, so weak duality holds
for every admissible sigma, not only asymptotically.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solveh_banded

from .densities import Density, DomainError, conjugate, inv_deriv, lambda_inf

BOX_TOL = 1e-12
K_CAP_REL = 1e-6


class GridMismatchError(ValueError):
    pass


class BoundaryConditionError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs n >= 2 nodes, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.n) * self.h
        t[-1] = 1.0
        return t

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights w_i (1 inside, 1/2 at the ends)."""
        w = np.ones(self.n)
        w[0] = w[-1] = 0.5
        return w

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])


@dataclass(frozen=True)
class Signal:
    """Samples f_i of the datum at the grid nodes; 0 <= f <= 1."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise GridMismatchError(f"expected {self.grid.n} samples, got shape {v.shape}")
        if np.any(~np.isfinite(v)) or v.min() < -BOX_TOL or v.max() > 1 + BOX_TOL:
            raise ValueError("signal samples must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values) -> "Signal":
        values = np.asarray(values, dtype=float)
        return cls(Grid(len(values)), values)

    @property
    def n(self) -> int:
        return self.grid.n

    def total_variation(self) -> float:
        return float(np.abs(np.diff(self.values)).sum())


@dataclass(frozen=True)
class EnergyBreakdown:
    smoothing: float
    fidelity: float
    tikhonov: float

    @property
    def total(self) -> float:
        return self.smoothing + self.fidelity + self.tikhonov


def _check(u, f: Signal) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (f.grid.n,):
        raise GridMismatchError(f"u has shape {u.shape}, grid has {f.grid.n} nodes")
    return u


def slopes(u, h: float) -> np.ndarray:
    return np.diff(np.asarray(u, dtype=float)) / h


def energy(u, f: Signal, d: Density, lam: float, delta: float = 0.0) -> EnergyBreakdown:
    """Discrete J_delta: sum h F(s) + lam/2 sum h w (u-f)^2 + delta/2 sum h s^2."""
    u = _check(u, f)
    g = f.grid
    s = slopes(u, g.h)
    smooth = g.h * float(np.sum(d.value(s)))
    fid = 0.5 * lam * g.h * float(np.sum(g.weights * (u - f.values) ** 2))
    tik = 0.5 * delta * g.h * float(np.sum(s * s))
    return EnergyBreakdown(smooth, fid, tik)


def gradient(u, f: Signal, d: Density, lam: float, delta: float = 0.0) -> np.ndarray:
    u = _check(u, f)
    g = f.grid
    s = slopes(u, g.h)
    flux = d.deriv(s) + delta * s  # F'_delta on edges
    grad = lam * g.h * g.weights * (u - f.values)
    grad[:-1] -= flux
    grad[1:] += flux
    return grad


@dataclass(frozen=True)
class Tridiagonal:
    """Symmetric tridiagonal matrix stored as (diag, off)."""

    diag: np.ndarray
    off: np.ndarray

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out

    def toarray(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def solve(self, b) -> np.ndarray:
        ab = np.zeros((2, len(self.diag)))
        ab[0, 1:] = self.off
        ab[1] = self.diag
        return solveh_banded(ab, b, check_finite=False)


def hessian(u, f: Signal, d: Density, lam: float, delta: float = 0.0) -> Tridiagonal:
    u = _check(u, f)
    g = f.grid
    s = slopes(u, g.h)
    k = (d.deriv2(s) + delta) / g.h
    diag = lam * g.h * g.weights
    diag[:-1] += k
    diag[1:] += k
    return Tridiagonal(diag, -k)


def slope_cap(d: Density, rel: float = K_CAP_REL) -> float:
    """Slope p* with F'(p*) = (1 - rel) lambda_inf."""
    return float(inv_deriv(d, (1.0 - rel) * lambda_inf(d)))


def relaxed_energy_K(u, f: Signal, d: Density, lam: float) -> float:
    """Grid surrogate of K: beyond the cap slope an edge is charged at rate lambda_inf."""
    u = _check(u, f)
    g = f.grid
    lam_inf = lambda_inf(d)
    pstar = slope_cap(d)
    du = np.abs(np.diff(u))
    s = du / g.h
    steep = s > pstar
    edge = g.h * d.value(np.where(steep, pstar, s))
    edge = np.where(steep, edge + lam_inf * (du - g.h * pstar), edge)
    fid = 0.5 * lam * g.h * float(np.sum(g.weights * (u - f.values) ** 2))
    return float(np.sum(edge)) + fid


def edge_to_node(sigma_edges) -> np.ndarray:
    """Node values from midpoint values; zero at both ends."""
    se = np.asarray(sigma_edges, dtype=float)
    out = np.zeros(len(se) + 1)
    out[1:-1] = 0.5 * (se[1:] + se[:-1])
    return out


def node_to_edge(sigma_nodes) -> np.ndarray:
    sn = np.asarray(sigma_nodes, dtype=float)
    return 0.5 * (sn[1:] + sn[:-1])


def dual_functional_edges(sigma_edges, f: Signal, d: Density, lam: float) -> float:
    """R[sigma] for sigma on edge midpoints.

    sigma' at node i is (sigma_{i+1/2} - sigma_{i-1/2}) / (h w_i) with
    sigma = 0 beyond the ends, integrated with the trapezoid weights;
    F*(sigma) is integrated by the midpoint rule.
    """
    se = np.asarray(sigma_edges, dtype=float)
    g = f.grid
    if se.shape != (g.n - 1,):
        raise GridMismatchError(f"expected {g.n - 1} edge values, got {se.shape}")
    if np.any(np.abs(se) >= lambda_inf(d)):
        raise DomainError("dual variable must satisfy |sigma| < lambda_inf")
    padded = np.concatenate(([0.0], se, [0.0]))
    jump = np.diff(padded)  # = h w_i sigma'_i
    hw = g.h * g.weights
    quad = float(np.sum(jump**2 / (2.0 * lam * hw) + jump * f.values))
    return -quad - g.h * float(np.sum(conjugate(d, se)))


def dual_functional_R(sigma, f: Signal, d: Density, lam: float, bc_tol: float = 1e-8) -> float:
    """R[sigma] for node values; endpoints must vanish.

    Node values are averaged onto edge midpoints and evaluated with
    :func:`dual_functional_edges`, which keeps R a true lower bound of the
    discrete J for every admissible sigma.
    """
    sn = np.asarray(sigma, dtype=float)
    if sn.shape != (f.grid.n,):
        raise GridMismatchError(f"expected {f.grid.n} node values, got {sn.shape}")
    if np.any(np.abs(sn) >= lambda_inf(d)):
        raise DomainError("dual variable must satisfy |sigma| < lambda_inf")
    if abs(sn[0]) > bc_tol or abs(sn[-1]) > bc_tol:
        raise BoundaryConditionError(
            f"sigma must vanish at both ends (got {sn[0]:.3g}, {sn[-1]:.3g})"
        )
    return dual_functional_edges(node_to_edge(sn), f, d, lam)
