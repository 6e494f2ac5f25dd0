"""Tensor quadrature on the ordered simplex 0 < s_1 < ... < s_n < 1.

The cube [0,1]^n is mapped onto the simplex by collapsed coordinates
s_k = u_k u_{k+1} ... u_n. The Jacobian prod_k u_k^(k-1) is absorbed into a
Gauss-Jacobi rule on each axis, so polynomials in s of degree <= 2*order - 1
in every variable are integrated exactly and analytic integrands converge
geometrically.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi

from .errors import ConfigError


@dataclass(frozen=True, eq=False)
class SimplexGrid:
    """Nodes (P, n), strictly increasing along each row, and positive weights summing to 1/n!."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @cached_property
    def gaps(self) -> np.ndarray:
        """Interval lengths s_1 - 0, s_2 - s_1, ..., 1 - s_n, shape (P, n + 1)."""
        p = self.size
        edges = np.concatenate([np.zeros((p, 1)), self.nodes, np.ones((p, 1))], axis=1)
        out = np.diff(edges, axis=1)
        out.setflags(write=False)
        return out


@lru_cache(maxsize=64)
def _jacobi01(order: int, power: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule on [0,1] for the weight u^power."""
    x, w = roots_jacobi(order, 0.0, float(power))
    u = (x + 1.0) / 2.0
    w = w / 2.0 ** (power + 1)
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


@lru_cache(maxsize=32)
def simplex_rule(n: int, order: int) -> SimplexGrid:
    """Collapsed Gauss-Jacobi rule with `order` points per axis (order**n nodes)."""
    if n < 1 or order < 1:
        raise ConfigError("simplex rule needs n >= 1 and order >= 1")
    axes = [_jacobi01(order, k) for k in range(n)]  # axis k carries u_{k+1}^k
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    s = np.cumprod(u[:, ::-1], axis=1)[:, ::-1]
    s.setflags(write=False)
    w.setflags(write=False)
    return SimplexGrid(s, w)


def simplex_volume(n: int) -> float:
    return 1.0 / factorial(n)
