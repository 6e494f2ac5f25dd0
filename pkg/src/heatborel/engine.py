"""Shared evaluation engine for simplex integrals over atom tuples.

Every quantity in the package has the form

    sum over tuples (j_1..j_n) of  [ sum over simplex nodes p of  W_p(x, y) f(Phi_p) ] M_{j_n} ... M_{j_1}

where Phi_p = (mu, mu)_{wt} is the deformation quadratic form divided by t
(it equals the free form when w = 0) and W_p carries the quadrature weight and
the path phase exp(i q(s).xi). The engine enumerates tuples in a fixed order,
splits them into fixed-size chunks, evaluates chunks (optionally on a thread
pool) and reduces the chunk results sequentially, so results do not depend on
the number of threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import factorial
from typing import Callable, Iterator, Sequence

import numpy as np

from .defmatrix import free_form_and_moment, omega_matrix
from .errors import ConfigError, CostCapExceeded
from .measures import DiscreteMeasure
from .mehler import path_weights
from .simplex import simplex_rule

COST_CAP_ENV = "HEATBOREL_COST_CAP"
DEFAULT_COST_CAP = 5e7
ENTRY_BUDGET = 1 << 21  # complex entries per (tuples x nodes x outputs) work array


def cost_cap(override: float | None = None) -> float:
    if override is not None:
        return float(override)
    env = os.environ.get(COST_CAP_ENV)
    if env:
        try:
            return float(env)
        except ValueError as exc:
            raise ConfigError(f"{COST_CAP_ENV} must be a number, got {env!r}") from exc
    return DEFAULT_COST_CAP


def order_for(quad_order, n: int) -> int:
    """Per-axis order for the n-fold simplex; `quad_order` is an int or a per-n sequence."""
    if isinstance(quad_order, (int, np.integer)):
        return int(quad_order)
    seq = list(quad_order)
    return int(seq[min(n, len(seq)) - 1])


@dataclass(frozen=True, eq=False)
class TupleChunk:
    """A run of atom tuples sharing one simplex rule.

    xi : (T, n, nu) frequencies; mprod : (T, d, d) time-ordered weight products.
    `analytic` marks the merged all-zero-frequency tuples, integrated exactly.
    """

    xi: np.ndarray
    mprod: np.ndarray
    analytic: bool = False


def _tuples(measure: DiscreteMeasure, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All n-tuples in lexicographic order (last index fastest) with their products.

    Returns (idx (N^n, n), mprod (N^n, d, d), all_zero (N^n,) bool).
    """
    natoms = measure.n_atoms
    w = measure.weights
    idx = np.zeros((1, 0), dtype=np.int64)
    prod = np.eye(measure.d, dtype=complex)[None]
    for _ in range(n):
        # new index j_k is appended last: M_{j_k} multiplies from the left
        prod = np.einsum("jab,tbc->tjac", w, prod).reshape(-1, measure.d, measure.d)
        idx = np.concatenate(
            [np.repeat(idx, natoms, axis=0), np.tile(np.arange(natoms), idx.shape[0])[:, None]], axis=1
        )
    zero_atom = np.all(measure.xi == 0, axis=1)
    all_zero = np.all(zero_atom[idx], axis=1) if n else np.ones(1, bool)
    return idx, prod, all_zero


class TermEngine:
    """Tuple enumeration, simplex rules and chunked reduction for one measure."""

    def __init__(self, measure: DiscreteMeasure, quad_order=8, chunk_tuples: int = 32,
                 threads: int = 1, cap: float | None = None):
        self.measure = measure
        self.quad_order = quad_order
        self.chunk_tuples = int(chunk_tuples)
        self.threads = max(1, int(threads))
        self.cap = cost_cap(cap)
        self._chunks: dict[int, list[TupleChunk]] = {}

    @property
    def d(self) -> int:
        return self.measure.d

    def grid(self, n: int):
        return simplex_rule(n, order_for(self.quad_order, n))

    def chunks(self, n: int) -> list[TupleChunk]:
        if n not in self._chunks:
            self._chunks[n] = self._build_chunks(n)
        return self._chunks[n]

    def _build_chunks(self, n: int) -> list[TupleChunk]:
        m = self.measure
        if m.is_zero:
            return []
        if m.n_atoms ** n > self.cap:
            raise CostCapExceeded(f"{m.n_atoms}^{n} atom tuples exceed the cost cap {self.cap:g}")
        idx, prod, all_zero = _tuples(m, n)
        live = np.any(prod != 0, axis=(1, 2))
        out = []
        zero_sel = live & all_zero
        if np.any(zero_sel):
            out.append(TupleChunk(np.zeros((1, n, m.nu)), prod[zero_sel].sum(axis=0)[None], analytic=True))
        keep = np.flatnonzero(live & ~all_zero)
        for start in range(0, keep.size, self.chunk_tuples):
            sel = keep[start : start + self.chunk_tuples]
            out.append(TupleChunk(m.xi[idx[sel]], prod[sel]))
        return out

    def cost(self, n_max: int) -> float:
        """Number of (tuple, node) pairs needed for orders 1..n_max."""
        total = 0.0
        for n in range(1, n_max + 1):
            if self.measure.is_zero:
                break
            if self.measure.n_atoms ** n > self.cap:
                return float(self.measure.n_atoms) ** n
            quad = sum(c.xi.shape[0] for c in self.chunks(n) if not c.analytic)
            total += quad * float(order_for(self.quad_order, n)) ** n
        return total

    def preflight(self, n_max: int) -> float:
        c = self.cost(n_max)
        if c > self.cap:
            raise CostCapExceeded(
                f"estimated cost {c:.3g} (tuples x nodes) exceeds cap {self.cap:.3g}; "
                f"lower n_max or quad_order, or raise {COST_CAP_ENV}"
            )
        return c

    # -- chunk-level primitives -------------------------------------------------

    def _node_slices(self, n_tuples: int, n_nodes: int, n_out: int) -> list[slice]:
        per = max(1, ENTRY_BUDGET // max(1, n_tuples * n_out))
        return [slice(a, min(a + per, n_nodes)) for a in range(0, n_nodes, per)]

    def _map(self, fn: Callable, items: Sequence):
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(fn, items))
        return [fn(it) for it in items]

    @staticmethod
    def _ordered_sum(parts, shape) -> np.ndarray:
        total = np.zeros(shape, dtype=complex)
        for p in parts:
            total += p
        return total

    def free_pieces(self, n: int, n_out: int) -> Iterator[tuple]:
        """Yield (chunk, node slice) work items for order n in the fixed reduction order."""
        for chunk in self.chunks(n):
            if chunk.analytic:
                yield chunk, None
            else:
                size = self.grid(n).size
                for sl in self._node_slices(chunk.xi.shape[0], size, n_out):
                    yield chunk, sl

    def free_data(self, n: int, chunk: TupleChunk, sl):
        """Free form B (T, P), first moment m (T, P, nu), weights w (P,) and total frequency (T, nu)."""
        if chunk.analytic:
            nu = chunk.xi.shape[2]
            return np.zeros((1, 1)), np.zeros((1, 1, nu)), np.array([1.0 / factorial(n)]), np.zeros((1, nu))
        grid = self.grid(n)
        b, m = free_form_and_moment(grid.gaps[sl], chunk.xi)
        return b, m, grid.weights[sl], chunk.xi.sum(axis=1)

    def reduce_free(self, n: int, fn: Callable[[np.ndarray], np.ndarray], n_out: int,
                    pairs: Sequence[tuple]) -> np.ndarray:
        """sum_tuples [sum_p w_p e^{i phase} fn(B)_k] Mprod for every (x, y) pair.

        `fn` maps B of shape (T, P) to (T, P, n_out). Returns (len(pairs), n_out, d, d).
        """
        pairs = [(np.atleast_1d(np.asarray(x, complex)), np.atleast_1d(np.asarray(y, complex))) for x, y in pairs]

        def work(item):
            chunk, sl = item
            b, m, w, xsum = self.free_data(n, chunk, sl)
            vals = fn(b)
            out = np.empty((len(pairs), n_out, self.d, self.d), dtype=complex)
            for i, (x, y) in enumerate(pairs):
                phase = (xsum @ y)[:, None] + m @ (x - y)
                pw = w[None, :] * np.exp(1j * phase)
                s = np.einsum("tp,tpk->tk", pw, vals)
                out[i] = np.einsum("tk,tab->kab", s, chunk.mprod)
            return out

        items = list(self.free_pieces(n, n_out))
        return self._ordered_sum(self._map(work, items), (len(pairs), n_out, self.d, self.d))

    def reduce_harmonic(self, n: int, omega: complex, t: complex, fn: Callable[[np.ndarray], np.ndarray],
                        n_out: int, x, y) -> np.ndarray:
        """Same reduction with Phi = (Omega(t) . xi (x) xi) / t and the harmonic path phase.

        Returns (n_out, d, d).
        """
        x = np.atleast_1d(np.asarray(x, complex))
        y = np.atleast_1d(np.asarray(y, complex))
        items = list(self.free_pieces(n, n_out))
        if any(not chunk.analytic for chunk, _ in items):
            grid = self.grid(n)
            om = omega_matrix(omega, t, grid.nodes).reshape(grid.size, n * n) / complex(t)
            alpha, beta = path_weights(omega, t, grid.nodes)

        def work(item):
            chunk, sl = item
            if chunk.analytic:
                vals = fn(np.zeros((1, 1), dtype=complex))
                return (vals[0, 0, :, None, None] / factorial(n)) * chunk.mprod[0]
            xi = chunk.xi
            gram = np.einsum("tjv,tkv->tjk", xi, xi).reshape(xi.shape[0], n * n)
            phi = gram @ om[sl].T
            phase = (xi @ x) @ alpha[sl].T + (xi @ y) @ beta[sl].T
            pw = grid.weights[sl][None, :] * np.exp(1j * phase)
            s = np.einsum("tp,tpk->tk", pw, fn(phi))
            return np.einsum("tk,tab->kab", s, chunk.mprod)

        return self._ordered_sum(self._map(work, items), (n_out, self.d, self.d))
