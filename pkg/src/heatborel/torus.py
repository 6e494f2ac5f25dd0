"""Trace of exp(-tH), H = -Laplacian - c(x) on (R/Z)^nu, two ways.

Directly from plane-wave Galerkin eigenvalues, and as a lattice sum over
q in Z^nu of Gaussian factors exp(-q^2/4t) times Laplace-resummed amplitudes
w_hat(q, tau) = int_{[0,1]^nu} Tr v_hat(tau, x, x + q) dx.

For atoms at xi = 2 pi k the x-dependence of every tuple's contribution is
exp(i x . sum_k xi_k) (the path phase for y = x + q reduces to
exp(-i q . sum_k s_k xi_k) times that), so the cell average keeps exactly the
tuples whose frequencies sum to zero.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.integrate import quad

from .borel import kernel_K, laplace_rule, ray_constant
from .defmatrix import free_form_and_moment
from .errors import ConfigError, DomainError, TruncationWarning
from .measures import TorusPotential, measure_from_fourier_coeffs
from .series import DeformationConfig

CHI_CUT = 1e-14


@dataclass(frozen=True, eq=False)
class TorusSpectrum:
    eigenvalues: np.ndarray
    cutoff: int
    d: int
    nu: int
    sup_bound: float  # sum |c_q|, bounds |c(x)| and shifts eigenvalues by at most this

    def to_json(self) -> dict:
        return {"cutoff": self.cutoff, "d": self.d, "nu": self.nu, "sup_bound": self.sup_bound,
                "eigenvalues": self.eigenvalues.tolist()}


def _modes(cutoff: int, nu: int) -> np.ndarray:
    return np.array(list(itertools.product(range(-cutoff, cutoff + 1), repeat=nu)), dtype=np.int64)


def galerkin_matrix(p: TorusPotential, cutoff: int) -> np.ndarray:
    """Block matrix H[k, k'] = 4 pi^2 k^2 delta_{kk'} 1_d - c_{k-k'} over k in {-cutoff..cutoff}^nu."""
    if cutoff < p.max_mode:
        raise ConfigError(f"cutoff {cutoff} below the potential's highest mode {p.max_mode}")
    modes = _modes(cutoff, p.nu)
    nk, d = len(modes), p.d
    index = {tuple(k): i for i, k in enumerate(modes)}
    h = np.zeros((nk, d, nk, d), dtype=complex)
    for i, k in enumerate(modes):
        h[i, :, i, :] += 4 * np.pi**2 * float(k @ k) * np.eye(d)
    for q, c in p.coeffs.items():
        qv = np.array(q)
        for i, k in enumerate(modes):
            j = index.get(tuple(k - qv))
            if j is not None:
                h[i, :, j, :] -= c
    return h.reshape(nk * d, nk * d)


def galerkin_spectrum(p: TorusPotential, cutoff: int) -> TorusSpectrum:
    """Sorted eigenvalues of the Galerkin matrix (dense Hermitian solve)."""
    h = galerkin_matrix(p, cutoff)
    scale = max(1.0, float(np.abs(h).max()))
    if np.abs(h - h.conj().T).max() > 1e-12 * scale:
        raise ConfigError("Galerkin matrix is not Hermitian")
    lam = np.linalg.eigvalsh(h)
    return TorusSpectrum(np.sort(lam), cutoff, p.d, p.nu, p.sup_norm_bound())


def _theta(a: float, lo: int = 0) -> float:
    """sum over k in Z with |k| >= lo of exp(-a k^2); lo = 0 gives the full theta sum."""
    kmax = int(np.ceil(np.sqrt(40.0 / a))) + lo + 2
    k = np.arange(lo, kmax + 1)
    s = np.exp(-a * k.astype(float) ** 2)
    return float(2 * s.sum() - (s[0] if lo == 0 else 0.0))


def direct_tail(spec: TorusSpectrum, t: complex) -> float:
    """d sum_{k outside the cube} exp(-(4 pi^2 k^2 - sup|c|) Re t)."""
    a = 4 * np.pi**2 * complex(t).real
    full = _theta(a)
    inside = full - _theta(a, spec.cutoff + 1)
    return float(spec.d * np.exp(spec.sup_bound * complex(t).real) * (full**spec.nu - inside**spec.nu))


def rounding_bound(spec: TorusSpectrum, t: complex) -> float:
    """|t| delta sum_n exp(-lambda_n Re t), with delta = N^(1/2) eps max|lambda| the eigensolver's absolute error scale."""
    lam = spec.eigenvalues
    delta = np.sqrt(lam.size) * np.finfo(float).eps * float(np.max(np.abs(lam)))
    re = complex(t).real
    return float(abs(t) * delta * np.sum(np.exp(-(lam - lam[0]) * re)) * np.exp(-lam[0] * re))


def direct_error_bound(spec: TorusSpectrum, t: complex) -> float:
    """Truncation tail plus eigenvalue rounding for trace_direct."""
    return direct_tail(spec, t) + rounding_bound(spec, t)


def trace_direct(spec: TorusSpectrum, t: complex, tol: float | None = None) -> complex:
    """sum_n exp(-lambda_n t) over the computed eigenvalues."""
    t = complex(t)
    if t.real <= 0:
        raise DomainError("trace needs Re t > 0")
    if tol is not None:
        tb = direct_error_bound(spec, t)
        if tb > tol:
            warnings.warn(f"spectral tail {tb:.3g} > tol {tol:.3g}; raise cutoff", TruncationWarning, stacklevel=2)
    lam = spec.eigenvalues
    return complex(np.sum(np.exp(-(lam - lam[0]) * t)) * np.exp(-lam[0] * t))


# -- lattice side ------------------------------------------------------------------


def default_x_points(cfg: DeformationConfig) -> int:
    """Trapezoid points per axis exact for every tuple frequency: n_max * max|k| + 1."""
    m = cfg.measure
    kmax = float(np.max(np.abs(m.xi), initial=0.0)) / (2 * np.pi)
    return int(cfg.n_max * int(round(kmax)) + 1)


def _check_lattice(cfg: DeformationConfig) -> None:
    if not cfg.free:
        raise DomainError("the lattice formula uses the free Borel transform (omega = 0)")
    k = cfg.measure.xi / (2 * np.pi)
    if np.any(np.abs(k - np.round(k)) > 1e-12):
        raise ConfigError("torus measures need atoms on 2 pi Z^nu (use measure_from_fourier_coeffs)")


class _CellAverage:
    """Zero-frequency-sum tuples with trapezoid weights chi and traced products."""

    def __init__(self, cfg: DeformationConfig, x_points: int | None):
        _check_lattice(cfg)
        self.cfg = cfg
        self.x_points = default_x_points(cfg) if x_points is None else int(x_points)
        nu = cfg.measure.nu
        grid = np.arange(self.x_points) / self.x_points
        xs = np.array(list(itertools.product(grid, repeat=nu)))  # (X, nu)
        self.items = []  # (n, xi (T, n, nu), coeff (T,), analytic)
        for n in range(1, cfg.n_max + 1):
            for chunk in cfg.engine.chunks(n):
                xsum = chunk.xi.sum(axis=1)  # (T, nu)
                chi = np.exp(1j * xsum @ xs.T).mean(axis=1)
                keep = np.abs(chi) > CHI_CUT
                if not np.any(keep):
                    continue
                coeff = chi[keep] * np.trace(chunk.mprod[keep], axis1=1, axis2=2)
                self.items.append((n, chunk.xi[keep], coeff, chunk.analytic))

    def values(self, qs: np.ndarray, taus: np.ndarray) -> np.ndarray:
        """w_hat(q, tau) for every q (Q, nu) and tau (K,); shape (Q, K)."""
        cfg = self.cfg
        eng = cfg.engine
        d = cfg.measure.d
        qs = np.atleast_2d(np.asarray(qs, dtype=float))

        def pieces():
            for n, xi, coeff, analytic in self.items:
                if analytic:
                    yield n, xi, coeff, None
                    continue
                size = eng.grid(n).size
                for sl in eng._node_slices(xi.shape[0], size, taus.size):
                    yield n, xi, coeff, sl

        def work(item):
            n, xi, coeff, sl = item
            if sl is None:
                kval = kernel_K(n, 0.0, taus) / factorial(n)  # (K,)
                return np.outer(np.full(len(qs), np.sum(coeff)), kval)
            grid = eng.grid(n)
            b, m = free_form_and_moment(grid.gaps[sl], xi)
            kv = kernel_K(n, b[:, :, None], taus[None, None, :])  # (T, P, K)
            out = np.empty((len(qs), taus.size), dtype=complex)
            w = grid.weights[sl]
            for i, q in enumerate(qs):
                pw = w[None, :] * np.exp(-1j * (m @ q))  # (T, P)
                out[i] = coeff @ np.einsum("tp,tpk->tk", pw, kv)
            return out

        parts = eng._map(work, list(pieces()))
        total = np.full((len(qs), taus.size), float(d), dtype=complex)
        for p in parts:
            total += p
        return total


def w_hat(q, tau, cfg: DeformationConfig, x_quad_order: int | None = None):
    """int_{[0,1]^nu} Tr v_hat(tau, x, x + q) dx by the equal-weight trapezoid rule."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    scalar = np.ndim(tau) == 0
    taus = np.atleast_1d(np.asarray(tau))
    taus = taus.astype(complex) if np.iscomplexobj(taus) else taus.astype(float)
    vals = _CellAverage(cfg, x_quad_order).values(q[None, :], taus)[0]
    return complex(vals[0]) if scalar else vals


def laplace_bound(t: complex, growth_C: float, d: int) -> float:
    """int_0^inf d exp(C tau^(1/2) - tau Re(1/t)) dtau / |t|, a uniform bound on the resummed amplitudes."""
    a = (1 / complex(t)).real
    val, _ = quad(lambda s: np.exp(growth_C * np.sqrt(s) - a * s), 0, np.inf, limit=200)
    return d * val / abs(t)


def lattice_tail(t: complex, q_max: int, nu: int, amp_bound: float) -> float:
    """Bound on (4 pi |t|)^(-nu/2) sum_{|q|_inf > q_max} |exp(-q^2/4t)| amp_bound."""
    a = (1 / complex(t)).real / 4
    one_dim_tail = 2 * np.exp(-a * (q_max + 1) ** 2) / (1 - np.exp(-a * (2 * q_max + 3)))
    full = _theta(a)
    return float((4 * np.pi * abs(t)) ** (-nu / 2) * nu * full ** (nu - 1) * one_dim_tail * amp_bound)


def default_q_max(t: complex, nu: int, amp_bound: float, tol: float) -> int:
    q = 0
    while lattice_tail(t, q, nu, amp_bound) >= tol / 10:
        q += 1
    return q


@dataclass(frozen=True)
class PoissonResult:
    value: complex
    q_max: int
    lattice_tail: float
    laplace_tail: float
    terms: dict  # q -> resummed amplitude


def poisson_terms(t: complex, cfg: DeformationConfig, q_max: int | None = None, tol: float = 1e-12,
                  x_quad_order: int | None = None) -> PoissonResult:
    """(4 pi t)^(-nu/2) sum_{|q|_inf <= Q} exp(-q^2/4t) Laplace[w_hat(q, .)](t), with diagnostics."""
    t = complex(t)
    if t.real <= 0:
        raise DomainError("the lattice formula needs Re t > 0")
    nu, d = cfg.measure.nu, cfg.measure.d
    c = ray_constant(cfg.measure, 0.0)
    amp = laplace_bound(t, c, d)
    if q_max is None:
        q_max = default_q_max(t, nu, amp, tol)
    else:
        tb = lattice_tail(t, q_max, nu, amp)
        if tb > tol:
            warnings.warn(f"lattice tail {tb:.3g} > tol {tol:.3g}; raise Q_max", TruncationWarning, stacklevel=2)
    qs = np.array(list(itertools.product(range(-q_max, q_max + 1), repeat=nu)), dtype=float)
    rule = laplace_rule(t, c, tol / max(d, 1))
    amps = _CellAverage(cfg, x_quad_order).values(qs, rule.tau) @ rule.weights  # (Q,)
    gauss = np.exp(-np.sum(qs**2, axis=1) / (4 * t))
    pref = (4 * np.pi * t) ** (-nu / 2)
    value = complex(pref * np.sum(gauss * amps))
    terms = {tuple(int(v) for v in q): complex(a) for q, a in zip(qs, amps)}
    return PoissonResult(value, int(q_max), lattice_tail(t, q_max, nu, amp), rule.tail_bound, terms)


def poisson_trace(t: complex, cfg: DeformationConfig, Q_max: int | None = None, tol: float = 1e-12,
                  x_quad_order: int | None = None) -> complex:
    """Lattice-sum side of the trace formula."""
    return poisson_terms(t, cfg, Q_max, tol, x_quad_order).value


def torus_config(p: TorusPotential, n_max: int = 4, quad_order=10, **kw) -> DeformationConfig:
    """Free deformation config for the atomic measure of a torus potential."""
    return DeformationConfig(measure_from_fourier_coeffs(p), 0.0, n_max=n_max, quad_order=quad_order, **kw)


__all__ = [
    "TorusSpectrum", "galerkin_matrix", "galerkin_spectrum", "trace_direct", "direct_tail", "rounding_bound",
    "direct_error_bound", "w_hat",
    "poisson_trace", "poisson_terms", "PoissonResult", "torus_config", "lattice_tail",
]
