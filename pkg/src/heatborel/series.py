"""The deformation series v = 1 + sum_n v_n and the kernel u = u_w v.

    v_n(t, x, y) = t^n  int_{0<s_1<...<s_n<1}  sum_tuples  exp(-Omega.xi(x)xi) exp(i sum_k q(s_k).xi_k)
                   M_{j_n} ... M_{j_1} ds

with Omega the deformation matrix and q the classical path.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np
from scipy.special import gammainc

from .defmatrix import estimate_Td, td_ceiling
from .engine import TermEngine, order_for
from .errors import ConditioningWarning, ConfigError, DomainError, TruncationWarning
from .measures import DiscreteMeasure, exp_moment
from .mehler import DELTA_PATH, mehler_kernel

TD_SAMPLES = 10_000
TD_SEED = 0
CONTAINMENT = 0.9


def _as_vec(v, nu: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    if v.shape != (nu,):
        raise ConfigError(f"point must have shape ({nu},), got {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class DeformationConfig:
    """Everything that fixes a truncated series evaluation.

    Parameters
    ----------
    measure : the potential's atomic measure.
    omega : harmonic frequency, real or purely imaginary.
    n_max : series truncation order.
    quad_order : per-axis simplex order, an int or a per-n sequence (the last
        entry repeats), so high orders can use coarser rules.
    t_domain_radius : working radius for |t|. Defaults to 0.9 * min(T_d, delta/|omega|)
        with T_d estimated by sampling, and to infinity in the free case.
    tol : tolerance for truncation warnings.
    """

    measure: DiscreteMeasure
    omega: complex = 0.0
    n_max: int = 4
    quad_order: int | tuple = 8
    t_domain_radius: float | None = None
    tol: float = 1e-10
    delta_path: float = DELTA_PATH
    threads: int = 1
    chunk_tuples: int = 32
    cost_cap: float | None = None
    td_estimate: float = field(default=np.inf, compare=False)

    def __post_init__(self):
        om = complex(self.omega)
        if om.real != 0 and om.imag != 0:
            raise ConfigError("omega must be real or purely imaginary")
        object.__setattr__(self, "omega", om)
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ConfigError("n_max must be a non-negative integer")
        orders = [self.quad_order] if isinstance(self.quad_order, (int, np.integer)) else list(self.quad_order)
        if not orders or min(int(o) for o in orders) < 1:
            raise ConfigError("quad_order must be >= 1")
        if not isinstance(self.quad_order, (int, np.integer)):
            object.__setattr__(self, "quad_order", tuple(int(o) for o in orders))
        if om == 0:
            limit, td = np.inf, np.inf
        else:
            td = estimate_Td(om, n_max=max(1, min(int(self.n_max), 8)), samples=TD_SAMPLES, rng_seed=TD_SEED)
            limit = min(td, self.delta_path / abs(om))
        object.__setattr__(self, "td_estimate", float(td))
        if self.t_domain_radius is None:
            object.__setattr__(self, "t_domain_radius", float(CONTAINMENT * limit))
        elif not 0 < self.t_domain_radius <= limit:
            raise ConfigError(
                f"t_domain_radius {self.t_domain_radius} must lie in (0, min(T_d, delta/|omega|)] = (0, {limit:.6g}]"
            )

    @property
    def free(self) -> bool:
        return self.omega == 0

    @cached_property
    def engine(self) -> TermEngine:
        return TermEngine(self.measure, self.quad_order, self.chunk_tuples, self.threads, self.cost_cap)

    def check_t(self, t: complex, allow_left: bool = False) -> complex:
        t = complex(t)
        if t == 0:
            raise DomainError("t = 0 is excluded")
        if not allow_left and t.real < 0:
            raise DomainError(f"Re t = {t.real} < 0")
        if abs(t) >= self.t_domain_radius:
            raise DomainError(f"|t| = {abs(t):.6g} outside the working disk of radius {self.t_domain_radius:.6g}")
        return t


@dataclass(frozen=True)
class SeriesResult:
    value: np.ndarray
    per_term_norms: list
    tail_bound: float
    t: complex
    n_max: int


def _norm(m) -> float:
    return float(np.linalg.norm(m, 2))


def tail_bound(t: complex, x, y, cfg: DeformationConfig, n_max: int | None = None) -> float:
    """sum_{n > n_max} (|t| A)^n / n! with A = exp_moment(measure, 0, 4 max(|x|, |y|))."""
    n_max = cfg.n_max if n_max is None else n_max
    r = max(np.linalg.norm(np.atleast_1d(x)), np.linalg.norm(np.atleast_1d(y)))
    z = abs(t) * exp_moment(cfg.measure, 0.0, 4.0 * r)
    if z == 0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(np.exp(z) * gammainc(n_max + 1, z))


def _free_terms(ts: np.ndarray, x, y, cfg: DeformationConfig, n_hi: int) -> np.ndarray:
    """v_n(t_k) for n = 0..n_hi in the free case, vectorized over t; shape (K, n_hi + 1, d, d)."""
    d = cfg.measure.d
    out = np.zeros((ts.size, n_hi + 1, d, d), dtype=complex)
    out[:, 0] = np.eye(d)
    for n in range(1, n_hi + 1):
        fn = lambda b: np.exp(-b[:, :, None] * ts[None, None, :])
        out[:, n] = cfg.engine.reduce_free(n, fn, ts.size, [(x, y)])[0] * (ts**n)[:, None, None]
    return out


def v_term(n: int, t: complex, x, y, cfg: DeformationConfig) -> np.ndarray:
    """The n-th deformation term as a d x d matrix."""
    if not 1 <= n <= cfg.n_max:
        raise ConfigError(f"order n = {n} must lie in 1..n_max = {cfg.n_max}")
    t = cfg.check_t(t)
    x = _as_vec(x, cfg.measure.nu)
    y = _as_vec(y, cfg.measure.nu)
    return _term(n, t, x, y, cfg)


def _term(n: int, t: complex, x, y, cfg: DeformationConfig) -> np.ndarray:
    if cfg.free:
        return _free_terms(np.array([t]), x, y, cfg, n)[0, n] if n else np.eye(cfg.measure.d, dtype=complex)
    fn = lambda phi: np.exp(-t * phi)[:, :, None]
    return cfg.engine.reduce_harmonic(n, cfg.omega, t, fn, 1, x, y)[0] * t**n


def _all_terms(t: complex, x, y, cfg: DeformationConfig) -> np.ndarray:
    """Terms v_0 = 1, v_1, ..., v_{n_max} at one t; shape (n_max + 1, d, d)."""
    if cfg.free:
        return _free_terms(np.array([t]), x, y, cfg, cfg.n_max)[0]
    d = cfg.measure.d
    return np.stack([np.eye(d, dtype=complex)] + [_term(n, t, x, y, cfg) for n in range(1, cfg.n_max + 1)])


def v_sum(t: complex, x, y, cfg: DeformationConfig, warn: bool = True) -> SeriesResult:
    """1 + sum_{n <= n_max} v_n with the factorial tail bound."""
    t = cfg.check_t(t)
    x = _as_vec(x, cfg.measure.nu)
    y = _as_vec(y, cfg.measure.nu)
    cfg.engine.preflight(cfg.n_max)
    terms = _all_terms(t, x, y, cfg)
    tb = tail_bound(t, x, y, cfg)
    if warn and tb > cfg.tol:
        warnings.warn(f"tail bound {tb:.3g} exceeds tol {cfg.tol:.3g}; raise n_max", TruncationWarning, stacklevel=2)
    return SeriesResult(terms.sum(axis=0), [_norm(v) for v in terms[1:]], tb, t, cfg.n_max)


def heat_kernel(t: complex, x, y, cfg: DeformationConfig) -> np.ndarray:
    """u = u_w(t, x, y) v(t, x, y)."""
    res = v_sum(t, x, y, cfg)
    return mehler_kernel(res.t, x, y, cfg.omega) * res.value


# -- Taylor coefficients and remainders ------------------------------------------


def exp_remainder(w, k: int) -> np.ndarray:
    """sum_{j >= k} w^j / j!, i.e. e^w minus its Taylor polynomial of degree k - 1.

    Summed as a series where |w| <= k + 1 (no cancellation) and by direct
    subtraction elsewhere.
    """
    w = np.asarray(w, dtype=complex)
    if k <= 0:
        return np.exp(w)
    out = np.empty_like(w)
    small = np.abs(w) <= k + 1
    wl = w[~small]
    if wl.size:
        poly = np.zeros_like(wl)
        term = np.ones_like(wl)
        for j in range(k):
            poly += term
            term = term * wl / (j + 1)
        out[~small] = np.exp(wl) - poly
    ws = w[small]
    if ws.size:
        term = ws**k / factorial(k)
        total = term.copy()
        j = k
        while True:
            term = term * ws / (j + 1)
            total += term
            j += 1
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)) or j > k + 400:
                break
        out[small] = total
    return out


@dataclass(frozen=True)
class TaylorResult:
    coeffs: np.ndarray  # (r, d, d): a_0 .. a_{r-1}
    remainders: np.ndarray  # (S, d, d): R_r at the samples
    t_samples: np.ndarray
    method: str
    condition: float = 1.0


def free_coefficients(q_max: int, x, y, cfg: DeformationConfig) -> np.ndarray:
    """a_0 .. a_{q_max} of the truncated free series, exactly (no fit).

    a_q = sum_{n <= min(q, n_max)} int (-B)^{q-n}/(q-n)! e^{i phase} Mprod, which is
    also r! times the tau^r coefficient of the Borel transform.
    """
    d = cfg.measure.d
    a = np.zeros((q_max + 1, d, d), dtype=complex)
    a[0] = np.eye(d)
    for n in range(1, min(q_max, cfg.n_max) + 1):
        k_out = q_max - n + 1
        ks = np.arange(k_out)
        inv_fact = np.array([1.0 / factorial(k) for k in ks])
        fn = lambda b: (-b[:, :, None]) ** ks * inv_fact
        a[n:] += cfg.engine.reduce_free(n, fn, k_out, [(x, y)])[0]
    return a


def _remainder_stack(w: np.ndarray, k_lo: int, k_hi: int) -> np.ndarray:
    """sum_{j >= k} w^j/j! for k = k_lo..k_hi (stacked on a new last axis).

    The top order comes from exp_remainder; lower orders add the missing
    Taylor terms one at a time, and orders k <= 0 are e^w.
    """
    out = np.empty(w.shape + (k_hi - k_lo + 1,), dtype=complex)
    top = exp_remainder(w, k_hi)
    out[..., -1] = top
    if k_hi - 1 >= k_lo:
        terms = [None] * max(k_hi, 1)
        term = np.ones_like(w, dtype=complex)
        for j in range(1, k_hi):
            term = term * w / j
            terms[j] = term
        acc = top
        for k in range(k_hi - 1, k_lo - 1, -1):
            if k >= 1:
                acc = acc + terms[k]
            elif k == 0:
                acc = acc + 1.0
            out[..., k - k_lo] = acc
    return out


def remainder_table(r_max: int, ts, x, y, cfg: DeformationConfig, n_points: int = 64) -> np.ndarray:
    """R_r(t_s) for r = 0..r_max, shape (r_max + 1, S, d, d).

    Free case: R_r = sum_n t^n int Rem_{r-n}(-tB) e^{i phase} Mprod with
    Rem_k(w) = sum_{j>=k} w^j/j!, no subtraction against v. Harmonic case:
    tails sum_{q>=r} b_q t^q of the FFT coefficients.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=complex))
    x = _as_vec(x, cfg.measure.nu)
    y = _as_vec(y, cfg.measure.nu)
    d = cfg.measure.d
    if not cfg.free:
        if r_max >= n_points // 2:
            raise ConfigError("n_points must exceed 2 r_max")
        b, _ = cauchy_coefficients(x, y, cfg, n_points)
        out = np.empty((r_max + 1, ts.size, d, d), dtype=complex)
        powers = ts[:, None] ** np.arange(n_points)[None, :]
        terms = np.einsum("sq,qab->qsab", powers, b)
        tail = np.cumsum(terms[::-1], axis=0)[::-1]
        out[:] = tail[: r_max + 1]
        return out
    out = np.zeros((r_max + 1, ts.size, d, d), dtype=complex)
    out[0] += np.eye(d)
    n_r = r_max + 1
    for n in range(1, cfg.n_max + 1):
        def fn(b):
            w = -b[:, :, None] * ts[None, None, :]  # (T, P, S)
            return _remainder_stack(w, -n, r_max - n).reshape(b.shape + (ts.size * n_r,))

        vals = cfg.engine.reduce_free(n, fn, ts.size * n_r, [(x, y)])[0]  # (S * n_r, d, d)
        vals = vals.reshape(ts.size, n_r, d, d) * (ts**n)[:, None, None, None]
        out += vals.transpose(1, 0, 2, 3)
    return out


def _free_remainders(r: int, ts: np.ndarray, x, y, cfg: DeformationConfig) -> np.ndarray:
    return remainder_table(r, ts, x, y, cfg)[r]


def cauchy_coefficients(x, y, cfg: DeformationConfig, n_points: int = 64, radius: float | None = None):
    """Taylor coefficients b_0 .. b_{M-1} of the truncated series by FFT on |t| = radius.

    The truncated series is analytic for |w t| < pi, so the default radius
    pi / (2 |w|) keeps the circle well inside the disk of analyticity.
    Returns (coefficients (M, d, d), radius).
    """
    if radius is None:
        radius = np.pi / (2 * abs(cfg.omega)) if not cfg.free else 1.0
    theta = 2 * np.pi * np.arange(n_points) / n_points
    ts = radius * np.exp(1j * theta)
    if cfg.free:
        vals = _free_terms(ts, x, y, cfg, cfg.n_max).sum(axis=1)
    else:
        vals = np.stack([_all_terms(t, x, y, cfg).sum(axis=0) for t in ts])
    b = np.fft.fft(vals, axis=0) / n_points
    scale = radius ** -np.arange(n_points)
    return b * scale[:, None, None], radius


def ladder_coefficients(r: int, x, y, cfg: DeformationConfig, h: float | None = None, extra: int = 3):
    """a_0 .. a_{r-1} by least-squares polynomial fits on a real t-ladder, Richardson-combined.

    Two fits of degree D = r - 1 + extra on Chebyshev points in (0, h] and (0, h/2]
    are combined to cancel the leading O(h^(D+1-q)) error. Returns (coeffs, condition).
    """
    h = 0.5 * min(cfg.t_domain_radius, 1.0) if h is None else h
    deg = r - 1 + extra
    n_pts = 2 * (deg + 1)
    j = np.arange(n_pts)
    u = 0.5 * (1 + np.cos(np.pi * (j + 0.5) / n_pts))
    vand = np.vander(u, deg + 1, increasing=True)
    cond = float(np.linalg.cond(vand))
    if cond > 1e10:
        warnings.warn(f"ladder fit condition number {cond:.3g} > 1e10", ConditioningWarning, stacklevel=2)

    def fit(hh):
        vals = np.stack([_all_terms(hh * uk, x, y, cfg).sum(axis=0) for uk in u])
        d = vals.shape[1]
        c, *_ = np.linalg.lstsq(vand, vals.reshape(n_pts, d * d), rcond=None)
        return (c / hh ** np.arange(deg + 1)[:, None]).reshape(deg + 1, d, d)

    a1, a2 = fit(h), fit(h / 2)
    p = (deg + 1 - np.arange(deg + 1)).astype(float)
    w = 2.0**p
    a = (w[:, None, None] * a2 - a1) / (w - 1)[:, None, None]
    return a[:r], cond


def taylor_and_remainder(r: int, t_samples, x, y, cfg: DeformationConfig, method: str = "auto",
                         n_points: int = 64) -> TaylorResult:
    """Coefficients a_0..a_{r-1} and R_r(t) = v(t) - sum_{q<r} a_q t^q at the samples.

    Methods
    -------
    exact : free case only; closed-form coefficients and cancellation-free
        remainders from the exponential's Taylor remainder.
    cauchy : FFT coefficients on a circle; remainders are the coefficient tail
        sum_{q>=r} b_q t^q, so no cancellation against v.
    ladder : real-axis polynomial fit (low r cross-check only); remainders by subtraction.
    """
    if r < 0:
        raise ConfigError("r must be >= 0")
    ts = np.atleast_1d(np.asarray(t_samples, dtype=complex))
    for t in ts:
        cfg.check_t(t)
    x = _as_vec(x, cfg.measure.nu)
    y = _as_vec(y, cfg.measure.nu)
    cfg.engine.preflight(cfg.n_max)
    if method == "auto":
        method = "exact" if cfg.free else "cauchy"
    d = cfg.measure.d
    if method == "exact":
        if not cfg.free:
            raise DomainError("exact coefficients are available in the free case only")
        coeffs = free_coefficients(max(r - 1, 0), x, y, cfg)[:r]
        return TaylorResult(coeffs, _free_remainders(r, ts, x, y, cfg), ts, method)
    if method == "cauchy":
        if r >= n_points // 2:
            raise ConfigError("n_points must exceed 2 r")
        b, _ = cauchy_coefficients(x, y, cfg, n_points)
        q = np.arange(r, n_points)
        powers = ts[:, None] ** q[None, :]
        rem = np.einsum("sq,qab->sab", powers, b[r:])
        return TaylorResult(b[:r], rem, ts, method)
    if method == "ladder":
        coeffs, cond = ladder_coefficients(max(r, 1), x, y, cfg)
        coeffs = coeffs[:r]
        vals = np.stack([_all_terms(t, x, y, cfg).sum(axis=0) for t in ts])
        poly = np.einsum("sq,qab->sab", ts[:, None] ** np.arange(r)[None, :], coeffs) if r else 0
        return TaylorResult(coeffs, vals - poly, ts, method, cond)
    raise ConfigError(f"unknown method {method!r}")


def quad_orders_used(cfg: DeformationConfig) -> list[int]:
    return [order_for(cfg.quad_order, n) for n in range(1, cfg.n_max + 1)]


def working_radius(omega: complex, delta: float = DELTA_PATH) -> float:
    """0.9 * min(T_d ceiling, delta/|w|); an a-priori bound that needs no sampling."""
    if omega == 0:
        return np.inf
    return CONTAINMENT * min(td_ceiling(omega), delta / abs(omega))
