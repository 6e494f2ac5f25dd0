"""Borel plane: the transform of the free deformation series and its Laplace resummation.

In the free case v_n = t^n int exp(-t B) e^{i phase}, with B the free quadratic
form, so termwise Borel transformation replaces t^n e^{-tB} by

    K_n(B, tau) = tau^n sum_m (-B tau)^m / (m! (m + n)!) = tau^n (B tau)^(-n/2) J_n(2 sqrt(B tau)).

The Laplace integral f(t) = int_0^inf f_hat(tau) e^{-tau/t} dtau/t inverts it.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from math import factorial
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import iv, j0, j1, jv, roots_jacobi, roots_legendre

from .errors import ConfigError, DomainError, ToleranceNotMet
from .measures import DiscreteMeasure, exp_moment
from .series import DeformationConfig, _as_vec, exp_remainder

SERIES_CUT = 16.0
LOOKAHEAD_RTOL = 1e-17
GROWTH_LIMIT = 1.1


# -- Bessel pieces -------------------------------------------------------------


def _series_cut(n: int) -> float:
    return max(SERIES_CUT, (n + 1) ** 2 / 4.0)


def _jscaled_series(n: int, z: np.ndarray) -> np.ndarray:
    """sum_m (-z)^m / (m! (m+n)!), truncated once two consecutive terms are negligible."""
    term = np.full(z.shape, 1.0 / factorial(n), dtype=z.dtype)
    total = term.copy()
    quiet = np.zeros(z.shape, dtype=bool)
    m = 0
    while m < 400:
        term = term * (-z) / ((m + 1) * (m + 1 + n))
        total = total + term
        m += 1
        small = np.abs(term) <= LOOKAHEAD_RTOL * np.maximum(np.abs(total), 1e-300)
        if m * m > np.max(np.abs(z), initial=0.0) and np.all(small & quiet):
            break
        quiet = small
    return total


def _jn_real(n: int, w: np.ndarray) -> np.ndarray:
    """J_n(w) for real w > n by upward recurrence from J_0, J_1 (stable in the oscillatory range)."""
    a, b = j0(w), j1(w)
    if n == 0:
        return a
    for k in range(1, n):
        a, b = b, (2.0 * k / w) * b - a
    return b


def jscaled(n: int, z):
    """z^(-n/2) J_n(2 z^(1/2)) = sum_m (-z)^m / (m! (m+n)!), an entire function of z.

    Series inside |z| <= max(16, (n+1)^2/4); outside, Bessel functions
    (real recurrence for z > 0, modified Bessel I_n for z < 0, complex J_n otherwise).
    """
    z = np.asarray(z)
    real = not np.iscomplexobj(z)
    z = z.astype(float if real else complex)
    out = np.empty(z.shape, dtype=z.dtype)
    small = np.abs(z) <= _series_cut(n)
    if np.any(small):
        out[small] = _jscaled_series(n, z[small])
    big = ~small
    if np.any(big):
        zb = z[big]
        if real:
            pos = zb > 0
            res = np.empty(zb.shape)
            if np.any(pos):
                w = 2.0 * np.sqrt(zb[pos])
                res[pos] = _jn_real(n, w) * (2.0 / w) ** n
            if np.any(~pos):
                w = 2.0 * np.sqrt(-zb[~pos])
                res[~pos] = iv(n, w) * (2.0 / w) ** n
            out[big] = res
        else:
            w = 2.0 * np.sqrt(zb)
            out[big] = jv(n, w) * (2.0 / w) ** n
    return out if out.ndim else out[()]


def bessel_J(z, method: str = "auto"):
    """J(z) = sum_n (-1)^n z^n / (n!)^2 = J_0(2 z^(1/2)).

    method "series" forces the power series, "bessel" forces J_0(2 sqrt z).
    """
    z = np.asarray(z)
    if method == "series":
        zc = z.astype(complex if np.iscomplexobj(z) else float)
        r = _jscaled_series(0, np.atleast_1d(zc))
        return r if z.ndim else r[0]
    if method == "bessel":
        w = 2.0 * np.sqrt(z.astype(complex))
        r = jv(0, w)
        return r if z.ndim else complex(r)
    return jscaled(0, z)


def kernel_K(n: int, B, tau):
    """K_n(B, tau) = tau^n sum_m (-1)^m (B tau)^m / (m! (m+n)!), entire in (B, tau)."""
    if n < 1:
        raise ConfigError("K_n needs n >= 1")
    B = np.asarray(B)
    tau = np.asarray(tau)
    return tau**n * jscaled(n, B * tau)


def kernel_K_integral(n: int, B, tau, order: int = 60):
    """Integral form tau^n int_0^1 (1-theta)^(n-1)/(n-1)! J(theta B tau) dtheta (Gauss-Jacobi)."""
    x, w = roots_jacobi(order, float(n - 1), 0.0)
    theta = (x + 1) / 2
    w = w / 2.0**n / factorial(n - 1)
    z = np.multiply.outer(np.asarray(B, dtype=complex) * np.asarray(tau, dtype=complex), theta)
    return np.asarray(tau, dtype=complex) ** n * np.sum(w * jscaled(0, z), axis=-1)


def kernel_K_bound(n: int, B, tau):
    """|tau|^n / n! exp(2 sqrt(B) |Im tau^(1/2)|) for B >= 0."""
    tau = np.asarray(tau, dtype=complex)
    return np.abs(tau) ** n / factorial(n) * np.exp(2 * np.sqrt(np.asarray(B, float)) * np.abs(np.sqrt(tau).imag))


# -- growth constants ------------------------------------------------------------


def growth_constant(measure: DiscreteMeasure, kappa: float, R: float) -> tuple[float, float]:
    """min over eps > 0 of 2 (int exp(2 kappa/eps + eps xi^2 / 2 + R|xi|) d|mu|)^(1/2).

    Returns (C, eps at the minimum). Any eps gives a valid constant; the
    minimum is the sharpest one of this form.
    """
    if kappa <= 0 or R < 0:
        raise ConfigError("kappa must be > 0 and R >= 0")
    if measure.is_zero:
        return 0.0, 1.0

    def log_c(le):
        e = np.exp(le)
        return 2 * kappa / e + np.log(exp_moment(measure, e / 2, R))

    res = minimize_scalar(log_c, bounds=(-12.0, 8.0), method="bounded", options={"xatol": 1e-10})
    eps = float(np.exp(res.x))
    return float(2 * np.exp(0.5 * log_c(res.x))), eps


def ray_constant(measure: DiscreteMeasure, im_radius: float) -> float:
    """C with |v_hat(tau)| <= exp(C tau^(1/2)) on tau >= 0, when |Im x|, |Im y| <= im_radius.

    On the positive ray |K_n(B, tau)| <= tau^n/n!, so |v_hat| <= sum (A tau)^n/(n!)^2 <= exp(2 (A tau)^(1/2))
    with A = int exp(im_radius |xi|) d|mu|.
    """
    return 2.0 * np.sqrt(exp_moment(measure, 0.0, im_radius))


# -- the Borel transform ----------------------------------------------------------


def _require_free(cfg: DeformationConfig) -> None:
    if not cfg.free:
        raise DomainError("the Borel transform is implemented for omega = 0 only")


def borel_values(taus, pairs, cfg: DeformationConfig) -> np.ndarray:
    """v_hat(tau_k, x, y) for every (x, y) pair; shape (len(pairs), K, d, d)."""
    _require_free(cfg)
    taus = np.atleast_1d(np.asarray(taus))
    taus = taus.astype(float) if not np.iscomplexobj(taus) else taus
    d = cfg.measure.d
    nu = cfg.measure.nu
    pairs = [(_as_vec(x, nu), _as_vec(y, nu)) for x, y in pairs]
    cfg.engine.preflight(cfg.n_max)
    out = np.zeros((len(pairs), taus.size, d, d), dtype=complex)
    out[:] = np.eye(d)
    for n in range(1, cfg.n_max + 1):
        fn = lambda b: kernel_K(n, b[:, :, None], taus[None, None, :])
        out += cfg.engine.reduce_free(n, fn, taus.size, pairs)
    return out


def borel_v(tau, x, y, cfg: DeformationConfig) -> np.ndarray:
    """1 + sum_{n <= n_max} int e^{i q_0(s).xi} K_n(B, tau) M_{j_n}...M_{j_1}; (d, d), or (K, d, d) for arrays."""
    scalar = np.ndim(tau) == 0
    vals = borel_values(tau, [(x, y)], cfg)[0]
    return vals[0] if scalar else vals


@dataclass(frozen=True, eq=False)
class BorelEvaluator:
    """Callable v_hat(tau, x, y) with its growth metadata.

    growth_C is the constant of the bound |v_hat| <= exp(C |tau|^(1/2)) on the
    parabola {Re tau > (Im tau)^2/(4 kappa) - kappa} for |Im x|, |Im y| < R.
    """

    config: DeformationConfig
    growth_C: float
    kappa: float
    R: float
    eps: float = field(default=1.0)

    @classmethod
    def build(cls, cfg: DeformationConfig, kappa: float = 1.0, R: float = 1.0) -> "BorelEvaluator":
        _require_free(cfg)
        c, eps = growth_constant(cfg.measure, kappa, R)
        return cls(cfg, c, kappa, R, eps)

    def __call__(self, tau, x, y) -> np.ndarray:
        return borel_v(tau, x, y, self.config)

    def ray_constant(self, x, y) -> float:
        im = max(np.max(np.abs(np.imag(np.atleast_1d(x))), initial=0.0),
                 np.max(np.abs(np.imag(np.atleast_1d(y))), initial=0.0))
        return ray_constant(self.config.measure, float(im))


# -- Laplace transform ----------------------------------------------------------


@dataclass(frozen=True)
class LaplaceRule:
    tau: np.ndarray  # real nodes on [0, tau_max]
    weights: np.ndarray  # complex, include e^{-tau/t}/t
    tau_max: float
    tail_bound: float


def laplace_rule(t: complex, growth_C: float, tol: float = 1e-12, order: int = 24,
                 growth: float = 1.25, tau_cap: float = 1e4) -> LaplaceRule:
    """Composite Gauss-Legendre rule for int_0^inf f(tau) e^{-tau/t} dtau/t with |f| <= exp(C tau^(1/2)).

    tau_max is the smallest tau >= (C/a)^2, a = Re(1/t), with the explicit tail
    2 exp(C tau^(1/2) - a tau) / (a |t|) below tol; found by bisection.
    Panels start at width min(|t|, 1) and grow geometrically up to 8 |t|.
    """
    t = complex(t)
    if t == 0 or (1 / t).real <= 0:
        raise DomainError(f"Laplace integral needs Re(1/t) > 0, got t = {t}")
    a = (1 / t).real
    c = float(growth_C)

    def tail(tau):
        with np.errstate(over="ignore"):
            return 2.0 * np.exp(c * np.sqrt(tau) - a * tau) / (a * abs(t))

    lo = max((c / a) ** 2, 1e-3)
    if tail(tau_cap) > tol:
        raise ToleranceNotMet(f"Laplace tail at tau_cap = {tau_cap:g} is {tail(tau_cap):.3g} > tol {tol:.3g}")
    if tail(lo) <= tol:
        tau_max = lo
    else:
        hi = tau_cap
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if tail(mid) > tol else (lo, mid)
            if hi - lo <= 1e-9 * hi:
                break
        tau_max = hi
    x, w = roots_legendre(order)
    width = min(abs(t), 1.0)
    wmax = 8.0 * abs(t)
    edges = [0.0]
    while edges[-1] < tau_max:
        edges.append(min(edges[-1] + width, tau_max))
        width = min(width * growth, wmax)
    edges = np.array(edges)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    tau = (mid + half * x[None, :]).ravel()
    wt = (half * w[None, :]).ravel() * np.exp(-tau / t) / t
    return LaplaceRule(tau, wt, float(tau_max), float(tail(tau_max)))


def laplace_resum(f_hat, t: complex, tol: float = 1e-12, x=None, y=None, growth_C: float | None = None,
                  order: int = 24) -> np.ndarray:
    """f(t) = int_0^inf f_hat(tau) e^{-tau/t} dtau/t along the positive real axis.

    `f_hat` is a BorelEvaluator (then x, y are required and the growth constant
    on the ray comes from the measure) or any callable mapping a tau array of
    shape (K,) to values of shape (K, ...), with `growth_C` given or attached.
    """
    if isinstance(f_hat, BorelEvaluator):
        if x is None or y is None:
            raise ConfigError("x and y are required to resum a BorelEvaluator")
        c = f_hat.ray_constant(x, y) if growth_C is None else growth_C
        fn: Callable = lambda tau: f_hat(tau, x, y)
    else:
        c = growth_C if growth_C is not None else getattr(f_hat, "growth_C", None)
        if c is None:
            raise ConfigError("a growth constant is required for the Laplace tail")
        fn = f_hat
    rule = laplace_rule(t, c, tol, order)
    vals = np.asarray(fn(rule.tau))
    return np.tensordot(rule.weights, vals, axes=(0, 0))


# -- remainder split ------------------------------------------------------------


@dataclass(frozen=True)
class SplitResult:
    f: np.ndarray
    g: np.ndarray
    g1: np.ndarray
    g2: np.ndarray


def remainder_split(r: int, t: complex, x, y, cfg: DeformationConfig, allow_left: bool = False) -> SplitResult:
    """v = f_r + g_r with f_r = 1 + sum_{n >= 1, n + m < r} t^n int (-Omega.xi(x)xi)^m/m! e^{i q.xi}.

    g_r = g1 + g2, where g1 collects the Taylor remainders of exp(-Omega.xi(x)xi)
    of order r - n for n < r, and g2 = sum_{r <= n <= n_max} v_n.
    """
    if r < 1:
        raise ConfigError("r must be >= 1")
    t = cfg.check_t(t, allow_left=allow_left)
    x = _as_vec(x, cfg.measure.nu)
    y = _as_vec(y, cfg.measure.nu)
    cfg.engine.preflight(cfg.n_max)
    d = cfg.measure.d
    f = np.eye(d, dtype=complex)
    g1 = np.zeros((d, d), dtype=complex)
    g2 = np.zeros((d, d), dtype=complex)
    for n in range(1, cfg.n_max + 1):
        k = r - n

        def fn(phi, k=k):
            w = -t * phi
            if k <= 0:
                return np.exp(w)[:, :, None]
            poly = np.zeros_like(w, dtype=complex)
            term = np.ones_like(w, dtype=complex)
            for m in range(k):
                poly += term
                term = term * w / (m + 1)
            return np.stack([poly, exp_remainder(w, k)], axis=-1)

        n_out = 1 if k <= 0 else 2
        if cfg.free:
            vals = cfg.engine.reduce_free(n, fn, n_out, [(x, y)])[0]
        else:
            vals = cfg.engine.reduce_harmonic(n, cfg.omega, t, fn, n_out, x, y)
        vals = vals * t**n
        if k <= 0:
            g2 += vals[0]
        else:
            f += vals[0]
            g1 += vals[1]
    return SplitResult(f, g1 + g2, g1, g2)


# -- Watson / Nevanlinna certification -------------------------------------------


def nevanlinna_samples(T: float, count: int, seed: int, shrink: float = 0.98) -> np.ndarray:
    """Uniform samples of the disk {Re(1/t) > 1/T} (centre T/2, radius T/2), shrunk by `shrink`."""
    rng = np.random.Generator(np.random.Philox(seed))
    rho = np.sqrt(rng.uniform(size=count)) * shrink * T / 2
    theta = rng.uniform(0, 2 * np.pi, size=count)
    return T / 2 + rho * np.exp(1j * theta)


def halfdisk_samples(T: float, count: int, seed: int, shrink: float = 0.98) -> np.ndarray:
    """Uniform samples of the right half-disk {|t| < T, Re t >= 0}, shrunk by `shrink`."""
    rng = np.random.Generator(np.random.Philox(seed))
    rho = np.sqrt(rng.uniform(size=count)) * shrink * T
    theta = rng.uniform(-np.pi / 2, np.pi / 2, size=count)
    return rho * np.exp(1j * theta)


def _json_float(v):
    v = float(v)
    return v if np.isfinite(v) else None


@dataclass
class CertificationReport:
    """Gevrey-1 remainder constants: |R_r(t)| <= K r! kappa^(-r) |t|^r on the sample set."""

    K: float
    kappa: float
    T: float
    max_ratio: float
    sigma: float
    kappa_fit: float
    r_values: list
    rho: list  # max_t |R_r(t)| / (r! |t|^r)
    ratios: list  # kappa^r rho_r
    growth: list  # ratios[r+1] / ratios[r]
    max_growth: float
    diverging: bool
    domain: str
    samples: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, float):
                out[k] = _json_float(v)
            elif isinstance(v, list):
                out[k] = [_json_float(e) if isinstance(e, (float, np.floating)) else e for e in v]
            else:
                out[k] = v
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _in_domain(ts: np.ndarray, T: float, domain: str) -> bool:
    if domain == "nevanlinna":
        return bool(np.all((1 / ts).real > 1 / T))
    if domain == "halfdisk":
        return bool(np.all((np.abs(ts) < T) & (ts.real >= 0)))
    raise ConfigError(f"unknown domain {domain!r}")


def fit_kappa(rho: np.ndarray, r_fit: int | None = None) -> float:
    """Largest kappa keeping kappa^r rho_r non-increasing over the first r_fit orders.

    rho is indexed by r = 1, 2, ...; a zero rho gives an unbounded kappa.
    """
    rho = np.asarray(rho, dtype=float)
    r_fit = len(rho) if r_fit is None else min(r_fit, len(rho))
    cand = []
    for i in range(r_fit - 1):
        if rho[i + 1] > 0:
            cand.append(rho[i] / rho[i + 1])
    return float(min(cand)) if cand else np.inf


def verify_watson(t_samples, T: float, kappa: float | None = None, remainders=None, values=None, coeffs=None,
                  domain: str = "nevanlinna", r_fit: int | None = None, samples_meta: dict | None = None
                  ) -> CertificationReport:
    """Smallest K with |R_r(t)| <= K r! kappa^(-r) |t|^r over the samples and r = 1..r_max.

    Pass either `remainders` of shape (r_max, S, d, d) holding R_1..R_{r_max}
    (preferred: computed without cancellation), or `values` v(t_s) with
    `coeffs` a_0..a_{r_max - 1}, from which R_r = v - sum_{q<r} a_q t^q.

    When kappa is None it is fitted on r <= r_fit (default r_max - 1) as the
    largest value keeping the ratios kappa^r rho_r non-increasing there; the
    growth factors are then checked over all r, so orders above r_fit are an
    out-of-sample test. `diverging` flags any growth factor above 1.1.
    """
    ts = np.atleast_1d(np.asarray(t_samples, dtype=complex))
    if not _in_domain(ts, T, domain):
        raise DomainError(f"samples must lie in the {domain} domain of size T = {T}")
    if remainders is None:
        if values is None or coeffs is None:
            raise ConfigError("give remainders, or values together with coeffs")
        values = np.asarray(values, dtype=complex)
        coeffs = np.asarray(coeffs, dtype=complex)
        if values.ndim == 1:
            values = values[:, None, None]
            coeffs = coeffs[:, None, None]
        r_max = coeffs.shape[0]
        rem = []
        partial = np.zeros_like(values)
        for r in range(1, r_max + 1):
            partial = partial + coeffs[r - 1] * (ts ** (r - 1))[:, None, None]
            rem.append(values - partial)
        remainders = np.stack(rem)
    remainders = np.asarray(remainders, dtype=complex)
    if remainders.ndim == 2:
        remainders = remainders[:, :, None, None]
    r_max = remainders.shape[0]
    r = np.arange(1, r_max + 1)
    norms = np.array([[np.linalg.norm(m, 2) for m in rem_r] for rem_r in remainders])  # (r_max, S)
    fact = np.array([float(factorial(k)) for k in r])
    rho = np.max(norms / (fact[:, None] * np.abs(ts)[None, :] ** r[:, None]), axis=1)
    r_fit = max(2, r_max - 1) if r_fit is None else r_fit
    kappa_fit = fit_kappa(rho, r_fit)
    k_used = kappa_fit if kappa is None else float(kappa)
    if not np.isfinite(k_used):
        ratios = np.zeros_like(rho)
    else:
        ratios = k_used**r * rho
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = np.where(ratios[:-1] > 0, ratios[1:] / ratios[:-1], 0.0)
    pos = ratios[ratios > 0]
    sigma = float(np.std(np.log(pos))) if pos.size > 1 else 0.0
    max_growth = float(np.max(growth, initial=0.0))
    meta = {"t_re": ts.real.tolist(), "t_im": ts.imag.tolist()}
    meta.update(samples_meta or {})
    return CertificationReport(
        K=float(np.max(ratios, initial=0.0)),
        kappa=float(k_used),
        T=float(T),
        max_ratio=float(np.max(ratios, initial=0.0)),
        sigma=sigma,
        kappa_fit=float(kappa_fit),
        r_values=r.tolist(),
        rho=rho.tolist(),
        ratios=ratios.tolist(),
        growth=growth.tolist(),
        max_growth=max_growth,
        diverging=bool(max_growth > GROWTH_LIMIT),
        domain=domain,
        samples=meta,
    )
