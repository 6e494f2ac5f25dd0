"""The deformation matrix Omega and its quadratic form.

For interaction times 0 < s_1 < ... < s_n < 1 the matrix is

    Omega_jk = sh(w t a) sh(w t b) / (w sh(w t)),  a = s_{j^k},  b = 1 - s_{jvk},

which is t times the Dirichlet Green function of -d^2/ds^2 + (wt)^2 on [0,1]
sampled at (s_j, s_k). Everything is written through shc(z) = sh(z)/z so the
free limit w -> 0 is reached without cancellation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, PoleError

SMALL_ARG = 1e-4
TOL_POS = 1e-12
POLE_RTOL = 1e-12
FREE_TD_CEILING = 10.0


def shc(z):
    """sh(z)/z, entire; degree-7 Taylor polynomial of sh below |z| = 1e-4."""
    z = np.asarray(z, dtype=complex)
    z2 = z * z
    small = np.abs(z) < SMALL_ARG
    series = 1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0))
    safe = np.where(small, 1.0, z)
    out = np.where(small, series, np.sinh(safe) / safe)
    return out if out.ndim else complex(out)


def check_pole(a) -> None:
    """Raise PoleError where sh(a) = 0 with a != 0."""
    a = np.asarray(a, dtype=complex)
    sh = np.sinh(a)
    bad = (np.abs(a) >= SMALL_ARG) & (np.abs(sh) <= POLE_RTOL * np.maximum(1.0, np.abs(np.cosh(a))))
    if np.any(bad):
        raise PoleError(f"sh(omega t) vanishes at omega t = {a[bad].ravel()[0]}")


def omega_entry(omega: complex, t: complex, sj: float, sk: float) -> complex:
    """Single entry Omega_jk of the deformation matrix."""
    return complex(omega_matrix(omega, t, np.array([sj, sk]))[0, 1])


def omega_matrix(omega: complex, t, s) -> np.ndarray:
    """Deformation matrix for interaction times s of shape (..., n); returns (..., n, n).

    `t` broadcasts against s[..., 0]. The times need not be sorted: the
    entry only depends on min(s_j, s_k) and max(s_j, s_k).
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=complex)[..., None, None]
    a = complex(omega) * t
    check_pole(a)
    lo = np.minimum(s[..., :, None], s[..., None, :])
    hi = 1.0 - np.maximum(s[..., :, None], s[..., None, :])
    if omega == 0:
        return t * lo * hi
    return t * lo * hi * shc(a * lo) * shc(a * hi) / shc(a)


def quadratic_form(omega: complex, t: complex, s, xi) -> complex:
    """Omega . xi (x) xi = sum_jk Omega_jk xi_j . xi_k, with xi of shape (n, nu) or (n,)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    xi = np.asarray(xi, dtype=float).reshape(s.shape[-1], -1)
    gram = xi @ xi.T
    return complex(np.sum(omega_matrix(omega, t, s) * gram))


def free_form_and_moment(gaps: np.ndarray, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Free quadratic form and first moment for many tuples and nodes at once.

    With S(u) = sum_{k : s_k > u} xi_k the step function of suffix sums,

        sum_jk s_{j^k}(1 - s_{jvk}) xi_j . xi_k = int S^2 - (int S)^2,
        int S = sum_k s_k xi_k,

    and both integrals are matrix products with the interval lengths.

    Parameters
    ----------
    gaps : (P, n + 1) interval lengths of the nodes.
    xi : (T, n, nu) frequency tuples.

    Returns
    -------
    B : (T, P) real, clipped at zero.
    m : (T, P, nu) real, m = sum_k s_k xi_k.
    """
    suffix = np.cumsum(xi[:, ::-1, :], axis=1)[:, ::-1, :]  # (T, n, nu); interval k has suffix k
    t_, n, nu = xi.shape
    suffix = np.concatenate([suffix, np.zeros((t_, 1, nu))], axis=1)  # (T, n+1, nu)
    sq = np.sum(suffix**2, axis=2)  # (T, n+1)
    second = sq @ gaps.T  # (T, P)
    m = np.einsum("tkv,pk->tpv", suffix, gaps)
    b = second - np.sum(m**2, axis=2)
    return np.maximum(b, 0.0), m


def spectral_qf_oracle(z: complex, s, xi, n_modes: int) -> complex:
    """Truncated sine expansion sum_{m<=M} 2/(m^2 pi^2 + z^2) (sum_j sin(m pi s_j) xi_j)^2."""
    z = complex(z)
    if abs(z) >= np.pi:
        raise DomainError(f"|z| = {abs(z)} must be < pi")
    if n_modes < 1:
        raise ConfigError("n_modes must be >= 1")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    xi = np.asarray(xi, dtype=float).reshape(s.shape[0], -1)
    total = 0j
    block = 65536
    for start in range(1, n_modes + 1, block):
        m = np.arange(start, min(start + block, n_modes + 1), dtype=float)
        coef = np.sin(np.pi * np.outer(m, s)) @ xi  # (M, nu)
        total += np.sum(2.0 / (m**2 * np.pi**2 + z * z) * np.sum(coef * coef, axis=1))
    return total


def spectral_tail_bound(z: complex, xi, n_modes: int) -> float:
    """Upper bound on the modes m > n_modes missing from spectral_qf_oracle."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    l1 = float(np.sum(np.sqrt(np.sum(xi**2, axis=-1))))
    denom = np.pi**2 - abs(z) ** 2 / (n_modes + 1) ** 2
    return 2.0 * l1**2 / (n_modes * denom)


@dataclass(frozen=True)
class GreenResidual:
    residual: float
    jump: float
    boundary: tuple[float, float]
    h: float


def _one_sided_derivative(f: np.ndarray, h: float) -> float:
    """Fourth-order forward difference at f[0]."""
    return (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)


def green_kernel_ld(z: complex, s: np.ndarray, sprime) -> np.ndarray:
    """Closed-form Green function sh(z s^s') sh(z(1 - svs')) / (z sh z) in extended precision.

    Extended precision keeps rounding in the second difference well below its
    O(h^2) truncation error on the grids used for order measurements.
    """
    lo = np.minimum(s, sprime)
    hi = 1 - np.maximum(s, sprime)
    if z == 0:
        return (lo * hi).astype(np.clongdouble)
    zl = np.clongdouble(complex(z))
    return np.sinh(zl * lo) * np.sinh(zl * hi) / (zl * np.sinh(zl))


def green_residual(z: complex, sprime: float, grid_n: int) -> GreenResidual:
    """Finite-difference check of -K'' + z^2 K = delta(s - s'), K(0) = K(1) = 0.

    K is evaluated from the closed form on the grid s_i = i / grid_n. The
    residual is the max of |-D^2 K + z^2 K| over interior nodes other than s',
    the jump is K'(s'+) - K'(s'-) from one-sided fourth-order stencils.
    """
    if not 0 < sprime < 1:
        raise DomainError("s' must lie in (0, 1)")
    i0 = int(round(sprime * grid_n))
    if abs(i0 / grid_n - sprime) > 1e-12 or not 5 <= i0 <= grid_n - 5:
        raise ConfigError("grid must contain s' as an interior node at least 5 steps from the ends")
    h = 1.0 / grid_n
    k = green_kernel_ld(z, np.arange(grid_n + 1, dtype=np.longdouble) / grid_n, np.longdouble(i0) / grid_n)
    z2 = complex(z) ** 2
    d2 = (k[2:] - 2 * k[1:-1] + k[:-2]) / h**2
    res = np.abs(-d2 + z2 * k[1:-1])
    res[i0 - 1] = 0.0
    right = _one_sided_derivative(k[i0 : i0 + 5], h)
    left = -_one_sided_derivative(k[i0::-1][:5], h)
    return GreenResidual(
        residual=float(res.max()),
        jump=float(np.real(right - left)),
        boundary=(float(np.abs(k[0])), float(np.abs(k[-1]))),
        h=h,
    )


def td_ceiling(omega: complex) -> float:
    return FREE_TD_CEILING if omega == 0 else np.pi / (np.sqrt(2.0) * abs(omega))


@dataclass(frozen=True)
class TdSamples:
    """A fixed batch of normalized samples, scaled by T when tested."""

    n: np.ndarray
    s: list
    xi: list
    t_unit: list


def draw_td_samples(n_max: int, samples: int, rng_seed: int, nu: int = 1) -> TdSamples:
    rng = np.random.Generator(np.random.Philox(rng_seed))
    n = rng.integers(1, n_max + 1, size=samples)
    s, xi, t_unit = [], [], []
    for k in range(1, n_max + 1):
        cnt = int(np.sum(n == k))
        s.append(np.sort(rng.uniform(size=(cnt, k)), axis=1))
        xi.append(rng.normal(size=(cnt, k, nu)))
        rho = np.sqrt(rng.uniform(size=cnt))
        theta = rng.uniform(-np.pi / 2, np.pi / 2, size=cnt)
        edge = rng.uniform(size=cnt) < 0.25  # keep part of the batch on the boundary
        theta = np.where(edge & (rng.uniform(size=cnt) < 0.5), np.sign(theta) * np.pi / 2, theta)
        rho = np.where(edge, 1.0, rho)
        t_unit.append(rho * np.exp(1j * theta))
    return TdSamples(n, s, xi, t_unit)


def half_disk_violations(omega: complex, T: float, batch: TdSamples, tol_pos: float = TOL_POS) -> tuple[int, int]:
    """Count positivity and growth violations of the form at t = T * t_unit."""
    neg = big = 0
    for k, (s, xi, tu) in enumerate(zip(batch.s, batch.xi, batch.t_unit), start=1):
        if len(s) == 0:
            continue
        t = T * tu
        om = omega_matrix(omega, t, s)
        gram = np.einsum("pjv,pkv->pjk", xi, xi)
        q = np.sum(om * gram, axis=(1, 2))
        sq = np.sum(xi**2, axis=(1, 2))
        neg += int(np.sum(q.real < -tol_pos))
        big += int(np.sum(np.abs(q) > (2 + tol_pos) * k * np.abs(t) * sq))
    return neg, big


def estimate_Td(omega: complex, n_max: int = 6, samples: int = 10_000, rng_seed: int = 0,
                tol_pos: float = TOL_POS, iterations: int = 40) -> float:
    """Empirical radius of the right half-disk on which the form stays in the right half-plane.

    Bisects on T up to the ceiling pi/(sqrt(2)|omega|) (a fixed ceiling in the
    free case). The value is a sampled estimate, not a certificate.
    """
    omega = complex(omega)
    if omega.real != 0 and omega.imag != 0:
        raise DomainError("omega must be real or purely imaginary")
    batch = draw_td_samples(n_max, samples, rng_seed)
    hi = td_ceiling(omega)
    if half_disk_violations(omega, hi, batch, tol_pos) == (0, 0):
        return float(hi)
    lo = 0.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        try:
            ok = half_disk_violations(omega, mid, batch, tol_pos) == (0, 0)
        except PoleError:
            ok = False
        lo, hi = (mid, hi) if ok else (lo, mid)
    return float(lo)
