"""Independent reference values: closed forms and Monte Carlo re-computation.

Nothing here goes through the quadrature engine; tuples are enumerated with
itertools and the deformation matrix is built entry by entry from its formula.
"""
from __future__ import annotations

import itertools
from math import factorial

import numpy as np
from scipy.linalg import expm

from .defmatrix import omega_matrix
from .mehler import classical_path, mehler_kernel
from .series import DeformationConfig

MC_BATCH = 1 << 14


def closed_form_constant(m, omega: complex, t: complex, x, y) -> np.ndarray:
    """u_w(t, x, y) exp(t m) for the constant potential c = m."""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return mehler_kernel(t, x, y, omega) * expm(complex(t) * m)


def _integrand(n: int, t: complex, x, y, cfg: DeformationConfig, s: np.ndarray) -> np.ndarray:
    """sum over tuples of exp(-Omega.xi xi + i q(s).xi) M_{j_n}...M_{j_1} at sorted points s (S, n)."""
    meas = cfg.measure
    om = omega_matrix(cfg.omega, t, s)  # (S, n, n)
    q = classical_path(cfg.omega, t, s, x, y)  # (S, n, nu)
    out = np.zeros((s.shape[0], meas.d, meas.d), dtype=complex)
    for tup in itertools.product(range(meas.n_atoms), repeat=n):
        xi = meas.xi[list(tup)]  # (n, nu)
        gram = xi @ xi.T
        expo = -np.einsum("sjk,jk->s", om, gram) + 1j * np.einsum("snv,nv->s", q, xi)
        prod = np.eye(meas.d, dtype=complex)
        for j in tup:  # later times multiply from the left
            prod = meas.weights[j] @ prod
        out += np.exp(expo)[:, None, None] * prod
    return out


def mc_simplex_estimate(n: int, t: complex, x, y, cfg: DeformationConfig, samples: int, seed: int):
    """Monte Carlo estimate of v_n with its standard error (both d x d).

    Points are sorted uniform draws on [0,1]^n (uniform on the ordered simplex,
    density n!), generated by a Philox stream in fixed-size batches.
    """
    t = complex(t)
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    rng = np.random.Generator(np.random.Philox(seed))
    d = cfg.measure.d
    total = np.zeros((d, d), dtype=complex)  # sums of f - shift, shift = first batch mean
    sq = np.zeros((d, d))
    shift = None
    done = 0
    while done < samples:
        b = min(MC_BATCH, samples - done)
        s = np.sort(rng.random((b, n)), axis=1)
        f = _integrand(n, t, x, y, cfg, s)
        if shift is None:
            shift = f.mean(axis=0)
        f = f - shift
        total += f.sum(axis=0)
        sq += (np.abs(f) ** 2).sum(axis=0)
        done += b
    centred = total / samples
    mean = shift + centred
    var = np.maximum(sq / samples - np.abs(centred) ** 2, 0.0) * samples / max(samples - 1, 1)
    scale = t**n / factorial(n)
    return mean * scale, np.sqrt(var / samples) * abs(scale)
