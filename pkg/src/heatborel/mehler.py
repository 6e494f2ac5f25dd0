"""Gaussian kernel of d/dt - d^2/dx^2 + (w^2/4) x^2 and its classical paths."""
from __future__ import annotations

import numpy as np

from .defmatrix import check_pole, shc
from .errors import DomainError

DELTA_PATH = 0.5


def principal_sqrt(z):
    """z^(1/2) = |z|^(1/2) e^(i theta/2) with theta in (-pi, pi].

    numpy follows the sign of a zero imaginary part on the negative real axis;
    here the whole axis is mapped to +i |z|^(1/2).
    """
    z = np.asarray(z, dtype=complex)
    r = np.sqrt(z)
    neg_axis = (z.imag == 0) & (z.real < 0)
    r = np.where(neg_axis, 1j * np.sqrt(np.abs(z.real)), r)
    return r if r.ndim else complex(r)


def _dot(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def mehler_kernel(t: complex, x, y, omega: complex = 0.0) -> complex:
    """(4 pi sh(wt)/w)^(-nu/2) exp(-(w / 4 sh(wt)) (ch(wt)(x^2 + y^2) - 2 x.y)).

    Evaluated in the cancellation-free form

        (4 pi t shc(a))^(-nu/2) exp(-[(x - y)^2 + (a^2/2) shc(a/2)^2 (x^2 + y^2)] / (4 t shc(a)))

    with a = w t; x and y are complex nu-vectors (bilinear squares). The last
    axis of x and y is the space axis; leading axes broadcast.
    """
    t = np.asarray(t, dtype=complex)
    if np.any(t == 0):
        raise DomainError("t = 0 is the initial time; the kernel is a delta there")
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    nu = x.shape[-1]
    a = complex(omega) * t
    check_pole(a)
    sa = shc(a)
    base = 4 * np.pi * t * sa
    pref = (1.0 / principal_sqrt(base)) ** nu
    d = x - y
    quad = _dot(d, d) + 0.5 * a * a * shc(0.5 * a) ** 2 * (_dot(x, x) + _dot(y, y))
    out = pref * np.exp(-quad / (4 * t * sa))
    return out if np.ndim(out) else complex(out)


def path_weights(omega: complex, t: complex, s):
    """alpha(s) = sh(ats)/sh(at) and beta(s) = sh(at(1-s))/sh(at), so q(s) = alpha x + beta y."""
    s = np.asarray(s, dtype=float)
    a = complex(omega) * complex(t)
    if omega == 0:
        return s.astype(complex), (1.0 - s).astype(complex)
    check_pole(a)
    sa = shc(a)
    return s * shc(a * s) / sa, (1.0 - s) * shc(a * (1.0 - s)) / sa


def classical_path(omega: complex, t: complex, s, x, y) -> np.ndarray:
    """q(s) = (sh(wts) x + sh(wt(1-s)) y) / sh(wt); q(0) = y, q(1) = x."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    alpha, beta = path_weights(omega, t, s)
    return np.asarray(alpha)[..., None] * x + np.asarray(beta)[..., None] * y
