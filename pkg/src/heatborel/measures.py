"""Finite matrix-valued atomic measures and the potentials they generate.

A potential is written c(x) = sum_j exp(i x.xi_j) M_j, with real frequencies
xi_j in R^nu and complex d x d weights M_j. The dot product is bilinear, so c
extends to an entire function of complex x.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigError

HERMITIAN_ATOL = 1e-14


def matrix_norm(m: np.ndarray) -> np.ndarray:
    """Operator 2-norm of a matrix or a stack of matrices (multiplicative, |1| = 1)."""
    m = np.asarray(m)
    if m.ndim == 2:
        return np.linalg.norm(m, 2)
    if m.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.svd(m, compute_uv=False)[..., 0]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Atoms (xi_j, M_j). An empty atom list is the zero measure."""

    xi: np.ndarray  # (N, nu) real
    weights: np.ndarray  # (N, d, d) complex
    nu: int = field(default=0)
    d: int = field(default=0)

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        w = np.asarray(self.weights, dtype=complex)
        nu = self.nu or (xi.shape[1] if xi.ndim == 2 else 0)
        d = self.d or (w.shape[1] if w.ndim == 3 else 0)
        if nu < 1 or d < 1:
            raise ConfigError("nu and d must be positive (pass them explicitly for the zero measure)")
        xi = xi.reshape(-1, nu)
        w = w.reshape(-1, d, d)
        if xi.shape[0] != w.shape[0]:
            raise ConfigError(f"{xi.shape[0]} frequencies but {w.shape[0]} weights")
        if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(w))):
            raise ConfigError("atoms must be finite")
        object.__setattr__(self, "xi", _readonly(xi))
        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "nu", int(nu))
        object.__setattr__(self, "d", int(d))

    @classmethod
    def zero(cls, nu: int = 1, d: int = 1) -> "DiscreteMeasure":
        return cls(np.zeros((0, nu)), np.zeros((0, d, d)), nu=nu, d=d)

    @property
    def n_atoms(self) -> int:
        return self.xi.shape[0]

    @property
    def is_zero(self) -> bool:
        return self.n_atoms == 0 or not np.any(self.weights)

    @property
    def weight_norms(self) -> np.ndarray:
        return matrix_norm(self.weights)

    @property
    def xi_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.xi**2, axis=1))

    def total_variation(self) -> float:
        return float(np.sum(self.weight_norms))

    def to_json(self) -> dict:
        return {
            "nu": self.nu,
            "d": self.d,
            "atoms": [
                {"xi": xi.tolist(), "re": w.real.tolist(), "im": w.imag.tolist()}
                for xi, w in zip(self.xi, self.weights)
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "DiscreteMeasure":
        try:
            nu, d = int(obj["nu"]), int(obj["d"])
            atoms = obj.get("atoms", [])
            xi = np.array([a["xi"] for a in atoms], dtype=float).reshape(-1, nu)
            w = np.array(
                [np.asarray(a["re"], float) + 1j * np.asarray(a.get("im", np.zeros((d, d))), float) for a in atoms]
            ).reshape(-1, d, d)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad measure description: {exc}") from exc
        return cls(xi, w, nu=nu, d=d)


def eval_potential(m: DiscreteMeasure, x) -> np.ndarray:
    """c(x) = sum_j exp(i x.xi_j) M_j for x of shape (..., nu); returns (..., d, d)."""
    x = np.asarray(x, dtype=complex)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != m.nu:
        raise ConfigError(f"point has dimension {x.shape[-1]}, measure has nu={m.nu}")
    phase = np.exp(1j * (x @ m.xi.T))  # (..., N)
    return np.tensordot(phase, m.weights, axes=([-1], [0]))


def exp_moment(m: DiscreteMeasure, eps: float, r: float) -> float:
    """sum_j exp(eps xi_j^2 + r |xi_j|) |M_j|."""
    if not (np.isfinite(eps) and np.isfinite(r)):
        raise ConfigError("eps and r must be finite")
    if m.n_atoms == 0:
        return 0.0
    xin = m.xi_norms
    return float(np.sum(np.exp(eps * xin**2 + r * xin) * m.weight_norms))


@dataclass(frozen=True, eq=False)
class TorusPotential:
    """Fourier coefficients c_q of a potential on (R/Z)^nu, c(x) = sum_q c_q exp(2 i pi q.x)."""

    coeffs: Mapping[tuple, np.ndarray]
    nu: int
    d: int

    def __post_init__(self):
        clean = {}
        for q, c in self.coeffs.items():
            q = tuple(int(k) for k in np.atleast_1d(q))
            if len(q) != self.nu:
                raise ConfigError(f"mode {q} does not have nu={self.nu} components")
            c = np.array(c, dtype=complex).reshape(self.d, self.d)
            clean[q] = clean.get(q, 0) + c
        object.__setattr__(self, "coeffs", clean)
        for q, c in clean.items():
            minus = tuple(-k for k in q)
            partner = clean.get(minus, np.zeros((self.d, self.d)))
            scale = max(1.0, float(np.abs(c).max()))
            if np.abs(partner - c.conj().T).max() > HERMITIAN_ATOL * scale:
                raise ConfigError(f"c_{{-q}} != c_q^* at q={q}: not a Hermitian torus potential")

    @property
    def max_mode(self) -> int:
        return max((max(abs(k) for k in q) for q in self.coeffs), default=0)

    def coefficient(self, q) -> np.ndarray:
        return self.coeffs.get(tuple(q), np.zeros((self.d, self.d), dtype=complex))

    def sup_norm_bound(self) -> float:
        return float(sum(matrix_norm(c) for c in self.coeffs.values()))

    def to_json(self) -> dict:
        return {
            "nu": self.nu,
            "d": self.d,
            "coeffs": [
                {"q": list(q), "re": c.real.tolist(), "im": c.imag.tolist()}
                for q, c in sorted(self.coeffs.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "TorusPotential":
        try:
            nu, d = int(obj["nu"]), int(obj["d"])
            coeffs = {}
            for entry in obj.get("coeffs", []):
                c = np.asarray(entry["re"], float) + 1j * np.asarray(entry.get("im", np.zeros((d, d))), float)
                q = tuple(int(k) for k in entry["q"])
                coeffs[q] = coeffs.get(q, 0) + c.reshape(d, d)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad torus potential description: {exc}") from exc
        return cls(coeffs, nu=nu, d=d)


def measure_from_fourier_coeffs(p: TorusPotential) -> DiscreteMeasure:
    """Atoms at xi = 2 pi q carrying c_q."""
    items = sorted(p.coeffs.items())
    if not items:
        return DiscreteMeasure.zero(p.nu, p.d)
    xi = np.array([q for q, _ in items], dtype=float) * 2 * np.pi
    w = np.array([c for _, c in items])
    return DiscreteMeasure(xi, w, nu=p.nu, d=p.d)


def cosine_measure(beta: float = 0.1, freq: float = 1.0) -> DiscreteMeasure:
    """c(x) = 2 beta cos(freq x) in one dimension."""
    return DiscreteMeasure([[freq], [-freq]], [[[beta]], [[beta]]])


def constant_measure(m) -> DiscreteMeasure:
    """Single atom at xi = 0: the constant potential c = m."""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return DiscreteMeasure(np.zeros((1, 1)), m[None], nu=1, d=m.shape[0])


def cosine_torus(beta: float = 0.1, nu: int = 1) -> TorusPotential:
    """c(x) = 2 beta cos(2 pi x_1) on the torus."""
    e = tuple([1] + [0] * (nu - 1))
    me = tuple(-k for k in e)
    return TorusPotential({e: [[beta]], me: [[beta]]}, nu=nu, d=1)
