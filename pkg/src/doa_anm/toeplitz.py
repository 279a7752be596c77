"""Two-level (block-Toeplitz with Toeplitz blocks) Hermitian matrices.

A matrix of size ``N_x N_y`` is stored through its generator ``gen`` of
shape ``(2 N_x - 1, 2 N_y - 1)``; ``gen[s + N_x - 1, t + N_y - 1]`` holds
the value for offset ``(s, t)``. With row ``(m, p)`` and column ``(n, q)``
flattened as ``m * N_y + p``, the dense matrix is

    dense[(m, p), (n, q)] = gen(n - m, p - q)

so that an atom ``(alpha, beta)`` with weight ``c`` contributes
``c * exp(1j*pi*(s*cos(alpha) + t*cos(beta)))`` to ``gen(s, t)``. The x
offset enters with a plus sign because atoms conjugate the x steering
vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .array_model import DomainError, _check_angle
from .covariance import complex_from_json, complex_to_json


@lru_cache(maxsize=32)
def _layout(n_x: int, n_y: int):
    """Flat generator index of every dense entry and the multiplicity of each offset."""
    m = np.repeat(np.arange(n_x), n_y)
    p = np.tile(np.arange(n_y), n_x)
    s = m[None, :] - m[:, None]          # n - m
    t = p[:, None] - p[None, :]          # p - q
    flat = (s + n_x - 1) * (2 * n_y - 1) + (t + n_y - 1)
    counts = np.bincount(flat.ravel(), minlength=(2 * n_x - 1) * (2 * n_y - 1)).astype(float)
    flat.setflags(write=False)
    counts.setflags(write=False)
    return flat, counts


def offset_counts(n_x: int, n_y: int) -> np.ndarray:
    """Number of dense entries sharing each generator offset, shaped like ``gen``."""
    return _layout(n_x, n_y)[1].reshape(2 * n_x - 1, 2 * n_y - 1)


def free_real_parameters(n_x: int, n_y: int) -> int:
    """Real degrees of freedom of a Hermitian two-level Toeplitz matrix.

    Offsets ``(s, t)`` and ``(-s, -t)`` are conjugates and ``gen(0, 0)`` is
    real, which leaves ``(2 N_x - 1)(2 N_y - 1)`` real parameters.
    """
    return (2 * n_x - 1) * (2 * n_y - 1)


@dataclass(frozen=True)
class TwoLevelToeplitz:
    n_x: int
    n_y: int
    gen: np.ndarray

    def __post_init__(self):
        gen = np.array(self.gen, dtype=complex)
        if gen.shape != (2 * self.n_x - 1, 2 * self.n_y - 1):
            raise ValueError(
                f"generator shape {gen.shape} does not match levels ({self.n_x}, {self.n_y})")
        gen.setflags(write=False)
        object.__setattr__(self, "gen", gen)

    @property
    def size(self) -> int:
        return self.n_x * self.n_y

    def __getitem__(self, offset) -> complex:
        s, t = offset
        return self.gen[s + self.n_x - 1, t + self.n_y - 1]

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.gen, self.gen[::-1, ::-1].conj(), rtol=0, atol=atol))

    def dense(self) -> np.ndarray:
        flat, _ = _layout(self.n_x, self.n_y)
        return self.gen.ravel()[flat]

    def trace(self) -> float:
        return float(self.size * self.gen[self.n_x - 1, self.n_y - 1].real)

    def to_json(self) -> list:
        return complex_to_json(self.gen)

    @classmethod
    def from_json(cls, obj, n_x: int | None = None, n_y: int | None = None) -> "TwoLevelToeplitz":
        gen = complex_from_json(obj)
        n_x = (gen.shape[0] + 1) // 2 if n_x is None else n_x
        n_y = (gen.shape[1] + 1) // 2 if n_y is None else n_y
        return cls(n_x, n_y, gen)

    @classmethod
    def zeros(cls, n_x: int, n_y: int) -> "TwoLevelToeplitz":
        return cls(n_x, n_y, np.zeros((2 * n_x - 1, 2 * n_y - 1), dtype=complex))


def dense(tlt: TwoLevelToeplitz) -> np.ndarray:
    return tlt.dense()


def trace(tlt: TwoLevelToeplitz) -> float:
    return tlt.trace()


def generator_from_frequencies(n_x: int, n_y: int, u, v, c) -> np.ndarray:
    """Generator of ``sum_k c_k`` atoms given direction cosines ``u_k`` (x) and ``v_k`` (y)."""
    s = np.arange(-(n_x - 1), n_x)
    t = np.arange(-(n_y - 1), n_y)
    ex = np.exp(1j * np.pi * np.outer(s, u))       # (2N_x-1, K)
    ey = np.exp(1j * np.pi * np.outer(t, v))       # (2N_y-1, K)
    return (ex * np.asarray(c, dtype=float)) @ ey.T


def from_atoms(atoms, n_x: int, n_y: int) -> TwoLevelToeplitz:
    """Build ``sum_k c_k b_k b_k^H`` from ``(alpha_deg, beta_deg, c)`` triples."""
    atoms = list(atoms)
    if not atoms:
        return TwoLevelToeplitz.zeros(n_x, n_y)
    alpha, beta, c = (np.asarray(col, dtype=float) for col in zip(*atoms))
    if np.any(c <= 0):
        raise DomainError("atom weights must be positive")
    _check_angle(alpha)
    _check_angle(beta)
    u = np.cos(np.deg2rad(alpha))
    v = np.cos(np.deg2rad(beta))
    return TwoLevelToeplitz(n_x, n_y, generator_from_frequencies(n_x, n_y, u, v, c))


def project_generator(a: np.ndarray, n_x: int, n_y: int) -> np.ndarray:
    """Generator of the Frobenius-nearest Hermitian two-level Toeplitz matrix to ``a``."""
    flat, counts = _layout(n_x, n_y)
    idx = flat.ravel()
    a = np.asarray(a).ravel()
    g = (np.bincount(idx, weights=a.real, minlength=counts.size)
         + 1j * np.bincount(idx, weights=a.imag, minlength=counts.size)) / counts
    g = g.reshape(2 * n_x - 1, 2 * n_y - 1)
    # offsets (s, t) and (-s, -t) have equal multiplicity, so plain averaging is exact
    return 0.5 * (g + g[::-1, ::-1].conj())


def project_structure(a: np.ndarray, n_x: int, n_y: int, check: bool = True) -> TwoLevelToeplitz:
    """Average the entries of a Hermitian matrix along each two-level offset."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (n_x * n_y, n_x * n_y):
        raise ValueError(f"expected a {n_x * n_y} square matrix, got {a.shape}")
    if check and not np.allclose(a, a.conj().T, rtol=0, atol=1e-8 * max(1.0, np.abs(a).max())):
        raise ValueError("input must be Hermitian")
    return TwoLevelToeplitz(n_x, n_y, project_generator(a, n_x, n_y))
