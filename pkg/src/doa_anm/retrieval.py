"""Paired angle retrieval from a two-level Toeplitz matrix.

The signal subspace of ``T = B C B^H`` is shift invariant along both
levels. Row ``(m, p)`` of an atom is ``z^m w^p`` with
``z = exp(-1j*pi*cos(alpha))`` (conjugated x arm) and
``w = exp(1j*pi*cos(beta))``; least-squares shift operators for the two
levels share eigenvectors, which pairs the two angle sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .array_model import DomainError, electrical_to_physical
from .toeplitz import TwoLevelToeplitz, generator_from_frequencies

# off-diagonal energy of the paired y operator above which pairing is retried
_PAIRING_TOL = 1e-6
_FALLBACK_DRAWS = 5
_SORT_DECIMALS = 8


@dataclass(frozen=True)
class VandermondeDecomposition:
    alpha: np.ndarray
    beta: np.ndarray
    coeffs: np.ndarray
    residual: float = 0.0
    used_fallback: bool = False

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.alpha.tolist(), self.beta.tolist()))

    def reconstruct(self, n_x: int, n_y: int) -> TwoLevelToeplitz:
        u = np.cos(np.deg2rad(self.alpha))
        v = np.cos(np.deg2rad(self.beta))
        return TwoLevelToeplitz(n_x, n_y, generator_from_frequencies(n_x, n_y, u, v, self.coeffs))


@dataclass(frozen=True)
class DoaEstimate:
    pairs: list = field(default_factory=list)
    powers: list = field(default_factory=list)
    physical: list = field(default_factory=list)
    status: str | None = None

    @property
    def k_hat(self) -> int:
        return len(self.pairs)

    @property
    def alpha(self) -> np.ndarray:
        return np.array([p[0] for p in self.pairs], dtype=float)

    @property
    def beta(self) -> np.ndarray:
        return np.array([p[1] for p in self.pairs], dtype=float)

    def to_dict(self) -> dict:
        d = {
            "pairs_deg": [list(p) for p in self.pairs],
            "powers": list(self.powers),
            "k_hat": self.k_hat,
            "physical": [None if ph is None else list(ph) for ph in self.physical],
        }
        if self.status is not None:
            d["status"] = self.status
        return d


def estimate_rank(tlt: TwoLevelToeplitz, tau: float = 1e-3) -> int:
    """Count eigenvalues of the dense matrix above ``tau * lambda_max``."""
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau!r}")
    lam = np.linalg.eigvalsh(tlt.dense())
    if lam[-1] <= 0.0:
        return 0
    return int(np.count_nonzero(lam > tau * lam[-1]))


def shift_capacity(n_x: int, n_y: int) -> int:
    """Largest model order the two shift-invariance equations can resolve."""
    return min((n_x - 1) * n_y, n_x * (n_y - 1), n_x * n_y - 1)


def wrap_cosine(phase_over_pi) -> np.ndarray:
    """Map ``angle/pi`` to a direction cosine.

    Phases alias modulo 2; the representative is chosen in ``[-0.5, 1.5)``
    so that the admissible range ``[0, 1]`` (electrical angles in
    [-90, 90)) never straddles the cut, then clipped to ``[-1, 1]``.
    """
    c = np.mod(np.asarray(phase_over_pi, dtype=float) + 0.5, 2.0) - 0.5
    return np.clip(c, -1.0, 1.0)


def cosine_to_degrees(c) -> np.ndarray:
    return np.rad2deg(np.arccos(np.clip(c, -1.0, 1.0)))


def canonical_angle(angle_deg) -> np.ndarray:
    """Identifiable representative ``arccos(cos(angle))`` of an electrical angle.

    Steering vectors depend on ``cos(angle)`` only, so ``angle`` and
    ``-angle`` produce the same data; estimates are reported in ``[0, 180]``.
    """
    return cosine_to_degrees(np.cos(np.deg2rad(angle_deg)))


def _signal_subspace(d: np.ndarray, k: int) -> np.ndarray:
    _, vec = np.linalg.eigh(d)
    return vec[:, ::-1][:, :k]


def _shift_operators(us: np.ndarray, n_x: int, n_y: int):
    grid = us.reshape(n_x, n_y, -1)
    psi_x = np.linalg.lstsq(grid[:-1].reshape(-1, us.shape[1]),
                            grid[1:].reshape(-1, us.shape[1]), rcond=None)[0]
    psi_y = np.linalg.lstsq(grid[:, :-1].reshape(-1, us.shape[1]),
                            grid[:, 1:].reshape(-1, us.shape[1]), rcond=None)[0]
    return psi_x, psi_y


def _joint_diagonal(psi_x, psi_y, vecs):
    """Diagonals of both operators in the basis ``vecs`` and the pairing defect."""
    try:
        inv = np.linalg.inv(vecs)
    except np.linalg.LinAlgError:
        return None, None, np.inf
    dx = inv @ psi_x @ vecs
    dy = inv @ psi_y @ vecs
    off = 0.0
    for d in (dx, dy):
        scale = max(np.abs(np.diag(d)).max(), 1e-300)
        off = max(off, np.abs(d - np.diag(np.diag(d))).max() / scale)
    return np.diag(dx), np.diag(dy), off


def _pair(psi_x, psi_y, rng):
    _, vecs = np.linalg.eig(psi_x)
    zx, zy, off = _joint_diagonal(psi_x, psi_y, vecs)
    if off <= _PAIRING_TOL:
        return zx, zy, False
    # coincident x eigenvalues: a random combination separates them generically
    best = (zx, zy, off)
    for _ in range(_FALLBACK_DRAWS):
        rho = np.exp(2j * np.pi * rng.uniform())
        _, vecs = np.linalg.eig(psi_x + rho * psi_y)
        cand = _joint_diagonal(psi_x, psi_y, vecs)
        if cand[2] < best[2]:
            best = cand
        if best[2] <= _PAIRING_TOL:
            break
    return best[0], best[1], True


def _fit_coefficients(gen: np.ndarray, n_x: int, n_y: int, u, v):
    """Nonnegative least squares of the generator onto unit-weight atoms."""
    k = len(u)
    basis = np.stack([generator_from_frequencies(n_x, n_y, [u[i]], [v[i]], [1.0]).ravel()
                      for i in range(k)], axis=1)
    a = np.vstack([basis.real, basis.imag])
    b = np.concatenate([gen.ravel().real, gen.ravel().imag])
    c, res = optimize.nnls(a, b)
    scale = max(np.linalg.norm(b), 1e-300)
    return c, float(res / scale)


def decompose(tlt: TwoLevelToeplitz, k: int, seed: int = 0) -> VandermondeDecomposition:
    """Rank-``k`` Vandermonde decomposition by two-level ESPRIT.

    Raises
    ------
    DomainError
        If ``k`` exceeds what the shift equations can identify.
    """
    n_x, n_y = tlt.n_x, tlt.n_y
    if k < 0 or k > shift_capacity(n_x, n_y):
        raise DomainError(f"k={k} exceeds the shift capacity {shift_capacity(n_x, n_y)} "
                          f"of a {n_x}x{n_y} two-level Toeplitz matrix")
    if k == 0:
        return VandermondeDecomposition(np.zeros(0), np.zeros(0), np.zeros(0))
    us = _signal_subspace(tlt.dense(), k)
    psi_x, psi_y = _shift_operators(us, n_x, n_y)
    zx, zy, fallback = _pair(psi_x, psi_y, np.random.default_rng(seed))
    u = wrap_cosine(-np.angle(zx) / np.pi)
    v = wrap_cosine(np.angle(zy) / np.pi)
    c, res = _fit_coefficients(tlt.gen, n_x, n_y, u, v)
    return VandermondeDecomposition(cosine_to_degrees(u), cosine_to_degrees(v), c, res, fallback)


def retrieve(tlt: TwoLevelToeplitz, tau: float = 1e-3, k: int | None = None,
             drop_zero: bool = True) -> DoaEstimate:
    """Estimate the number of sources, decompose and sort the paired angles.

    ``k`` overrides the rank rule. Atoms whose fitted power is exactly zero
    are dropped when ``drop_zero`` is set, so every reported power is positive.
    """
    if k is None:
        k = estimate_rank(tlt, tau)
    k = min(k, shift_capacity(tlt.n_x, tlt.n_y))
    dec = decompose(tlt, k)
    keep = dec.coeffs > 0 if drop_zero else np.ones(dec.coeffs.shape, dtype=bool)
    rows = zip(dec.alpha[keep].tolist(), dec.beta[keep].tolist(), dec.coeffs[keep].tolist())
    # round the primary key so that shared alphas differing by rounding noise sort by beta
    rows = sorted(rows, key=lambda row: (round(row[0], _SORT_DECIMALS), row[1]))
    pairs = [(a, b) for a, b, _ in rows]
    powers = [c for _, _, c in rows]
    physical = [electrical_to_physical(a, b) for a, b in pairs]
    return DoaEstimate(pairs, powers, physical)
