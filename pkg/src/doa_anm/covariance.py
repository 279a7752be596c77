"""Sample cross-covariance, sensor selection and the whitened error model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .array_model import ArrayGeometry, DomainError, Snapshots


class ConfigurationError(RuntimeError):
    """Raised when the data cannot support the requested error model."""


def vec(m: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v).reshape((rows, cols), order="F")


@dataclass(frozen=True)
class CrossCovariance:
    r_hat_mat: np.ndarray
    l: int

    @property
    def r_hat(self) -> np.ndarray:
        return vec(self.r_hat_mat)

    def to_dict(self) -> dict:
        return {"l": self.l, "r_hat_mat": complex_to_json(self.r_hat_mat)}


@dataclass(frozen=True)
class ErrorModel:
    """Asymptotic covariance ``q`` of the vectorized CCM error and its whitener.

    ``beta_bound`` is the radius that contains the whitened error norm with
    probability ``1 - kappa``.
    """

    q: np.ndarray
    whitener: np.ndarray
    beta_bound: float
    kappa: float

    def to_dict(self) -> dict:
        return {
            "q": complex_to_json(self.q),
            "whitener": complex_to_json(self.whitener),
            "beta_bound": self.beta_bound,
            "kappa": self.kappa,
        }


def complex_to_json(a) -> list:
    """Nested lists with every complex entry written as ``[re, im]``."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def complex_from_json(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def sample_ccm(snapshots: Snapshots) -> CrossCovariance:
    """``(1/L) Y X^H`` from the arm outputs."""
    x, y = snapshots.x, snapshots.y
    if x.shape[1] != y.shape[1]:
        raise ValueError("x and y must have the same number of snapshots")
    l = x.shape[1]
    return CrossCovariance(y @ x.conj().T / l, l)


def selection_operator(geometry: ArrayGeometry):
    """0/1 row-selection matrices ``(gamma_x, gamma_y)`` of the two arms."""
    gx = np.zeros((geometry.m_x, geometry.n_x))
    gx[np.arange(geometry.m_x), geometry.index_x] = 1.0
    gy = np.zeros((geometry.m_y, geometry.n_y))
    gy[np.arange(geometry.m_y), geometry.index_y] = 1.0
    return gx, gy


def selection_indices(geometry: ArrayGeometry) -> np.ndarray:
    """Positions in the full ``N_x N_y`` vector kept by ``kron(gamma_x^T, gamma_y)``.

    The Kronecker operator is a row selection, so the projections in the
    solver act on these coordinates directly.
    """
    return (geometry.index_x[:, None] * geometry.n_y + geometry.index_y[None, :]).reshape(-1)


def chi2_quantile(prob: float, dof: int) -> float:
    """Inverse CDF of the chi-square distribution.

    Solves ``P(dof/2, x/2) = prob`` for ``x`` with a bracketed root finder,
    where ``P`` is the regularized lower incomplete gamma function.
    """
    if not 0.0 < prob < 1.0:
        raise DomainError(f"prob must lie in (0, 1), got {prob!r}")
    if int(dof) != dof or dof < 1:
        raise DomainError(f"dof must be a positive integer, got {dof!r}")
    a = 0.5 * dof
    if prob <= 0.5:
        def f(x):
            return special.gammainc(a, 0.5 * x) - prob
    else:
        # upper tail keeps digits when prob is close to 1
        q = 1.0 - prob

        def f(x):
            return q - special.gammaincc(a, 0.5 * x)

    hi = max(2.0 * dof, 1.0)
    while f(hi) < 0.0:
        hi *= 2.0
    # xtol near zero so that only the relative tolerance governs tiny quantiles
    return float(optimize.brentq(f, 0.0, hi, xtol=1e-300, rtol=1e-12, maxiter=500))


def inv_sqrt_psd(q: np.ndarray, floor: float = 1e-12):
    """Hermitian inverse square root with eigenvalues floored at ``floor * lambda_max``.

    Returns ``(whitener, eigenvalues)``; the eigenvalues are the floored ones.
    """
    q = 0.5 * (q + q.conj().T)
    w, v = np.linalg.eigh(q)
    lam_max = w[-1]
    if not np.isfinite(lam_max) or lam_max <= 0.0:
        raise ConfigurationError(
            f"error covariance is not positive (largest eigenvalue {lam_max!r})")
    w = np.maximum(w, floor * lam_max)
    return (v / np.sqrt(w)) @ v.conj().T, w


def estimate_error_model(snapshots: Snapshots, kappa: float = 1e-4, loading: float = 1e-8) -> ErrorModel:
    """Plug-in error covariance ``(1/L) R_x^T kron R_y`` and its chi-square radius.

    The arm covariances are replaced by sample estimates with a small
    diagonal loading of ``loading * trace / M``.
    """
    if not 0.0 < kappa <= 0.5:
        raise DomainError(f"kappa must lie in (0, 0.5], got {kappa!r}")
    x, y, l = snapshots.x, snapshots.y, snapshots.l
    rx = x @ x.conj().T / l
    ry = y @ y.conj().T / l
    rx = rx + loading * np.real(np.trace(rx)) / rx.shape[0] * np.eye(rx.shape[0])
    ry = ry + loading * np.real(np.trace(ry)) / ry.shape[0] * np.eye(ry.shape[0])
    return error_model_from_covariances(rx, ry, l, kappa)


def error_model_from_covariances(rx: np.ndarray, ry: np.ndarray, l: int, kappa: float = 1e-4) -> ErrorModel:
    q = np.kron(rx.T, ry) / l
    q = 0.5 * (q + q.conj().T)
    whitener, w = inv_sqrt_psd(q)
    cond = w[-1] / w[0]
    if not np.isfinite(cond) or cond >= 0.999e12:
        raise ConfigurationError(
            f"error covariance is numerically singular (condition number {cond:.3e}); "
            f"arm covariance eigenvalues x={np.linalg.eigvalsh(rx)}, y={np.linalg.eigvalsh(ry)}")
    dof = q.shape[0]
    beta = np.sqrt(chi2_quantile(1.0 - kappa, dof))
    return ErrorModel(q, whitener, float(beta), float(kappa))


def whiten(error_model: ErrorModel, residual: np.ndarray) -> np.ndarray:
    """``Q^{-1/2} residual``; its squared norm is the chi-square statistic."""
    residual = np.asarray(residual)
    if residual.shape[0] != error_model.whitener.shape[1]:
        raise ValueError("residual length does not match the error model")
    return error_model.whitener @ residual
