"""scikit-learn style estimators for cross-covariance atomic norm DOA estimation.

Both estimators take the two arm outputs in scikit-learn orientation,
``X`` of shape ``(n_snapshots, M_x)`` and ``Y`` of shape
``(n_snapshots, M_y)``, and expose the paired electrical angles after
``fit``::

    est = MCCANM(omega_x=(1, 2, 3, 5), omega_y=(1, 2, 3, 5)).fit(X, Y)
    est.pairs_        # (K_hat, 2) array of (alpha, beta) in degrees
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_arm_data, check_ccm, check_geometry, check_scalar
from .array_model import Snapshots
from .covariance import CrossCovariance, estimate_error_model, sample_ccm, vec
from .retrieval import retrieve
from .solver import SdpProblem, SolverOptions, solve


class _CrossCovarianceANM(BaseEstimator):
    """Shared fit logic; subclasses build the SDP from the sample data."""

    def _solver_options(self):
        return SolverOptions(tol=self.tol, rel_tol=self.rel_tol, max_iter=self.max_iter,
                             rho_init=self.rho_init, adapt=self.adapt)

    def _check_common(self):
        check_scalar(self.tau, "tau", 0.0, 1.0, include_min=False, include_max=False)
        check_scalar(self.tol, "tol", 0.0, include_min=False)
        check_scalar(self.rel_tol, "rel_tol", 0.0)
        if self.n_sources is not None and self.n_sources < 0:
            raise ValueError("n_sources must be non-negative")

    def _build_problem(self, snapshots, ccm):
        raise NotImplementedError

    def fit(self, X, Y):
        """Estimate source directions from the two arm outputs.

        Parameters
        ----------
        X : array-like of shape (n_snapshots, M_x)
            x-arm samples, complex.
        Y : array-like of shape (n_snapshots, M_y)
            y-arm samples, complex.

        Returns
        -------
        self
        """
        self._check_common()
        x, y = check_arm_data(X, Y)
        geometry = check_geometry(self.omega_x, self.omega_y, x.shape[0], y.shape[0])
        snapshots = Snapshots(x, y, geometry)
        ccm = sample_ccm(snapshots)
        problem = self._build_problem(snapshots, ccm)
        return self._fit_problem(problem, ccm)

    def _fit_problem(self, problem, ccm):
        self.geometry_ = problem.geometry
        self.ccm_ = ccm
        self.problem_ = problem
        self.solution_ = solve(problem, self._solver_options())
        self.estimate_ = retrieve(self.solution_.tlt, tau=self.tau, k=self.n_sources)
        self.pairs_ = np.array(self.estimate_.pairs, dtype=float).reshape(-1, 2)
        self.powers_ = np.array(self.estimate_.powers, dtype=float)
        self.n_sources_ = self.estimate_.k_hat
        self.status_ = self.solution_.status.value
        self.n_iter_ = self.solution_.iterations
        return self

    def fit_predict(self, X, Y):
        return self.fit(X, Y).pairs_

    def to_dict(self) -> dict:
        check_is_fitted(self, "estimate_")
        d = self.estimate_.to_dict()
        d["status"] = self.status_
        d["objective"] = self.solution_.objective
        d["iterations"] = self.n_iter_
        return d


class CCANM(_CrossCovarianceANM):
    """Cross-covariance atomic norm minimization with a Euclidean data-fit ball.

    Parameters
    ----------
    eta : float
        Radius of the ball around the sample cross-covariance. ``eta=0``
        solves the exact (equality) problem.
    omega_x, omega_y : sequence of int, optional
        One-based sensor indices of each arm; default is a full uniform arm
        matching the data width.
    tau : float
        Relative eigenvalue threshold for the number of sources.
    n_sources : int, optional
        Skip the rank rule and retrieve this many sources.
    tol, rel_tol, max_iter, rho_init, adapt
        Solver settings, see :class:`~doa_anm.solver.SolverOptions`.
    """

    def __init__(self, eta=None, omega_x=None, omega_y=None, tau=1e-3, n_sources=None,
                 tol=1e-6, rel_tol=1e-6, max_iter=20000, rho_init=1.0, adapt=True):
        self.eta = eta
        self.omega_x = omega_x
        self.omega_y = omega_y
        self.tau = tau
        self.n_sources = n_sources
        self.tol = tol
        self.rel_tol = rel_tol
        self.max_iter = max_iter
        self.rho_init = rho_init
        self.adapt = adapt

    def _problem_from_ccm(self, geometry, r_hat):
        if self.eta is None:
            raise ValueError("CCANM requires eta")
        check_scalar(self.eta, "eta", 0.0)
        if self.eta == 0:
            return SdpProblem.exact(geometry, r_hat)
        return SdpProblem.ball(geometry, r_hat, self.eta)

    def _build_problem(self, snapshots, ccm):
        return self._problem_from_ccm(snapshots.geometry, ccm.r_hat)

    def fit_ccm(self, r_hat_mat, l=None):
        """Fit from a precomputed ``M_y x M_x`` cross-covariance matrix."""
        self._check_common()
        r = check_ccm(r_hat_mat)
        geometry = check_geometry(self.omega_x, self.omega_y, r.shape[1], r.shape[0])
        ccm = CrossCovariance(r, l if l is not None else 0)
        return self._fit_problem(self._problem_from_ccm(geometry, vec(r)), ccm)


class MCCANM(_CrossCovarianceANM):
    """Whitened cross-covariance ANM with a chi-square data-fit radius.

    The error covariance of the sample cross-covariance is estimated from
    the same snapshots, so the only tuning parameter is the tail
    probability ``kappa``.

    Parameters
    ----------
    kappa : float
        Probability that the true cross-covariance falls outside the
        data-fit ellipsoid.
    """

    def __init__(self, kappa=1e-4, omega_x=None, omega_y=None, tau=1e-3, n_sources=None,
                 tol=1e-6, rel_tol=1e-6, max_iter=20000, rho_init=1.0, adapt=True):
        self.kappa = kappa
        self.omega_x = omega_x
        self.omega_y = omega_y
        self.tau = tau
        self.n_sources = n_sources
        self.tol = tol
        self.rel_tol = rel_tol
        self.max_iter = max_iter
        self.rho_init = rho_init
        self.adapt = adapt

    def _build_problem(self, snapshots, ccm):
        check_scalar(self.kappa, "kappa", 0.0, 0.5, include_min=False)
        self.error_model_ = estimate_error_model(snapshots, self.kappa)
        return SdpProblem.whitened(snapshots.geometry, ccm.r_hat, self.error_model_)
