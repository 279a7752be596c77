"""Operator-splitting solver for the two-level Toeplitz atomic-norm SDPs.

All problem variants share the same form::

    minimize    (t + tr T) / (2 sqrt(N_x N_y))
    subject to  [[t, r^H], [r, T]] >= 0,   T two-level Toeplitz,
                r in D

where ``D`` is a data-fit set on the observed coordinates of ``r``: a
single point (exact), a Euclidean ball (radius ``eta``) or an ellipsoid
``||W (r_hat - r)|| <= beta``.

The iteration splits the bordered matrix into a structured copy ``(t, r,
T)`` and an unstructured PSD copy ``Z`` tied by a scaled dual ``U``:

1. structured update: minimize the linear objective plus
   ``rho/2 ||W(t, r, T) - (Z - U)||_F^2``. The ``T`` block reduces to
   diagonal averaging, ``r`` to a projection onto ``D`` and ``t`` to a
   scalar shift.
2. ``Z = Pi_psd(W + U)`` by eigenvalue clipping.
3. ``U += W - Z``.

``rho`` follows residual balancing.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .array_model import ArrayGeometry
from .covariance import ErrorModel, selection_indices
from .toeplitz import TwoLevelToeplitz, _layout, project_generator

log = logging.getLogger(__name__)


class NumericError(RuntimeError):
    """Raised when a dense linear-algebra kernel fails."""


class Variant(str, enum.Enum):
    EXACT = "exact"
    BALL = "ball"
    SPARSE_BALL = "sparse_ball"
    WHITENED = "whitened"


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"


@dataclass
class SolverOptions:
    tol: float = 1e-6
    rel_tol: float = 1e-6
    max_iter: int = 20000
    rho_init: float = 1.0
    adapt: bool = True
    adapt_ratio: float = 10.0
    adapt_factor: float = 2.0
    # residuals are checked (and rho adapted) every this many iterations
    check_every: int = 1

    @classmethod
    def from_dict(cls, d: dict | None) -> "SolverOptions":
        d = dict(d or {})
        known = {k: d.pop(k) for k in list(d) if k in cls.__dataclass_fields__}
        if d:
            raise ValueError(f"unknown solver options: {sorted(d)}")
        return cls(**known)


@dataclass(frozen=True)
class SdpProblem:
    variant: Variant
    geometry: ArrayGeometry
    r_hat_omega: np.ndarray
    eta: float | None = None
    error_model: ErrorModel | None = None

    def __post_init__(self):
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        r = np.asarray(self.r_hat_omega, dtype=complex).reshape(-1)
        object.__setattr__(self, "r_hat_omega", r)
        g = self.geometry
        if r.size != g.m_x * g.m_y:
            raise ValueError(f"r_hat_omega has length {r.size}, expected M_x*M_y={g.m_x * g.m_y}")
        needs_eta = variant in (Variant.BALL, Variant.SPARSE_BALL)
        if needs_eta != (self.eta is not None):
            raise ValueError(f"eta is {'required' if needs_eta else 'not allowed'} for {variant.value}")
        if (variant is Variant.WHITENED) != (self.error_model is not None):
            raise ValueError("error_model is required exactly for the whitened variant")
        if variant is Variant.BALL and not g.is_full:
            raise ValueError("the ball variant needs a full array; use sparse_ball")
        if variant is Variant.WHITENED and self.error_model.whitener.shape != (r.size, r.size):
            raise ValueError("error model dimension does not match the data")

    @classmethod
    def exact(cls, geometry, r_hat_omega) -> "SdpProblem":
        return cls(Variant.EXACT, geometry, r_hat_omega)

    @classmethod
    def ball(cls, geometry, r_hat_omega, eta) -> "SdpProblem":
        variant = Variant.BALL if geometry.is_full else Variant.SPARSE_BALL
        return cls(variant, geometry, r_hat_omega, eta=float(eta))

    @classmethod
    def whitened(cls, geometry, r_hat_omega, error_model) -> "SdpProblem":
        return cls(Variant.WHITENED, geometry, r_hat_omega, error_model=error_model)

    @property
    def selection(self) -> np.ndarray:
        """Dense ``kron(gamma_x^T, gamma_y)`` operator (M_x M_y x N_x N_y)."""
        idx = selection_indices(self.geometry)
        n = self.geometry.n_x * self.geometry.n_y
        s = np.zeros((idx.size, n))
        s[np.arange(idx.size), idx] = 1.0
        return s

    def data_fit_residual(self, r: np.ndarray) -> float:
        """Constraint value minus its bound; <= 0 means feasible."""
        res = self.r_hat_omega - np.asarray(r)[selection_indices(self.geometry)]
        if self.variant is Variant.EXACT:
            return float(np.linalg.norm(res))
        if self.variant is Variant.WHITENED:
            return float(np.linalg.norm(self.error_model.whitener @ res) - self.error_model.beta_bound)
        return float(np.linalg.norm(res) - self.eta)


@dataclass
class SdpSolution:
    t: float
    r: np.ndarray
    tlt: TwoLevelToeplitz
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    status: Status
    solve_seconds: float = 0.0
    history: list = field(default_factory=list, repr=False)

    def bordered(self) -> np.ndarray:
        n = self.r.size
        m = np.empty((n + 1, n + 1), dtype=complex)
        m[0, 0] = self.t
        m[1:, 0] = self.r
        m[0, 1:] = self.r.conj()
        m[1:, 1:] = self.tlt.dense()
        return m

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "t": self.t,
            "objective": self.objective,
            "iterations": self.iterations,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "solve_seconds": self.solve_seconds,
            "generator": self.tlt.to_json(),
        }


def psd_project(h: np.ndarray, check: bool = True) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix to a Hermitian ``h``."""
    h = np.asarray(h)
    if check and not np.allclose(h, h.conj().T, rtol=0, atol=1e-8 * max(1.0, np.abs(h).max())):
        raise ValueError("input must be Hermitian")
    h = 0.5 * (h + h.conj().T)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed for matrix:\n{np.array2string(h)}") from exc
    pos = w > 0
    if pos.all():
        return h
    vp = v[:, pos]
    return (vp * w[pos]) @ vp.conj().T


def ball_project(center: np.ndarray, point: np.ndarray, radius: float) -> np.ndarray:
    d = point - center
    nd = np.linalg.norm(d)
    if nd <= radius:
        return point
    return center + d * (radius / nd)


class _Ellipsoid:
    """Projection onto ``{v : ||W (c - v)|| <= radius}`` with ``W^H W`` diagonalized once."""

    def __init__(self, center, whitener, radius, xtol=1e-10):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = np.asarray(center, dtype=complex)
        self.radius = float(radius)
        whitener = np.asarray(whitener)
        lam, self.v = np.linalg.eigh(whitener.conj().T @ whitener)
        self.lam = np.maximum(lam, 0.0)
        self.xtol = xtol

    def __call__(self, point):
        d0 = np.asarray(point) - self.center
        y = self.v.conj().T @ d0
        w = self.lam * np.abs(y) ** 2
        r2 = self.radius ** 2
        if w.sum() <= r2:
            return point
        mu = self._multiplier(w)
        return self.center + self.v @ (y / (1.0 + mu * self.lam))

    def _multiplier(self, w):
        """Root of ``h(mu) = 1/sqrt(S(mu)) - 1/radius`` with ``S(mu) = sum w/(1+mu lam)^2``.

        ``h`` is increasing and concave, so Newton from ``mu = 0`` climbs
        monotonically to the root; bisection on a bracket backs it up.
        """
        lam = self.lam
        inv_r = 1.0 / self.radius
        mu, lo, hi = 0.0, 0.0, np.inf
        for _ in range(100):
            d = 1.0 + mu * lam
            s = np.dot(w, d ** -2)
            h = s ** -0.5 - inv_r
            if abs(h) <= self.xtol * inv_r:
                return mu
            if h < 0.0:
                lo = mu
            else:
                hi = mu
            ds = -2.0 * np.dot(w * lam, d ** -3)
            step = h / (-0.5 * s ** -1.5 * ds)
            mu_new = mu - step
            if not lo <= mu_new <= hi or not np.isfinite(mu_new):
                mu_new = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * max(mu, 1.0 / lam.max())
            mu = mu_new

        def g(m):
            return np.dot(w, (1.0 + m * lam) ** -2) ** -0.5 - inv_r

        hi = max(mu, 1.0 / lam.max())
        while g(hi) < 0.0:
            hi *= 4.0
        return optimize.brentq(g, 0.0, hi, xtol=1e-300, rtol=self.xtol)


def ellipsoid_project(center, point, whitener, radius) -> np.ndarray:
    """Euclidean projection of ``point`` onto ``{v : ||whitener (center - v)||_2 <= radius}``."""
    return _Ellipsoid(center, whitener, radius)(point)


def _data_projector(problem: SdpProblem):
    """Return ``f(r_target) -> r`` projecting onto the variant's data-fit set."""
    idx = selection_indices(problem.geometry)
    r_hat = problem.r_hat_omega
    variant = problem.variant

    if variant is Variant.EXACT:
        def sub(p):
            return r_hat
    elif variant is Variant.WHITENED:
        em = problem.error_model
        sub = _Ellipsoid(r_hat, em.whitener, em.beta_bound)
    else:
        eta = problem.eta

        def sub(p):
            return ball_project(r_hat, p, eta)

    def project(r):
        r = r.copy()
        r[idx] = sub(r[idx])
        return r

    return project


def _zero_feasible(problem: SdpProblem) -> bool:
    return problem.data_fit_residual(np.zeros(problem.geometry.n_x * problem.geometry.n_y)) <= 0.0


def _zero_solution(problem: SdpProblem, status: Status, elapsed: float = 0.0) -> SdpSolution:
    g = problem.geometry
    return SdpSolution(0.0, np.zeros(g.n_x * g.n_y, dtype=complex),
                       TwoLevelToeplitz.zeros(g.n_x, g.n_y), 0.0, 0, 0.0, 0.0, status, elapsed)


def solve(problem: SdpProblem, opts: SolverOptions | None = None, record_history: bool = False) -> SdpSolution:
    """Solve one atomic-norm SDP.

    Never raises on non-convergence: the returned status is ``MaxIter``
    with the final residuals, or ``Infeasible`` for an empty data-fit set.
    """
    opts = opts or SolverOptions()
    start = time.perf_counter()
    g = problem.geometry
    n_x, n_y = g.n_x, g.n_y
    big_n = n_x * n_y
    n = big_n + 1

    if problem.variant in (Variant.BALL, Variant.SPARSE_BALL) and problem.eta < 0:
        return _zero_solution(problem, Status.INFEASIBLE, time.perf_counter() - start)
    if _zero_feasible(problem):
        return _zero_solution(problem, Status.CONVERGED, time.perf_counter() - start)

    project_r = _data_projector(problem)
    flat, _ = _layout(n_x, n_y)
    c0 = n_x - 1, n_y - 1
    shift = 1.0 / (2.0 * np.sqrt(big_n))        # objective weight on t and on each diagonal entry of T

    rho = float(opts.rho_init)
    z = np.zeros((n, n), dtype=complex)
    u = np.zeros((n, n), dtype=complex)
    w_mat = np.empty((n, n), dtype=complex)
    history = []
    status = Status.MAX_ITER
    it = 0
    r_pri = r_dual = np.inf
    t = 0.0
    r = np.zeros(big_n, dtype=complex)
    gen = np.zeros((2 * n_x - 1, 2 * n_y - 1), dtype=complex)

    for it in range(1, opts.max_iter + 1):
        v = z - u
        # structured update
        t = v[0, 0].real - shift / rho
        r = project_r(0.5 * (v[1:, 0] + v[0, 1:].conj()))
        gen = project_generator(v[1:, 1:], n_x, n_y)
        gen[c0] -= shift / rho
        w_mat[0, 0] = t
        w_mat[1:, 0] = r
        w_mat[0, 1:] = r.conj()
        w_mat[1:, 1:] = gen.ravel()[flat]

        # cone update
        z_old = z
        try:
            lam, vec = np.linalg.eigh(w_mat + u)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigendecomposition failed at iteration {it}:\n"
                               f"{np.array2string(w_mat + u)}") from exc
        pos = lam > 0
        vp = vec[:, pos]
        z = (vp * lam[pos]) @ vp.conj().T

        diff = w_mat - z
        u = u + diff

        if it % opts.check_every and it != opts.max_iter:
            continue
        r_pri = np.linalg.norm(diff)
        r_dual = rho * np.linalg.norm(z - z_old)
        eps_pri = opts.tol + opts.rel_tol * max(np.linalg.norm(w_mat), np.linalg.norm(z))
        eps_dual = opts.tol + opts.rel_tol * rho * np.linalg.norm(u)
        if record_history:
            history.append((it, r_pri, r_dual, rho))
        if r_pri <= eps_pri and r_dual <= eps_dual:
            status = Status.CONVERGED
            break
        if opts.adapt:
            if r_pri > opts.adapt_ratio * r_dual:
                rho *= opts.adapt_factor
                u /= opts.adapt_factor
            elif r_dual > opts.adapt_ratio * r_pri:
                rho /= opts.adapt_factor
                u *= opts.adapt_factor

    if status is Status.CONVERGED:
        # lift t and diag(T) by the residual negative eigenvalue: structure and data fit are
        # untouched and the bordered matrix becomes PSD
        lam_min = np.linalg.eigvalsh(w_mat)[0]
        if lam_min < 0.0:
            t -= lam_min
            gen[c0] -= lam_min
    tlt = TwoLevelToeplitz(n_x, n_y, gen)
    objective = (t + tlt.trace()) * shift
    elapsed = time.perf_counter() - start
    if status is Status.MAX_ITER:
        log.warning("solver stopped at max_iter=%d (primal %.3e, dual %.3e)", it, r_pri, r_dual)
    return SdpSolution(float(t), r, tlt, float(objective), it, float(r_pri), float(r_dual),
                       status, elapsed, history)
