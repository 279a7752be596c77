"""L-shaped array geometry, steering vectors, atoms and snapshot simulation.

Conventions
-----------
Element ``n`` (zero based) of a half-wavelength steering vector is
``exp(1j * pi * n * cos(angle))``. Atoms conjugate the x-arm vector,
``b = conj(a_x(alpha)) kron a_y(beta)``, which is the column-major
vectorization of the ``N_y x N_x`` outer product ``a_y a_x^H``.
Angles are degrees at every public boundary.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

ANGLE_MIN = -90.0
ANGLE_MAX = 90.0


class DomainError(ValueError):
    """Raised when an input lies outside the mathematical domain of an operation."""


def _check_angle(angle_deg):
    a = np.asarray(angle_deg, dtype=float)
    if not np.all(np.isfinite(a)) or np.any(a < ANGLE_MIN) or np.any(a >= ANGLE_MAX):
        raise DomainError(f"electrical angle must lie in [-90, 90) degrees, got {angle_deg!r}")
    return a


@dataclass(frozen=True)
class ArrayGeometry:
    """Sensor layout of a (possibly sparse) L-shaped array.

    ``omega_x`` and ``omega_y`` are one-based sensor indices along each arm;
    index 1 is the shared origin sensor and the largest index fixes the
    aperture ``n_x`` / ``n_y``.
    """

    n_x: int
    n_y: int
    omega_x: tuple[int, ...]
    omega_y: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "omega_x", tuple(int(i) for i in self.omega_x))
        object.__setattr__(self, "omega_y", tuple(int(i) for i in self.omega_y))
        for name, n, omega in (("x", self.n_x, self.omega_x), ("y", self.n_y, self.omega_y)):
            if n < 1:
                raise ValueError(f"n_{name} must be positive")
            if not omega or omega[0] != 1:
                raise ValueError(f"omega_{name} must contain the origin sensor 1 first")
            if any(b <= a for a, b in zip(omega, omega[1:])):
                raise ValueError(f"omega_{name} must be strictly increasing")
            if omega[-1] != n:
                raise ValueError(f"max(omega_{name}) must equal n_{name}={n}")

    @classmethod
    def uniform(cls, n_x: int, n_y: int | None = None) -> "ArrayGeometry":
        n_y = n_x if n_y is None else n_y
        return cls(n_x, n_y, tuple(range(1, n_x + 1)), tuple(range(1, n_y + 1)))

    @classmethod
    def sparse(cls, omega_x, omega_y=None) -> "ArrayGeometry":
        omega_y = omega_x if omega_y is None else omega_y
        return cls(max(omega_x), max(omega_y), tuple(omega_x), tuple(omega_y))

    @property
    def m_x(self) -> int:
        return len(self.omega_x)

    @property
    def m_y(self) -> int:
        return len(self.omega_y)

    @property
    def is_full(self) -> bool:
        return self.m_x == self.n_x and self.m_y == self.n_y

    @property
    def index_x(self) -> np.ndarray:
        """Zero-based row indices of the x-arm sensors."""
        return np.asarray(self.omega_x) - 1

    @property
    def index_y(self) -> np.ndarray:
        return np.asarray(self.omega_y) - 1

    def to_dict(self) -> dict:
        return {
            "n_x": self.n_x,
            "n_y": self.n_y,
            "omega_x": list(self.omega_x),
            "omega_y": list(self.omega_y),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArrayGeometry":
        n_x = int(d["n_x"])
        n_y = int(d["n_y"])
        omega_x = d.get("omega_x") or range(1, n_x + 1)
        omega_y = d.get("omega_y") or range(1, n_y + 1)
        return cls(n_x, n_y, tuple(omega_x), tuple(omega_y))


@dataclass(frozen=True)
class SourceConfig:
    """Far-field sources in electrical angles (degrees) with their powers."""

    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    powers: tuple[float, ...] | None = None
    snr_db: float = 10.0
    seed: int = 0

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        beta = tuple(float(b) for b in np.atleast_1d(self.beta))
        powers = (1.0,) * len(alpha) if self.powers is None else tuple(
            float(p) for p in np.atleast_1d(self.powers))
        if not alpha:
            raise ValueError("at least one source is required")
        if not len(alpha) == len(beta) == len(powers):
            raise ValueError("alpha, beta and powers must have equal length")
        if any(p <= 0 for p in powers):
            raise ValueError("source powers must be positive")
        _check_angle(alpha)
        _check_angle(beta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "snr_db", float(self.snr_db))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def k(self) -> int:
        return len(self.alpha)

    @property
    def noise_power(self) -> float:
        """Per-sensor noise variance: mean source power scaled down by the SNR."""
        if np.isinf(self.snr_db) and self.snr_db > 0:
            return 0.0
        return float(np.mean(self.powers)) * 10.0 ** (-self.snr_db / 10.0)

    def replace(self, **changes) -> "SourceConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "alpha_deg": list(self.alpha),
            "beta_deg": list(self.beta),
            "powers": list(self.powers),
            "snr_db": self.snr_db,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceConfig":
        return cls(
            alpha=tuple(d["alpha_deg"]),
            beta=tuple(d["beta_deg"]),
            powers=tuple(d["powers"]) if d.get("powers") is not None else None,
            snr_db=float(d.get("snr_db", 10.0)),
            seed=int(d.get("seed", 0)),
        )


@dataclass(frozen=True)
class Snapshots:
    """Arm outputs ``x`` (M_x x L) and ``y`` (M_y x L) with the sources that produced them."""

    x: np.ndarray
    y: np.ndarray
    geometry: ArrayGeometry
    truth: SourceConfig | None = None
    l: int = field(init=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=complex)
        y = np.asarray(self.y, dtype=complex)
        if x.ndim != 2 or y.ndim != 2:
            raise ValueError("x and y must be 2-D (sensors x snapshots)")
        if x.shape != (self.geometry.m_x, x.shape[1]) or y.shape != (self.geometry.m_y, x.shape[1]):
            raise ValueError(
                f"snapshot shapes {x.shape}, {y.shape} do not match geometry "
                f"({self.geometry.m_x}, {self.geometry.m_y}) with a common L")
        if x.shape[1] < 1:
            raise ValueError("at least one snapshot is required")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "l", x.shape[1])


@dataclass(frozen=True)
class Atom:
    alpha: float
    beta: float
    b: np.ndarray


def config_from_dict(d: dict) -> tuple[ArrayGeometry, SourceConfig]:
    """Split a flat JSON config (geometry and source keys) into its two parts."""
    return ArrayGeometry.from_dict(d), SourceConfig.from_dict(d)


def config_to_dict(geometry: ArrayGeometry, sources: SourceConfig) -> dict:
    return {**geometry.to_dict(), **sources.to_dict()}


def _phase_vector(n: int, angle_deg) -> np.ndarray:
    """``exp(1j*pi*arange(n)*cos(angle))`` for scalar or 1-D angles (columns)."""
    cos = np.cos(np.deg2rad(np.asarray(angle_deg, dtype=float)))
    return np.exp(1j * np.pi * np.outer(np.arange(n), np.atleast_1d(cos)))


def steering_vector(axis: str, angle_deg: float, geometry: ArrayGeometry, full: bool = True) -> np.ndarray:
    """Steering vector of one arm.

    Parameters
    ----------
    axis : {"x", "y"}
    angle_deg : float
        Electrical angle in [-90, 90) degrees.
    geometry : ArrayGeometry
    full : bool
        If True return all ``N`` aperture positions, otherwise only the
        rows selected by the arm's index set.
    """
    _check_angle(angle_deg)
    if axis == "x":
        n, idx = geometry.n_x, geometry.index_x
    elif axis == "y":
        n, idx = geometry.n_y, geometry.index_y
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    a = _phase_vector(n, angle_deg)[:, 0]
    return a if full else a[idx]


def steering_matrix(axis: str, angles_deg, geometry: ArrayGeometry, full: bool = True) -> np.ndarray:
    _check_angle(angles_deg)
    n, idx = (geometry.n_x, geometry.index_x) if axis == "x" else (geometry.n_y, geometry.index_y)
    a = _phase_vector(n, angles_deg)
    return a if full else a[idx]


def make_atom(alpha_deg: float, beta_deg: float, geometry: ArrayGeometry) -> Atom:
    ax = steering_vector("x", alpha_deg, geometry)
    ay = steering_vector("y", beta_deg, geometry)
    return Atom(float(alpha_deg), float(beta_deg), np.kron(ax.conj(), ay))


def simulate(geometry: ArrayGeometry, sources: SourceConfig, l: int, seed=None) -> Snapshots:
    """Draw ``l`` snapshots of uncorrelated Gaussian sources in white noise.

    ``seed`` overrides ``sources.seed``; any value accepted by
    :func:`numpy.random.default_rng` (including a ``SeedSequence``) works.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    rng = np.random.default_rng(sources.seed if seed is None else seed)
    k = sources.k
    p = np.asarray(sources.powers)

    def cn(shape, var):
        return np.sqrt(var / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    s = cn((k, l), 1.0) * np.sqrt(p)[:, None]
    sigma2 = sources.noise_power
    ax = steering_matrix("x", sources.alpha, geometry, full=False)
    ay = steering_matrix("y", sources.beta, geometry, full=False)
    # origin sensor noise is drawn independently per arm
    vx = cn((geometry.m_x, l), sigma2)
    vy = cn((geometry.m_y, l), sigma2)
    return Snapshots(ax @ s + vx, ay @ s + vy, geometry, sources)


def analytic_ccm(geometry: ArrayGeometry, sources: SourceConfig, full: bool = False) -> np.ndarray:
    """Infinite-snapshot cross-covariance ``E[y x^H] = A_y P A_x^H`` (M_y x M_x)."""
    ax = steering_matrix("x", sources.alpha, geometry, full=full)
    ay = steering_matrix("y", sources.beta, geometry, full=full)
    return (ay * np.asarray(sources.powers)) @ ax.conj().T


def analytic_arm_covariances(geometry: ArrayGeometry, sources: SourceConfig):
    """True arm covariances ``(R_x, R_y)`` of the selected sensors, noise included."""
    p = np.asarray(sources.powers)
    sigma2 = sources.noise_power
    ax = steering_matrix("x", sources.alpha, geometry, full=False)
    ay = steering_matrix("y", sources.beta, geometry, full=False)
    rx = (ax * p) @ ax.conj().T + sigma2 * np.eye(geometry.m_x)
    ry = (ay * p) @ ay.conj().T + sigma2 * np.eye(geometry.m_y)
    return rx, ry


def electrical_to_physical(alpha_deg: float, beta_deg: float, eps: float = 1e-12):
    """Elevation and azimuth ``(theta, phi)`` in degrees, or ``None`` when infeasible.

    A pair is infeasible when ``cos^2(alpha) + cos^2(beta) > 1``; no real
    direction produces it.
    """
    ca = np.cos(np.deg2rad(alpha_deg))
    cb = np.cos(np.deg2rad(beta_deg))
    s = ca * ca + cb * cb
    if s > 1.0 + eps:
        return None
    theta = np.rad2deg(np.arcsin(np.sqrt(min(s, 1.0))))
    phi = np.rad2deg(np.arctan2(cb, ca))
    return float(theta), float(phi)
