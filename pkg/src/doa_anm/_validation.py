"""Input checks shared by the estimators.

scikit-learn's ``check_array`` rejects complex input, so arm data is
validated here.
"""

import numbers

import numpy as np

from .array_model import ArrayGeometry


def check_arm_data(X, Y):
    """Validate snapshot matrices given as ``(n_snapshots, n_sensors)``.

    Returns complex arrays transposed to ``(n_sensors, n_snapshots)``.
    """
    X = np.asarray(X)
    Y = np.asarray(Y)
    for name, a in (("X", X), ("Y", Y)):
        if a.ndim != 2:
            raise ValueError(f"{name} must be 2-D (n_snapshots, n_sensors), got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"{name} is empty")
        if not np.issubdtype(a.dtype, np.number):
            raise TypeError(f"{name} must be numeric, got dtype {a.dtype}")
        if not np.all(np.isfinite(a)):
            raise ValueError(f"{name} contains NaN or infinity")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X and Y have different snapshot counts: {X.shape[0]} != {Y.shape[0]}")
    return X.astype(complex).T, Y.astype(complex).T


def check_ccm(r_hat_mat):
    r = np.asarray(r_hat_mat)
    if r.ndim != 2 or not np.all(np.isfinite(r)):
        raise ValueError("cross-covariance must be a finite 2-D matrix")
    return r.astype(complex)


def check_geometry(omega_x, omega_y, m_x, m_y) -> ArrayGeometry:
    """Resolve sensor index sets, defaulting to full uniform arms of the data size."""
    omega_x = tuple(range(1, m_x + 1)) if omega_x is None else tuple(omega_x)
    omega_y = tuple(range(1, m_y + 1)) if omega_y is None else tuple(omega_y)
    if len(omega_x) != m_x or len(omega_y) != m_y:
        raise ValueError(
            f"data has {m_x} x-arm and {m_y} y-arm sensors but the index sets "
            f"have {len(omega_x)} and {len(omega_y)}")
    return ArrayGeometry.sparse(omega_x, omega_y)


def check_scalar(x, name, min_val=None, max_val=None, include_min=True, include_max=True):
    if not isinstance(x, numbers.Real) or isinstance(x, bool):
        raise TypeError(f"{name} must be a real number, got {type(x).__name__}")
    if min_val is not None and (x < min_val or (x == min_val and not include_min)):
        raise ValueError(f"{name}={x} is below its lower bound {min_val}")
    if max_val is not None and (x > max_val or (x == max_val and not include_max)):
        raise ValueError(f"{name}={x} is above its upper bound {max_val}")
    return x
