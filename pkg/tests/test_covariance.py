import math

import mpmath
import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given
from hypothesis import strategies as st

from doa_anm.array_model import (
    ArrayGeometry,
    DomainError,
    Snapshots,
    SourceConfig,
    analytic_arm_covariances,
    analytic_ccm,
    simulate,
)
from doa_anm.covariance import (
    ConfigurationError,
    ErrorModel,
    chi2_quantile,
    complex_from_json,
    complex_to_json,
    error_model_from_covariances,
    estimate_error_model,
    sample_ccm,
    selection_indices,
    selection_operator,
    unvec,
    vec,
    whiten,
)

ARRAY1 = ArrayGeometry.uniform(5)
ARRAY2 = ArrayGeometry.sparse((1, 2, 3, 5))
PAPER = SourceConfig((-25.0, 30.0), (-35.0, 0.0), snr_db=10.0)


def mp_chi2_quantile(prob, dof):
    """High-precision inverse of the regularized lower incomplete gamma (test oracle)."""
    with mpmath.workdps(40):
        a = mpmath.mpf(dof) / 2
        p = mpmath.mpf(prob)
        f = lambda x: mpmath.gammainc(a, 0, x / 2, regularized=True) - p
        lo, hi = mpmath.mpf(0), mpmath.mpf(2 * dof + 10)
        while f(hi) < 0:
            hi *= 2
        for _ in range(200):
            mid = (lo + hi) / 2
            lo, hi = (mid, hi) if f(mid) < 0 else (lo, mid)
        return float((lo + hi) / 2)


def test_vec_unvec_roundtrip():
    m = np.arange(12).reshape(3, 4) + 1j
    v = vec(m)
    assert v[1] == m[1, 0]                      # column-major
    npt.assert_array_equal(unvec(v, 3, 4), m)


def test_sample_ccm_single_snapshot():
    snaps = simulate(ARRAY1, PAPER, 1)
    ccm = sample_ccm(snaps)
    npt.assert_allclose(ccm.r_hat_mat, np.outer(snaps.y[:, 0], snaps.x[:, 0].conj()))
    assert np.linalg.matrix_rank(ccm.r_hat_mat, tol=1e-10) == 1
    npt.assert_array_equal(ccm.r_hat, vec(ccm.r_hat_mat))


def test_sample_ccm_noiseless_single_source():
    src = SourceConfig((15.0,), (-60.0,), snr_db=np.inf, seed=9)
    snaps = simulate(ARRAY1, src, 64)
    s = snaps.x[0]                              # origin sensor, no noise
    p_hat = np.mean(np.abs(s) ** 2)
    npt.assert_allclose(sample_ccm(snaps).r_hat_mat, p_hat * analytic_ccm(ARRAY1, src), atol=1e-12)


def test_sample_ccm_is_unbiased():
    l, trials = 5, 1000
    r = analytic_ccm(ARRAY1, PAPER)
    samples = np.array([sample_ccm(simulate(ARRAY1, PAPER, l, seed=[s])).r_hat_mat for s in range(trials)])
    mean = samples.mean(axis=0)
    for part in (np.real, np.imag):
        se = part(samples).std(axis=0) / math.sqrt(trials)
        z = np.abs(part(mean) - part(r)) / se
        # 3 sigma per entry; a handful of the 25 entries may exceed it by chance
        assert np.mean(z < 3) >= 0.9
        assert z.max() < 4.5


def test_selection_full_is_identity():
    gx, gy = selection_operator(ARRAY1)
    npt.assert_array_equal(gx, np.eye(5))
    npt.assert_array_equal(gy, np.eye(5))
    npt.assert_array_equal(selection_indices(ARRAY1), np.arange(25))


def test_selection_array2():
    gx, _ = selection_operator(ARRAY2)
    expected = np.zeros((4, 5))
    for row, col in ((0, 0), (1, 1), (2, 2), (3, 4)):
        expected[row, col] = 1
    npt.assert_array_equal(gx, expected)


def test_selection_kron_identity():
    rng = np.random.default_rng(0)
    r_full = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    gx, gy = selection_operator(ARRAY2)
    # vec(A R B) = kron(B^T, A) vec(R) with B = gamma_x^H, so the operator is kron(gamma_x, gamma_y)
    lhs = np.kron(gx, gy) @ vec(r_full)
    npt.assert_allclose(lhs, vec(gy @ r_full @ gx.conj().T))
    npt.assert_allclose(vec(r_full)[selection_indices(ARRAY2)], lhs)


def test_error_model_white_inputs():
    sigma2, l, m = 0.5, 40, 4
    em = error_model_from_covariances(sigma2 * np.eye(m), sigma2 * np.eye(m), l, kappa=1e-4)
    npt.assert_allclose(em.q, sigma2 ** 2 / l * np.eye(m * m), atol=1e-15)
    npt.assert_allclose(em.whitener, math.sqrt(l) / sigma2 * np.eye(m * m), rtol=1e-12)


def test_error_model_properties():
    snaps = simulate(ARRAY1, PAPER, 100)
    em = estimate_error_model(snaps, kappa=1e-4)
    q = em.q
    npt.assert_allclose(q, q.conj().T, atol=1e-15)
    assert np.linalg.eigvalsh(q).min() >= -1e-10 * np.linalg.norm(q)
    npt.assert_allclose(em.whitener @ q @ em.whitener.conj().T, np.eye(25), atol=1e-8)
    npt.assert_allclose(em.whitener, em.whitener.conj().T, atol=1e-10)
    assert np.linalg.eigvalsh(em.whitener).min() > 0
    assert em.beta_bound ** 2 == pytest.approx(chi2_quantile(1 - 1e-4, 25), rel=1e-12)


def test_error_model_singular_raises():
    x = np.zeros((5, 10), dtype=complex)
    with pytest.raises(ConfigurationError):
        estimate_error_model(Snapshots(x, x, ARRAY1))


def test_error_model_kappa_domain():
    with pytest.raises(DomainError):
        estimate_error_model(simulate(ARRAY1, PAPER, 20), kappa=0.7)


def test_error_model_kronecker_layout_matches_monte_carlo():
    """Plug-in Q with true covariances against the empirical covariance of the CCM error."""
    l, trials = 100, 2000
    r = vec(analytic_ccm(ARRAY2, PAPER))
    eps = np.array([sample_ccm(simulate(ARRAY2, PAPER, l, seed=[t])).r_hat - r for t in range(trials)])
    emp = eps.T @ eps.conj() / trials
    rx, ry = analytic_arm_covariances(ARRAY2, PAPER)
    q = np.kron(rx.T, ry) / l
    assert np.linalg.norm(emp - q) / np.linalg.norm(q) < 0.1
    # the transposed layout is clearly worse, so the test discriminates
    q_wrong = np.kron(rx, ry) / l
    assert np.linalg.norm(emp - q_wrong) / np.linalg.norm(q_wrong) > 0.2


def test_chi2_quantile_closed_form_two_dof():
    assert chi2_quantile(0.5, 2) == pytest.approx(2 * math.log(2), rel=1e-10)
    for p in (1e-6, 0.1, 0.9, 0.999999):
        assert chi2_quantile(p, 2) == pytest.approx(-2 * math.log1p(-p), rel=1e-10)


def test_chi2_quantile_small_prob_goes_to_zero():
    assert chi2_quantile(1e-12, 3) < 1e-6
    assert chi2_quantile(1e-300, 1) < 1e-200


@pytest.mark.parametrize("dof", [1, 16, 25, 100])
@pytest.mark.parametrize("prob", [0.5, 0.99, 0.9999])
def test_chi2_quantile_matches_mpmath(prob, dof):
    assert chi2_quantile(prob, dof) == pytest.approx(mp_chi2_quantile(prob, dof), rel=1e-8)


@pytest.mark.parametrize("prob,dof", [(0.0, 3), (1.0, 3), (-0.1, 3), (0.5, 0), (0.5, 2.5)])
def test_chi2_quantile_domain(prob, dof):
    with pytest.raises(DomainError):
        chi2_quantile(prob, dof)


@given(st.floats(0.01, 0.98), st.floats(0.001, 0.01), st.integers(1, 60))
def test_chi2_quantile_monotone(p, dp, dof):
    assert chi2_quantile(p + dp, dof) > chi2_quantile(p, dof)
    assert chi2_quantile(p, dof + 1) > chi2_quantile(p, dof)


def _identity_model(c, n=4):
    w = np.eye(n) / math.sqrt(c)
    return ErrorModel(c * np.eye(n), w, 1.0, 0.1)


def test_whiten_trivial_cases():
    em = _identity_model(4.0)
    npt.assert_array_equal(whiten(em, np.zeros(4)), np.zeros(4))
    res = np.array([1, 2j, -3, 4 + 1j])
    npt.assert_allclose(whiten(em, res), res / 2.0)


def test_whitened_coverage():
    """Fraction of trials inside the chi-square radius at L=200."""
    l, trials, kappa = 200, 2000, 1e-4
    r = vec(analytic_ccm(ARRAY1, PAPER))
    inside = 0
    for t in range(trials):
        snaps = simulate(ARRAY1, PAPER, l, seed=[7, t])
        em = estimate_error_model(snaps, kappa)
        inside += np.linalg.norm(whiten(em, sample_ccm(snaps).r_hat - r)) <= em.beta_bound
    assert inside / trials >= 1 - kappa - 0.005


def test_json_complex_roundtrip():
    a = np.array([[1 + 2j, -3.5j], [0.25, 7]])
    npt.assert_array_equal(complex_from_json(complex_to_json(a)), a)
    assert complex_to_json(a)[0][0] == [1.0, 2.0]
