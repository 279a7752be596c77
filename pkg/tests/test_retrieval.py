import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doa_anm.array_model import ArrayGeometry, DomainError, SourceConfig, analytic_ccm
from doa_anm.covariance import vec
from doa_anm.retrieval import (
    canonical_angle,
    decompose,
    estimate_rank,
    retrieve,
    shift_capacity,
    wrap_cosine,
)
from doa_anm.solver import SdpProblem, solve
from doa_anm.toeplitz import TwoLevelToeplitz, from_atoms

from oracles import random_atom_set


def identifiable(atoms):
    """Sorted ``(|alpha|, |beta|, c)`` in the same order ``retrieve`` uses."""
    return sorted(((abs(a), abs(b), c) for a, b, c in atoms), key=lambda x: (round(x[0], 8), x[1]))


def assert_round_trip(atoms, est, atol_deg=1e-6, rtol_c=1e-8):
    truth = identifiable(atoms)
    assert est.k_hat == len(truth)
    npt.assert_allclose(est.pairs, [(a, b) for a, b, _ in truth], rtol=0, atol=atol_deg)
    npt.assert_allclose(est.powers, [c for *_, c in truth], rtol=rtol_c)


def test_rank_of_zero_matrix():
    assert estimate_rank(TwoLevelToeplitz.zeros(5, 5)) == 0


def test_rank_two_atoms():
    assert estimate_rank(from_atoms([(10.0, 20.0, 1.0), (50.0, 70.0, 0.5)], 5, 5), tau=1e-6) == 2


def test_rank_tau_domain():
    with pytest.raises(DomainError):
        estimate_rank(TwoLevelToeplitz.zeros(2, 2), tau=1.0)


def test_single_atom_exact():
    atoms = [(-37.0, 61.5, 2.25)]
    dec = decompose(from_atoms(atoms, 5, 5), 1)
    npt.assert_allclose(dec.alpha, [37.0], atol=1e-9)
    npt.assert_allclose(dec.beta, [61.5], atol=1e-9)
    npt.assert_allclose(dec.coeffs, [2.25], rtol=1e-9)
    assert not dec.used_fallback


def test_three_atoms_round_trip():
    atoms = [(-20.0, 40.0, 1.0), (35.0, -75.0, 0.7), (60.0, 10.0, 2.0)]
    assert_round_trip(atoms, retrieve(from_atoms(atoms, 5, 5), tau=1e-6))


def test_shared_alpha_uses_fallback():
    atoms = [(30.0, 20.0, 1.0), (30.0, 55.0, 1.5)]
    t = from_atoms(atoms, 5, 5)
    assert decompose(t, 2).used_fallback
    assert_round_trip(atoms, retrieve(t, tau=1e-6))


def test_shared_beta_pairs_directly():
    atoms = [(15.0, 40.0, 1.0), (70.0, 40.0, 1.0)]
    assert_round_trip(atoms, retrieve(from_atoms(atoms, 5, 5), tau=1e-6))


def test_rectangular_levels():
    atoms = [(25.0, 65.0, 1.0), (50.0, 30.0, 0.4)]
    assert_round_trip(atoms, retrieve(from_atoms(atoms, 4, 6), tau=1e-6))


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3), st.booleans())
@settings(max_examples=60, deadline=None)
def test_round_trip_property(seed, k, shared):
    atoms = random_atom_set(np.random.default_rng(seed), k, shared_alpha=shared and k >= 2)
    assert_round_trip(atoms, retrieve(from_atoms(atoms, 5, 5), tau=1e-6))


@given(st.integers(0, 2 ** 32 - 1), st.permutations(range(3)))
@settings(max_examples=30, deadline=None)
def test_permutation_invariance(seed, perm):
    atoms = random_atom_set(np.random.default_rng(seed), 3)
    a = retrieve(from_atoms(atoms, 5, 5), tau=1e-6)
    b = retrieve(from_atoms([atoms[i] for i in perm], 5, 5), tau=1e-6)
    npt.assert_allclose(a.pairs, b.pairs, atol=1e-9)
    npt.assert_allclose(a.powers, b.powers, rtol=1e-9)


def test_reconstruction_within_residual():
    atoms = [(-20.0, 40.0, 1.0), (35.0, -75.0, 0.7)]
    t = from_atoms(atoms, 5, 5)
    dec = decompose(t, 2)
    assert (dec.coeffs >= 0).all()
    err = np.linalg.norm(dec.reconstruct(5, 5).gen - t.gen) / np.linalg.norm(t.gen)
    assert err <= dec.residual + 1e-12 and err < 1e-10


def test_capacity_error():
    t = TwoLevelToeplitz.zeros(2, 2)
    assert shift_capacity(2, 2) == 2
    with pytest.raises(DomainError):
        decompose(t, 3)


def test_zero_matrix_empty_estimate():
    est = retrieve(TwoLevelToeplitz.zeros(5, 5))
    assert est.k_hat == 0 and est.pairs == [] and est.powers == []


def test_sign_is_not_identifiable():
    a = from_atoms([(-25.0, -35.0, 1.0)], 5, 5)
    b = from_atoms([(25.0, 35.0, 1.0)], 5, 5)
    npt.assert_allclose(a.gen, b.gen, atol=1e-14)
    npt.assert_allclose(canonical_angle([-25.0, 30.0, -90.0]), [25.0, 30.0, 90.0], atol=1e-12)


def test_wrap_cosine():
    npt.assert_allclose(wrap_cosine([0.3, -0.3, 1.0, -1.0, 1.2]), [0.3, -0.3, 1.0, 1.0, 1.0])
    npt.assert_allclose(wrap_cosine(-0.6), 1.0)                 # aliased to 1.4, clipped


def test_physical_angles_and_infeasible_flag():
    est = retrieve(from_atoms([(80.0, 80.0, 1.0), (10.0, 20.0, 1.0)], 5, 5), tau=1e-6)
    by_alpha = dict(zip(est.alpha.round(6), est.physical))
    assert by_alpha[10.0] is None                   # cos^2 10 + cos^2 20 > 1
    theta, phi = by_alpha[80.0]
    assert np.isfinite(theta) and np.isfinite(phi)
    assert est.to_dict()["physical"][0] is None     # sorted by alpha: (10, 20) first


def test_noiseless_paper_instance():
    g = ArrayGeometry.uniform(5)
    src = SourceConfig((-25.0, 30.0), (-35.0, 0.0))
    est = retrieve(solve(SdpProblem.exact(g, vec(analytic_ccm(g, src)))).tlt)
    assert est.k_hat == 2
    npt.assert_allclose(est.pairs, [(25.0, 35.0), (30.0, 0.0)], atol=0.05)
    assert all(c > 0 for c in est.powers)
