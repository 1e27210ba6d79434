import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distctl import linmath as lm
from distctl.errors import InvalidInputError


def test_rank_of_known_matrices():
    assert lm.numerical_rank(np.eye(3)).rank == 3
    assert lm.numerical_rank(np.ones((3, 3))).rank == 1
    assert lm.numerical_rank(np.zeros((2, 4))).rank == 0
    assert lm.numerical_rank(np.zeros((0, 3))).rank == 0


def test_rank_tolerances_absolute_and_relative():
    M = np.diag([1.0, 1e-6])
    assert lm.numerical_rank(M, tol=1e-5).rank == 1
    assert lm.numerical_rank(M, rtol=1e-9).rank == 2
    assert lm.numerical_rank(M, rtol=1e-5).rank == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 6), st.integers(0, 10_000))
def test_rank_of_product_of_factors(rows, cols, k, seed):
    rng = np.random.default_rng(seed)
    k = min(k, rows, cols)
    M = rng.standard_normal((rows, k)) @ rng.standard_normal((k, cols))
    assert lm.numerical_rank(M).rank == k


def test_distinct_eigenvalues_cluster_jordan_block():
    J = np.array([[2.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 2.0]])
    ev = lm.distinct_eigenvalues(J)
    assert len(ev) == 1 and abs(ev[0] - 2.0) < 1e-9


def test_spectrum_real_input_gives_exact_conjugates():
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    ev = sorted(lm.spectrum(R), key=lambda z: z.imag)
    assert ev[0] == np.conj(ev[1])


def test_pbh_controllability_and_observability():
    A = np.diag([1.0, 2.0])
    assert lm.pbh_controllable(A, np.array([[1.0], [1.0]]))
    assert not lm.pbh_controllable(A, np.array([[1.0], [0.0]]))
    assert lm.pbh_observable(np.array([[1.0, 1.0]]), A)
    assert not lm.pbh_observable(np.array([[0.0, 1.0]]), A)


def test_controllability_and_observability_indices():
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    b = np.array([[0.0], [0.0], [1.0]])
    assert lm.controllability_index(A, b) == 3
    assert lm.controllability_index(A, np.eye(3)) == 1
    assert lm.observability_index(b.T[:, ::-1], A) == 3


def test_block_diag_and_kron_shapes():
    D = lm.block_diag(np.ones((1, 2)), np.zeros((0, 0)), np.eye(2))
    assert D.shape == (3, 4)
    assert lm.kron(np.eye(2), np.ones((1, 3))).shape == (2, 6)


def test_match_spectra_pairs_optimally():
    err, matched = lm.match_spectra([3.0, 1.0 + 1e-9, 2.0], [1.0, 2.0, 3.0])
    assert err < 1e-8
    assert np.allclose(matched, [1.0, 2.0, 3.0])
    with pytest.raises(InvalidInputError):
        lm.match_spectra([1.0], [1.0, 2.0])


def test_spectral_abscissa_and_radius():
    M = np.diag([-1.0, 0.5])
    assert lm.spectral_abscissa(M) == pytest.approx(0.5)
    assert lm.spectral_radius(M) == pytest.approx(1.0)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        lm.as_matrix([[np.nan]])
    with pytest.raises(InvalidInputError):
        lm.as_matrix(np.zeros((2, 2, 2)))
