import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_hermitian, random_unitary
from noiseforms.linalg import (
    DimensionError,
    ValidationError,
    herm_eig,
    kron,
    mat_exp,
    partial_trace,
    partial_transpose,
)
from noiseforms.pauli import X, Y, Z, max_entangled, phase_gate

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_kron_of_paulis_is_antidiagonal():
    assert np.array_equal(kron(X, X), np.fliplr(np.eye(4)))
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))


@given(seeds)
def test_kron_mixed_product(seed):
    rng = np.random.default_rng(seed)
    a, b, c, d = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4))
    assert np.max(np.abs(kron(a, b) @ kron(c, d) - kron(a @ c, b @ d))) < 1e-12
    assert np.max(np.abs(kron(kron(a, b), c) - kron(a, kron(b, c)))) < 1e-12


def test_partial_trace_of_bell_projector():
    phi = max_entangled(2)
    assert np.allclose(partial_trace(np.outer(phi, phi.conj()), (2, 2), [0]), np.eye(2) / 2)


@given(seeds)
def test_partial_trace_matches_index_sum(seed):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, 6)
    t = m.reshape(2, 3, 2, 3)
    keep_first = np.array([[sum(t[i, k, j, k] for k in range(3)) for j in range(2)] for i in range(2)])
    keep_second = np.array([[sum(t[k, i, k, j] for k in range(2)) for j in range(3)] for i in range(3)])
    assert np.allclose(partial_trace(m, (2, 3), [0]), keep_first)
    assert np.allclose(partial_trace(m, (2, 3), [1]), keep_second)
    assert np.isclose(np.trace(partial_trace(m, (2, 3), [1])), np.trace(m))


@given(seeds)
def test_partial_traces_of_disjoint_subsystems_commute(seed):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, 8)
    one = partial_trace(partial_trace(m, (2, 2, 2), [0, 1]), (2, 2), [1])
    other = partial_trace(partial_trace(m, (2, 2, 2), [1, 2]), (2, 2), [0])
    assert np.allclose(one, other)
    assert np.allclose(one, partial_trace(m, (2, 2, 2), [1]))


def test_partial_trace_rejects_bad_shape():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(4), (2, 3), [0])


@given(seeds)
def test_partial_transpose_is_involutive_and_local(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.allclose(partial_transpose(partial_transpose(m, (2, 2), 1), (2, 2), 1), m)
    a, b = m[:2, :2], m[2:, 2:]
    assert np.allclose(partial_transpose(kron(a, b), (2, 2), 1), kron(a, b.T))


def test_partial_transpose_of_bell_projector_spectrum():
    phi = max_entangled(2)
    w, _ = herm_eig(partial_transpose(np.outer(phi, phi.conj()), (2, 2), 1))
    assert np.allclose(w, [0.5, 0.5, 0.5, -0.5])


def test_partial_transpose_rejects_bad_subsystem():
    with pytest.raises(DimensionError):
        partial_transpose(np.eye(4), (2, 2), 2)


def test_herm_eig_known_spectra():
    assert np.allclose(herm_eig(Z)[0], [1, -1])
    phi = max_entangled(2)
    assert np.allclose(herm_eig(np.outer(phi, phi.conj()))[0], [1, 0, 0, 0])


@settings(max_examples=50)
@given(seeds, st.integers(min_value=1, max_value=16))
def test_herm_eig_reconstructs(seed, d):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, d)
    m = 10 * m / max(np.linalg.norm(m, 2), 1e-12)
    w, v = herm_eig(m)
    assert np.all(np.diff(w) <= 0)
    assert np.linalg.norm(m - v @ np.diag(w) @ v.conj().T, 2) < 1e-10
    assert np.max(np.abs(v.conj().T @ v - np.eye(d))) < 1e-10


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        herm_eig(np.array([[0, 1], [0, 0]]))


def test_mat_exp_zero_and_phase_gate():
    assert np.allclose(mat_exp(np.zeros((4, 4))), np.eye(4))
    assert np.max(np.abs(mat_exp(-1j * np.pi / 4 * kron(Y, Y)) - phase_gate(np.pi / 4))) < 1e-12


@given(seeds)
def test_mat_exp_inverse_and_unitarity(seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, 8)
    u = mat_exp(-1j * h)
    assert np.max(np.abs(u.conj().T @ u - np.eye(8))) < 1e-10
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    a = a - a.conj().T
    assert np.max(np.abs(mat_exp(a) @ mat_exp(-a) - np.eye(8))) < 1e-10


def test_mat_exp_matches_eigendecomposition():
    rng = np.random.default_rng(3)
    h = random_hermitian(rng, 5)
    w, v = herm_eig(h)
    assert np.allclose(mat_exp(-0.7j * h), v @ np.diag(np.exp(-0.7j * w)) @ v.conj().T)
    u = random_unitary(rng, 3)
    assert np.allclose(mat_exp(u @ np.diag([1, 2, 3]) @ u.conj().T), u @ np.diag(np.exp([1, 2, 3])) @ u.conj().T)
