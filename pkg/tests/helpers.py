"""Random inputs shared by the test modules."""

import numpy as np

from noiseforms.channel import ChoiState, choi_from_kraus, choi_of_unitary
from noiseforms.lindblad import LindbladGenerator


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_kraus(rng, d_in, d_out=None, rank=3):
    d_out = d_in if d_out is None else d_out
    g = rng.normal(size=(rank * d_out, d_in)) + 1j * rng.normal(size=(rank * d_out, d_in))
    q, _ = np.linalg.qr(g)
    return [q[k * d_out:(k + 1) * d_out] for k in range(rank)]


def random_channel(rng, dims, rank=3) -> ChoiState:
    dims = tuple(dims)
    return choi_from_kraus(random_kraus(rng, int(np.prod(dims)), rank=rank), dims)


def random_density(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng, d, scale=1.0):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (g + g.conj().T) / 2


def matrix_unit(d, j, l):
    m = np.zeros((d, d), dtype=complex)
    m[j, l] = 1
    return m


def kraus_action(kraus, rho):
    return sum(k @ rho @ k.conj().T for k in kraus)


def noisy_unitary(rng, u, infidelity, rank=4) -> ChoiState:
    """(1 - w) ideal + w random channel on two qubits."""
    ideal = choi_of_unitary(u, (2, 2))
    noise = random_channel(rng, (2, 2), rank)
    return ideal.with_matrix((1 - infidelity) * ideal.matrix + infidelity * noise.matrix)


def random_generator(rng, qubits, h=None, gks_scale=1.0, lamb_scale=1.0) -> LindbladGenerator:
    d, size = 2**qubits, 4**qubits - 1
    g = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
    gks = gks_scale * g @ g.conj().T / size
    hl = random_hermitian(rng, d, lamb_scale)
    return LindbladGenerator(np.zeros((d, d)) if h is None else h, hl, gks)
