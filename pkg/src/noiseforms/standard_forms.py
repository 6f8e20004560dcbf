"""Standard-form parameters of twirled Choi states.

Two-qubit gate forms are read in the Bell-product basis |Psi_ij> =
|psi_i>^{A'A}|psi_j>^{B'B}, ordered block by block (see ``BASIS_ORDERING``):
block (m, n) collects the labels ij with i mod 2 = m and j mod 2 = n.
Gate forms store the fidelity f with the target gate together with the
entries of the normalized noise part (E - f P_target)/(1 - f).
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .channel import ChoiState, choi_of_unitary, jamiolkowski_fidelity, unitary_choi_vector
from .linalg import TOL_FORM, ValidationError, kron
from .pauli import SWAP, bell_state, max_entangled, phase_gate

BASIS_ORDERING: tuple[tuple[int, int], ...] = (
    (0, 0), (0, 2), (2, 0), (2, 2),
    (0, 1), (0, 3), (2, 1), (2, 3),
    (1, 0), (3, 0), (1, 2), (3, 2),
    (1, 1), (1, 3), (3, 1), (3, 3),
)
BASIS_LABELS = tuple(f"{i}{j}" for i, j in BASIS_ORDERING)
_NOISE_FLOOR = 1e-14


class PatternError(ValidationError):
    """A Choi state is not of the requested standard form."""

    def __init__(self, message: str, offending: Sequence[tuple[str, str, complex]] = ()):
        super().__init__(message)
        self.offending = list(offending)

    def report(self) -> dict:
        return {
            "error": "pattern",
            "message": str(self),
            "offending": [
                {"row": r, "col": c, "re": float(np.real(v)), "im": float(np.imag(v))} for r, c, v in self.offending
            ],
        }


def pairs_to_native(op: np.ndarray, pairs: Sequence[tuple[int, int]], dims: Sequence[int]) -> np.ndarray:
    """Reorder an operator given on (out_p1, in_p1, out_p2, in_p2, ...) to (outs..., ins...).

    ``pairs`` lists (output factor, input factor) for each pair.
    """
    n = len(pairs)
    native_pos = [p for o, i in pairs for p in (o, n + i)]
    pair_dims = [dims[p] for p in native_pos]
    t = op.reshape(pair_dims + pair_dims)
    order = np.argsort(native_pos)
    t = t.transpose(list(order) + [2 * n + k for k in order])
    dim = int(np.prod(dims))
    return t.reshape(dim, dim)


def _vector_to_native(v: np.ndarray, pairs, dims) -> np.ndarray:
    n = len(pairs)
    native_pos = [p for o, i in pairs for p in (o, n + i)]
    t = v.reshape([dims[p] for p in native_pos]).transpose(np.argsort(native_pos))
    return t.reshape(-1)


def identity_pairs(parties: int) -> list[tuple[int, int]]:
    return [(k, k) for k in range(parties)]


SWAP_PAIRS = [(1, 0), (0, 1)]  # (B', A) and (A', B)


def bell_product_basis(d: int, parties: int, pairs=None) -> tuple[np.ndarray, list[tuple]]:
    """Columns |psi_k1l1> ... |psi_kNlN> in native ordering, with their index labels."""
    pairs = identity_pairs(parties) if pairs is None else pairs
    labels = list(itertools.product(itertools.product(range(d), repeat=2), repeat=parties))
    dims = [d] * (2 * parties)
    cols = [_vector_to_native(kron(*[bell_state(d, k, l) for k, l in lab]), pairs, dims) for lab in labels]
    return np.column_stack(cols), labels


def gate_basis() -> np.ndarray:
    """Two-qubit Bell-product basis in ``BASIS_ORDERING`` (columns, native ordering)."""
    from .pauli import qubit_bell_state

    cols = [np.einsum("ac,bd->abcd", qubit_bell_state(i).reshape(2, 2), qubit_bell_state(j).reshape(2, 2))
            .reshape(16) for i, j in BASIS_ORDERING]
    return np.column_stack(cols)


def in_gate_basis(e: ChoiState) -> np.ndarray:
    if e.shape != (2, 2, 2, 2):
        raise ValidationError("gate forms need a two-qubit channel")
    b = gate_basis()
    return b.conj().T @ e.matrix @ b


def _check_residual(actual: np.ndarray, expected: np.ndarray, labels, what: str, tol: float) -> None:
    diff = actual - expected
    bad = np.argwhere(np.abs(diff) > tol)
    if bad.size:
        offending = [(labels[r], labels[c], actual[r, c]) for r, c in bad[:32]]
        raise PatternError(f"not in {what} form (max deviation {np.max(np.abs(diff)):.3e})", offending)


# Pauli channels ---------------------------------------------------------------


@dataclass(frozen=True)
class PauliChannelForm:
    d: int
    parties: int
    weights: tuple[float, ...]
    labels: tuple[tuple, ...]

    def to_choi(self) -> ChoiState:
        basis, _ = bell_product_basis(self.d, self.parties)
        m = basis @ np.diag(np.asarray(self.weights, dtype=complex)) @ basis.conj().T
        dims = (self.d,) * self.parties
        return ChoiState(m, dims, dims)

    def to_dict(self) -> dict:
        return {
            "form": "pauli",
            "d": self.d,
            "parties": self.parties,
            "basis_ordering": ["".join(f"{k}{l}" for k, l in lab) for lab in self.labels],
            "weights": list(self.weights),
        }


def _uniform_dims(e: ChoiState) -> int:
    dims = set(e.in_dims) | set(e.out_dims)
    if len(dims) != 1 or e.in_dims != e.out_dims:
        raise ValidationError("standard forms need equal dimensions on every party")
    return dims.pop()


def extract_pauli_channel(e: ChoiState, tol: float = TOL_FORM) -> PauliChannelForm:
    """Weights of a channel diagonal in the generalized Bell-product basis."""
    d = _uniform_dims(e)
    basis, labels = bell_product_basis(d, e.parties)
    m = basis.conj().T @ e.matrix @ basis
    diag = np.real(np.diag(m))
    names = ["".join(f"{k}{l}" for k, l in lab) for lab in labels]
    _check_residual(m, np.diag(diag), names, "Pauli-channel", tol)
    return PauliChannelForm(d, e.parties, tuple(float(x) for x in diag), tuple(labels))


# White noise ------------------------------------------------------------------


@dataclass(frozen=True)
class WhiteNoiseForm:
    """Channel sum_k alpha_k (x)_i N_{k_i} with N_0 = identity, N_1 = full depolarizer."""

    d: int
    parties: int
    alphas: dict[tuple[int, ...], float]
    pairs: tuple[tuple[int, int], ...] = field(default=())

    def to_choi(self) -> ChoiState:
        pairs = self.pairs or tuple(identity_pairs(self.parties))
        phi = max_entangled(self.d)
        local = [np.outer(phi, phi.conj()), np.eye(self.d**2) / self.d**2]
        dims = [self.d] * (2 * self.parties)
        m = sum(a * pairs_to_native(kron(*[local[k] for k in bits]), pairs, dims) for bits, a in self.alphas.items())
        return ChoiState(m, (self.d,) * self.parties, (self.d,) * self.parties)

    def to_dict(self) -> dict:
        return {
            "form": "white-noise",
            "d": self.d,
            "parties": self.parties,
            "basis_ordering": ["".join(map(str, k)) for k in self.alphas],
            "alphas": list(self.alphas.values()),
        }


def isotropic_duals(d: int) -> tuple[np.ndarray, np.ndarray]:
    """delta_0 = P_Phi - gamma and delta_1 = d^2 gamma, gamma = (1 - P_Phi)/(d^2 - 1)."""
    phi = max_entangled(d)
    p = np.outer(phi, phi.conj())
    gamma = (np.eye(d * d) - p) / (d * d - 1)
    return p - gamma, d * d * gamma


def white_noise_coefficients(e: ChoiState, pairs=None) -> dict[tuple[int, ...], float]:
    d = _uniform_dims(e)
    pairs = identity_pairs(e.parties) if pairs is None else pairs
    duals = isotropic_duals(d)
    dims = [d] * (2 * e.parties)
    out = {}
    for bits in itertools.product((0, 1), repeat=e.parties):
        delta = pairs_to_native(kron(*[duals[k] for k in bits]), pairs, dims)
        out[bits] = float(np.real(np.trace(delta @ e.matrix)))
    return out


def extract_white_noise(e: ChoiState, pairs=None, tol: float = TOL_FORM) -> WhiteNoiseForm:
    """alpha_k = tr[delta_k E]; fails if E is outside the isotropic product span."""
    d = _uniform_dims(e)
    pairs = tuple(identity_pairs(e.parties) if pairs is None else pairs)
    form = WhiteNoiseForm(d, e.parties, white_noise_coefficients(e, pairs), pairs)
    labels = [str(i) for i in range(e.matrix.shape[0])]
    _check_residual(e.matrix, form.to_choi().matrix, labels, "white-noise", tol)
    return form


# Gate forms -------------------------------------------------------------------


def _noise_part(e: ChoiState, u: np.ndarray) -> tuple[float, np.ndarray]:
    f = jamiolkowski_fidelity(e, u)
    v = unitary_choi_vector(u)
    if 1 - f < _NOISE_FLOOR:
        return f, np.zeros((16, 16), dtype=complex)
    b = gate_basis()
    return f, b.conj().T @ (e.matrix - f * np.outer(v, v.conj())) @ b / (1 - f)


def _total_from_noise(f: float, noise_b: np.ndarray, u: np.ndarray) -> ChoiState:
    b = gate_basis()
    v = unitary_choi_vector(u)
    m = f * np.outer(v, v.conj()) + (1 - f) * (b @ noise_b @ b.conj().T)
    return ChoiState(m, (2, 2), (2, 2))


def _x_block(diag, anti, cross) -> np.ndarray:
    """4x4 block with the given diagonal, (0,3) entry ``anti`` and (1,2) entry ``cross``."""
    blk = np.diag(np.asarray(diag, dtype=complex))
    blk[0, 3], blk[3, 0] = anti, np.conj(anti)
    blk[1, 2], blk[2, 1] = cross, np.conj(cross)
    return blk


def _block_diag(blocks) -> np.ndarray:
    out = np.zeros((16, 16), dtype=complex)
    for k, blk in enumerate(blocks):
        out[4 * k:4 * k + 4, 4 * k:4 * k + 4] = blk
    return out


@dataclass(frozen=True)
class PhaseGateForm:
    """Noisy U(alpha) after the 32-element twirl: fidelity plus 17 noise parameters."""

    alpha: float
    f: float
    a: float
    a_t: float
    b: float
    b_t: float
    u: complex
    v: complex
    c: float
    c_t: float
    w: complex
    d: float
    d_t: float
    x: complex
    e: float
    e_t: float

    def noise_matrix(self) -> np.ndarray:
        return _block_diag([
            _x_block([self.a, self.b, self.b_t, self.a_t], self.u, self.v),
            _x_block([self.c, self.c, self.c_t, self.c_t], self.w, -self.w),
            _x_block([self.d, self.d, self.d_t, self.d_t], self.x, -self.x),
            _x_block([self.e] * 4, self.e_t, -self.e_t),
        ])

    def to_choi(self) -> ChoiState:
        return _total_from_noise(self.f, self.noise_matrix(), phase_gate(self.alpha))

    def to_dict(self) -> dict:
        out = {"form": "phase-gate", "basis_ordering": list(BASIS_LABELS)}
        for k, val in asdict(self).items():
            out[k] = {"re": val.real, "im": val.imag} if isinstance(val, complex) else val
        return out


def extract_phase_gate_form(e: ChoiState, alpha: float, tol: float = TOL_FORM) -> PhaseGateForm:
    target = phase_gate(alpha)
    f, n = _noise_part(e, target)
    d = [float(x) for x in np.real(np.diag(n))]
    form = PhaseGateForm(
        alpha=float(alpha),
        f=f,
        a=d[0], a_t=d[3], b=d[1], b_t=d[2], u=complex(n[0, 3]), v=complex(n[1, 2]),
        c=(d[4] + d[5]) / 2, c_t=(d[6] + d[7]) / 2, w=complex(n[4, 7] - n[5, 6]) / 2,
        d=(d[8] + d[9]) / 2, d_t=(d[10] + d[11]) / 2, x=complex(n[8, 11] - n[9, 10]) / 2,
        e=sum(d[12:]) / 4, e_t=float(np.real(n[12, 15] - n[13, 14]) / 2),
    )
    _check_residual(in_gate_basis(e), in_gate_basis(form.to_choi()), BASIS_LABELS, "phase-gate", tol)
    return form


@dataclass(frozen=True)
class CnotForm:
    """Noisy U(pi/4) after the phase-gate twirl and its extension: 8 noise parameters."""

    f: float
    a: float
    b: float
    u: float
    v: float
    c: float
    w: float
    d: float
    x: float
    e: float

    def noise_matrix(self) -> np.ndarray:
        return _block_diag([
            _x_block([self.a, self.b, self.b, self.a], 1j * self.u, 1j * self.v),
            _x_block([self.c] * 4, self.w, -self.w),
            _x_block([self.d] * 4, self.x, -self.x),
            np.eye(4) * self.e,
        ])

    def to_choi(self) -> ChoiState:
        return _total_from_noise(self.f, self.noise_matrix(), phase_gate(np.pi / 4))

    def to_dict(self) -> dict:
        return {"form": "cnot", "basis_ordering": list(BASIS_LABELS), **asdict(self)}


def extract_cnot_form(e: ChoiState, tol: float = TOL_FORM) -> CnotForm:
    f, n = _noise_part(e, phase_gate(np.pi / 4))
    d = [float(x) for x in np.real(np.diag(n))]
    form = CnotForm(
        f=f,
        a=(d[0] + d[3]) / 2, b=(d[1] + d[2]) / 2,
        u=float(np.imag(n[0, 3])), v=float(np.imag(n[1, 2])),
        c=sum(d[4:8]) / 4, w=float(np.real(n[4, 7] - n[5, 6]) / 2),
        d=sum(d[8:12]) / 4, x=float(np.real(n[8, 11] - n[9, 10]) / 2),
        e=sum(d[12:]) / 4,
    )
    _check_residual(in_gate_basis(e), in_gate_basis(form.to_choi()), BASIS_LABELS, "CNOT", tol)
    return form


@dataclass(frozen=True)
class SwapForm:
    """SWAP followed by local/global white noise; alphas in the (A,B'),(B,A') pairing."""

    f: float
    alphas: dict[tuple[int, int], float]

    def to_choi(self) -> ChoiState:
        return WhiteNoiseForm(2, 2, self.alphas, tuple(SWAP_PAIRS)).to_choi()

    def noise_map(self, rho: np.ndarray) -> np.ndarray:
        """The white-noise map D with channel(rho) = SWAP D(rho) SWAP^dag."""
        from .linalg import partial_trace

        i2 = np.eye(2) / 2
        return (
            self.alphas[(0, 0)] * rho
            + self.alphas[(0, 1)] * kron(partial_trace(rho, (2, 2), [0]), i2)
            + self.alphas[(1, 0)] * kron(i2, partial_trace(rho, (2, 2), [1]))
            + self.alphas[(1, 1)] * np.trace(rho) * np.eye(4) / 4
        )

    def to_dict(self) -> dict:
        return {
            "form": "swap",
            "f": self.f,
            "basis_ordering": ["".join(map(str, k)) for k in self.alphas],
            "alphas": list(self.alphas.values()),
        }


def extract_swap_form(e: ChoiState, tol: float = TOL_FORM) -> SwapForm:
    noise = extract_white_noise(e, SWAP_PAIRS, tol)
    return SwapForm(jamiolkowski_fidelity(e, SWAP), noise.alphas)


def noiseless_form(kind: str, alpha: float | None = None):
    """Forms of the ideal gates (used for sanity checks and CLI examples)."""
    if kind == "phase":
        return extract_phase_gate_form(choi_of_unitary(phase_gate(alpha), (2, 2)), alpha)
    if kind == "cnot":
        return extract_cnot_form(choi_of_unitary(phase_gate(np.pi / 4), (2, 2)))
    if kind == "swap":
        return extract_swap_form(choi_of_unitary(SWAP, (2, 2)))
    raise ValueError(kind)
