"""Generalized Pauli operators, Bell bases, symplectic Cliffords and two-qubit gates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .linalg import TOL_EIG, ValidationError, kron, mat_exp

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA = (I2, X, Y, Z)


def _check_index(d: int, k: int, l: int) -> None:
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if not (0 <= k < d and 0 <= l < d):
        raise ValueError(f"indices ({k}, {l}) out of range for d={d}")


def gen_pauli(d: int, k: int, l: int) -> np.ndarray:
    """U_kl with U_kl|m> = exp(2 pi i k m / d) |m + l mod d>."""
    _check_index(d, k, l)
    u = np.zeros((d, d), dtype=complex)
    for m in range(d):
        u[(m + l) % d, m] = np.exp(2j * np.pi * k * m / d)
    return u


def max_entangled(d: int) -> np.ndarray:
    """|Phi> = sum_m |mm> / sqrt(d)."""
    return np.eye(d, dtype=complex).reshape(d * d) / np.sqrt(d)


def bell_state(d: int, k: int, l: int) -> np.ndarray:
    """|psi_kl> = (U_kl (x) 1)|Phi>; the Pauli acts on the first (output) factor."""
    _check_index(d, k, l)
    return kron(gen_pauli(d, k, l), np.eye(d)) @ max_entangled(d)


def bell_basis(d: int) -> np.ndarray:
    """Columns are |psi_kl> in the order (k, l) = (0,0), (0,1), ..."""
    return np.column_stack([bell_state(d, k, l) for k in range(d) for l in range(d)])


def qubit_bell_state(j: int) -> np.ndarray:
    """|psi_j> = (sigma_j (x) 1)|Phi> for j = 0..3."""
    return kron(SIGMA[j], I2) @ max_entangled(2)


@dataclass(frozen=True)
class SymplecticMap:
    """2x2 matrix [[a, b], [c, e]] over Z_d with determinant 1.

    The Clifford Q attached to it satisfies Q U_10 Q^dag ~ U_(a,c) and
    Q U_01 Q^dag ~ U_(b,e).
    """

    d: int
    a: int
    b: int
    c: int
    e: int

    def __post_init__(self):
        if (self.a * self.e - self.b * self.c) % self.d != 1 % self.d:
            raise ValidationError("map is not symplectic (det != 1 mod d)")

    def act(self, k: int, l: int) -> tuple[int, int]:
        return (self.a * k + self.b * l) % self.d, (self.c * k + self.e * l) % self.d


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % p for p in range(2, int(n**0.5) + 1))


def symplectic_maps(d: int) -> list[SymplecticMap]:
    """All determinant-one 2x2 matrices over Z_d (lexicographic in a, b, c, e)."""
    return [
        SymplecticMap(d, a, b, c, e)
        for a, b, c, e in itertools.product(range(d), repeat=4)
        if (a * e - b * c) % d == 1 % d
    ]


def _phase_normalized(p: np.ndarray, d: int) -> np.ndarray:
    """Rescale a Pauli so that its d-th power is the identity."""
    mu = np.linalg.matrix_power(p, d)[0, 0]
    return p * mu ** (-1.0 / d)


def _clifford_for(s: SymplecticMap) -> np.ndarray:
    d = s.d
    zp = _phase_normalized(gen_pauli(d, s.a, s.c), d)
    xp = _phase_normalized(gen_pauli(d, s.b, s.e), d)
    w, v = np.linalg.eig(zp)
    zero = v[:, np.argmin(np.abs(w - 1))]
    zero = zero / np.linalg.norm(zero)
    cols = [zero]
    for _ in range(d - 1):
        cols.append(xp @ cols[-1])
    q = np.column_stack(cols)
    first = q[:, 0][np.argmax(np.abs(q[:, 0]) > 1e-12)]
    return q * (abs(first) / first)


def clifford_group(d: int) -> list[tuple[SymplecticMap, np.ndarray]]:
    """One Clifford unitary per symplectic map over Z_d, for prime d <= 5.

    Each Q is built by mapping the computational basis onto the eigenbasis
    of the image of U_10, stepping with the image of U_01.
    """
    if not _is_prime(d) or d > 5:
        raise ValueError(f"Clifford enumeration needs a prime d <= 5, got {d}")
    out = []
    for s in symplectic_maps(d):
        q = _clifford_for(s)
        for k, l in ((1, 0), (0, 1)):
            image = q @ gen_pauli(d, k, l) @ q.conj().T
            target = gen_pauli(d, *s.act(k, l))
            ratio = np.vdot(target, image) / d
            if not (abs(abs(ratio) - 1) < TOL_EIG and np.allclose(image, ratio * target, atol=TOL_EIG)):
                raise RuntimeError(f"Clifford construction failed for {s}")
        out.append((s, q))
    return out


@dataclass(frozen=True)
class TwoQubitGate:
    kind: str
    matrix: np.ndarray
    alpha: float | None = None


SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

# Local unitaries relating CNOT to the phase gate at pi/4.
CNOT_U1 = np.array([[1, -1j], [-1, -1j]], dtype=complex) / np.sqrt(2)
CNOT_U2 = np.diag([1, -1j]).astype(complex)
CNOT_V1 = np.array([[1, 1j], [1j, 1]], dtype=complex) / np.sqrt(2)
CNOT_V2 = np.array([[1, 1j], [-1, 1j]], dtype=complex) / np.sqrt(2)


def phase_gate(alpha: float) -> np.ndarray:
    """U(alpha) = exp(-i alpha sigma_y (x) sigma_y)."""
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    return np.cos(alpha) * np.eye(4) - 1j * np.sin(alpha) * kron(Y, Y)


def cnot_via_phase_gate() -> np.ndarray:
    return kron(CNOT_U1, CNOT_U2) @ phase_gate(np.pi / 4) @ kron(CNOT_V1, CNOT_V2)


def gate(kind: str, alpha: float | None = None) -> TwoQubitGate:
    """Build SWAP, CNOT or PHASE(alpha)."""
    kind = kind.upper()
    if kind == "SWAP":
        return TwoQubitGate("SWAP", SWAP.copy())
    if kind == "CNOT":
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = m[1, 1] = m[2, 3] = m[3, 2] = 1
        return TwoQubitGate("CNOT", m)
    if kind == "PHASE":
        if alpha is None:
            raise ValueError("PHASE gate needs alpha")
        return TwoQubitGate("PHASE", phase_gate(alpha), float(alpha))
    raise ValueError(f"unknown gate {kind!r}")


def pauli_exp(sigma: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i angle sigma)."""
    return mat_exp(-1j * angle * sigma)
