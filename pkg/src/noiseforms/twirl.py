"""Exact twirls of Choi states over finite sets of local unitaries.

An element (p, pre, post) contributes p * post channel(pre rho pre^dag) post^dag.
On the Choi state this is conjugation by post (x) pre^T, i.e. U on the
outputs and U^* on the inputs when pre = U^dag and post = U.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import ChoiState, unitary_choi_vector
from .linalg import TOL_EIG, DimensionError, ValidationError, as_matrix, kron
from .pauli import I2, SIGMA, X, Y, Z, clifford_group, gen_pauli, pauli_exp, phase_gate


@dataclass(frozen=True, eq=False)
class TwirlElement:
    probability: float
    pre: np.ndarray
    post: np.ndarray

    def __post_init__(self):
        for name in ("pre", "post"):
            u = as_matrix(getattr(self, name))
            if u.shape[0] != u.shape[1] or np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > TOL_EIG:
                raise ValidationError(f"{name} operator is not unitary")
            object.__setattr__(self, name, u)
        if not 0 < self.probability <= 1 + 1e-12:
            raise ValidationError(f"probability {self.probability} outside (0, 1]")

    @property
    def state_operator(self) -> np.ndarray:
        """post (x) pre^T, the action on the Choi state."""
        return kron(self.post, self.pre.T)

    @classmethod
    def conjugation(cls, p: float, u) -> "TwirlElement":
        """U^dag before the channel and U after it."""
        u = as_matrix(u)
        return cls(p, u.conj().T, u)


def stabilizes(element: TwirlElement, u, tol: float = TOL_EIG) -> bool:
    """Whether the element maps |Psi_U> to itself up to a global phase."""
    v = unitary_choi_vector(u)
    w = element.state_operator @ v
    return abs(abs(np.vdot(v, w)) - 1) <= tol and np.linalg.norm(w - np.vdot(v, w) * v) <= tol


@dataclass(frozen=True, eq=False)
class TwirlSet:
    elements: tuple[TwirlElement, ...]
    label: str
    preserves: np.ndarray | None = field(default=None)

    def __post_init__(self):
        els = tuple(self.elements)
        if not els:
            raise ValidationError("twirl set is empty")
        total = sum(e.probability for e in els)
        if abs(total - 1) > 1e-12:
            raise ValidationError(f"probabilities sum to {total}, not 1")
        dims = {(e.pre.shape[0], e.post.shape[0]) for e in els}
        if len(dims) != 1:
            raise DimensionError("elements act on different dimensions")
        object.__setattr__(self, "elements", els)
        if self.preserves is not None:
            u = as_matrix(self.preserves)
            object.__setattr__(self, "preserves", u)
            bad = [i for i, e in enumerate(els) if not stabilizes(e, u)]
            if bad:
                raise ValidationError(f"{self.label}: elements {bad} do not stabilize the target gate")

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def dims(self) -> tuple[int, int]:
        """(input dimension, output dimension)."""
        e = self.elements[0]
        return e.pre.shape[0], e.post.shape[0]


def twirl(e: ChoiState, s: TwirlSet) -> ChoiState:
    """Probability-weighted average of the conjugated Choi states."""
    if s.dims != (e.d_in, e.d_out):
        raise DimensionError(f"twirl set acts on {s.dims}, channel is ({e.d_in}, {e.d_out})")
    ops = np.stack([el.state_operator for el in s.elements])
    probs = np.array([el.probability for el in s.elements])
    out = np.einsum("k,kab,bc,kdc->ad", probs, ops, e.matrix, ops.conj(), optimize=True)
    return e.with_matrix(out)


def product_set(per_party: Sequence[Sequence[tuple[float, np.ndarray]]], label: str, preserves=None) -> TwirlSet:
    """Correlation-free product of per-party conjugation sets."""
    elements = []
    for combo in itertools.product(*per_party):
        p = float(np.prod([c[0] for c in combo]))
        elements.append(TwirlElement.conjugation(p, kron(*[c[1] for c in combo])))
    return TwirlSet(tuple(elements), label, preserves)


def compose(first: TwirlSet, second: TwirlSet, label: str | None = None, preserves=None) -> TwirlSet:
    """Single set equivalent to twirling with ``first`` and then ``second``."""
    elements = [
        TwirlElement(a.probability * b.probability, a.pre @ b.pre, b.post @ a.post)
        for a in first.elements
        for b in second.elements
    ]
    return TwirlSet(tuple(elements), label or f"{first.label}+{second.label}", preserves)


def _pauli_unitaries(d: int) -> list[np.ndarray]:
    return [gen_pauli(d, k, l) for k in range(d) for l in range(d)]


def pauli_set(d: int, parties: int = 1) -> TwirlSet:
    """Uniform average over U_kl on every party independently."""
    if d < 2 or parties < 1:
        raise ValueError("need d >= 2 and at least one party")
    paulis = _pauli_unitaries(d)
    local = [(1 / len(paulis), u) for u in paulis]
    return product_set([local] * parties, "pauli", np.eye(d**parties))


def depolarizing_unitaries(d: int) -> list[np.ndarray]:
    """Local unitaries whose U (x) U^* average maps any state to the isotropic family.

    Qubits use the 12 products Q_k sigma_i with Q_k = exp(i pi/4 sigma_k);
    odd primes use every Clifford times every Pauli.
    """
    if d == 2:
        qs = [pauli_exp(s, -np.pi / 4) for s in (X, Y, Z)]
        return [q @ s for q in qs for s in SIGMA]
    return [q @ p for _, q in clifford_group(d) for p in _pauli_unitaries(d)]


def depolarizing_set(d: int, parties: int = 1) -> TwirlSet:
    units = depolarizing_unitaries(d)
    local = [(1 / len(units), u) for u in units]
    return product_set([local] * parties, "depolarizing", np.eye(d**parties))


def _phase_gate_unitaries() -> list[np.ndarray]:
    r = pauli_exp(Y, np.pi / 4)
    u1 = [np.eye(4), kron(r, I2), kron(I2, r), kron(r, r)]
    u2 = [np.eye(4), kron(X, X)]
    u3 = [np.eye(4), kron(Y, I2), kron(I2, Y), kron(Y, Y)]
    return [a @ b @ c for a in u1 for b in u2 for c in u3]


def phase_gate_set(alpha: float | None = None) -> TwirlSet:
    """The 32 local unitaries that stabilize U(alpha) for every alpha."""
    elements = tuple(TwirlElement.conjugation(1 / 32, u) for u in _phase_gate_unitaries())
    for a in (0.1, np.pi / 4, 1.0):
        TwirlSet(elements, "phase-gate", phase_gate(a))
    return TwirlSet(elements, "phase-gate", None if alpha is None else phase_gate(alpha))


def cnot_extension_set(preserves=None) -> TwirlSet:
    """{1, W_A W~_B}: i sigma_y after party A, sigma_z before and sigma_x after party B.

    Stabilizes U(pi/4) only.
    """
    target = phase_gate(np.pi / 4) if preserves is None else preserves
    flip = TwirlElement(0.5, kron(I2, Z), kron(1j * Y, X))
    ident = TwirlElement(0.5, np.eye(4), np.eye(4))
    return TwirlSet((ident, flip), "cnot-extension", target)


def cnot_form_set() -> TwirlSet:
    """Phase-gate twirl followed by the extension; fixes the U(pi/4) standard form."""
    return compose(phase_gate_set(), cnot_extension_set(), "cnot", phase_gate(np.pi / 4))


def swap_set(d: int) -> TwirlSet:
    """Depolarizing twirl in the cross pairing (A, B') and (B, A').

    Element (W, V): W^dag (x) V^dag before the gate, V (x) W after it.
    """
    units = depolarizing_unitaries(d)
    p = 1 / len(units) ** 2
    elements = tuple(
        TwirlElement(p, kron(w.conj().T, v.conj().T), kron(v, w)) for w in units for v in units
    )
    return TwirlSet(elements, "swap", swap_matrix(d))


def swap_matrix(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1
    return s


def conjugate_set(s: TwirlSet, left: Sequence[np.ndarray], right: Sequence[np.ndarray], preserves=None) -> TwirlSet:
    """Transport a set stabilizing G to one stabilizing L G R.

    ``left`` and ``right`` are per-party local unitaries with L = kron(left),
    R = kron(right). Each element becomes (R^dag pre R, L post L^dag).
    """
    lm = kron(*left)
    rm = kron(*right)
    if lm.shape[0] != s.dims[1] or rm.shape[0] != s.dims[0]:
        raise DimensionError("local unitaries do not match the set dimensions")
    elements = tuple(
        TwirlElement(e.probability, rm.conj().T @ e.pre @ rm, lm @ e.post @ lm.conj().T) for e in s.elements
    )
    if preserves is None and s.preserves is not None:
        preserves = lm @ s.preserves @ rm
    return TwirlSet(elements, f"{s.label}-conjugated", preserves)


def load_custom_set(path: str | Path) -> TwirlSet:
    """JSON: {"elements": [{"probability": p, "unitary": {"re": [[..]], "im": [[..]]}}, ...]}."""
    data = json.loads(Path(path).read_text())
    try:
        elements = tuple(
            TwirlElement.conjugation(
                float(el["probability"]),
                np.asarray(el["unitary"]["re"], dtype=float) + 1j * np.asarray(el["unitary"]["im"], dtype=float),
            )
            for el in data["elements"]
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed twirl-set JSON: {exc}") from exc
    return TwirlSet(elements, "custom")
