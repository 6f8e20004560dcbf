"""Sacrificing fidelity to reach single-parameter global white noise.

Every protocol here mixes the noisy operation with designed operations and
returns the resulting channel together with the mixing schedule that
realizes it.  Two-qubit only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .channel import ChoiState, choi_of_unitary, jamiolkowski_fidelity, unitary_choi_vector
from .linalg import ValidationError, kron, partial_transpose
from .pauli import I2, SIGMA, SWAP, X, Y, Z, phase_gate
from .standard_forms import (
    BASIS_ORDERING,
    SWAP_PAIRS,
    bell_product_basis,
    extract_cnot_form,
    extract_phase_gate_form,
    extract_white_noise,
    gate_basis,
    identity_pairs,
    in_gate_basis,
)
from .twirl import TwirlElement, TwirlSet, twirl

TOL_OUTPUT = 1e-9
_TINY = 1e-14


class InfeasibleError(ValueError):
    """The protocol cannot reach the target form for this input."""


# Identity-type channels ---------------------------------------------------------


@dataclass(frozen=True)
class IsotropicVector:
    """Coefficients of P0P0, P0Pj, PiP0 and PiPj (i, j > 0) in the pair Bell basis."""

    e00: float
    e01: float
    e10: float
    e11: float

    def __post_init__(self):
        if min(self.as_array()) < -1e-12:
            raise ValidationError(f"negative isotropic coefficient in {self.as_array()}")
        if abs(norm(self.as_array()) - 1) > 1e-12:
            raise ValidationError(f"coefficients not normalized: N = {norm(self.as_array())}")

    def as_array(self) -> np.ndarray:
        return np.array([self.e00, self.e01, self.e10, self.e11])

    @property
    def fidelity(self) -> float:
        return self.e00

    @property
    def rst(self) -> tuple[float, float, float]:
        r = 1 - 4 * (self.e01 + 3 * self.e11)
        s = 1 - 4 * (self.e10 + 3 * self.e11)
        t = 1 - 4 * (self.e01 + self.e10 + 2 * self.e11)
        return r, s, t

    @classmethod
    def white(cls, f: float) -> "IsotropicVector":
        """Global white noise: every Bell product other than the ideal one carries (1 - f) / 15."""
        return cls(f, (1 - f) / 15, (1 - f) / 15, (1 - f) / 15)

    @classmethod
    def from_rst(cls, r: float, s: float, t: float) -> "IsotropicVector":
        return cls(
            (1 + 3 * (r + s + 3 * t)) / 16,
            (1 + 3 * s - r - 3 * t) / 16,
            (1 + 3 * r - s - 3 * t) / 16,
            (1 + t - r - s) / 16,
        )


def norm(v) -> float:
    """N(v) = v00 + 3 (v01 + v10 + 3 v11)."""
    return float(v[0] + 3 * (v[1] + v[2] + 3 * v[3]))


@dataclass(frozen=True)
class MixingProbabilities:
    """Weights of identity, sigma_j on pair 2, sigma_i on pair 1, sigma_i sigma_j (each term)."""

    p00: float
    p01: float
    p10: float
    p11: float
    rst: tuple[float, float, float]

    def as_array(self) -> np.ndarray:
        return np.array([self.p00, self.p01, self.p10, self.p11])


def mixing_matrix(e: IsotropicVector | np.ndarray) -> np.ndarray:
    """Linear map p -> E' for the Pauli mixing of an isotropic two-pair state.

    Accepts a raw length-4 vector too, so unphysical points of the (r, s, t) cube can be scanned.
    """
    e00, e01, e10, e11 = e.as_array() if isinstance(e, IsotropicVector) else np.asarray(e, dtype=float)
    return np.array([
        [e00, 3 * e01, 3 * e10, 9 * e11],
        [e01, e00 + 2 * e01, 3 * e11, 3 * (e10 + 2 * e11)],
        [e10, 3 * e11, e00 + 2 * e10, 3 * (e01 + 2 * e11)],
        [e11, e10 + 2 * e11, e01 + 2 * e11, e00 + 2 * (e01 + e10 + 2 * e11)],
    ])


def white_target(f: float) -> np.ndarray:
    return IsotropicVector.white(f).as_array()


def constraint_coefficients(r: float, s: float, t: float) -> tuple[np.ndarray, np.ndarray]:
    """(a, b) with p_ij(f') = a_ij f' + b_ij for the global white-noise target."""
    a = np.array([
        (1 / r + 1 / s + 3 / t) / 5,
        (3 / s - 1 / r - 3 / t) / 15,
        (3 / r - 1 / s - 3 / t) / 15,
        (1 / t - 1 / r - 1 / s) / 15,
    ])
    b = np.array([
        (5 - 1 / r - 1 / s - 3 / t) / 80,
        (15 + 1 / r - 3 / s + 3 / t) / 240,
        (15 - 3 / r + 1 / s + 3 / t) / 240,
        (15 + 1 / r + 1 / s - 1 / t) / 240,
    ])
    return a, b


def _feasible_interval(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    lo, hi = 0.0, 1.0
    for ai, bi in zip(a, b):
        if abs(ai) < _TINY:
            if bi < -1e-12:
                return 1.0, 0.0
        elif ai > 0:
            lo = max(lo, -bi / ai)
        else:
            hi = min(hi, -bi / ai)
    return lo, hi


@dataclass(frozen=True)
class SacrificeResult:
    initial_fidelity: float
    achieved_fidelity: float
    ideal_weight: float
    output: ChoiState | None = None
    probabilities: MixingProbabilities | None = None
    output_vector: IsotropicVector | None = None
    schedule: tuple[dict, ...] = field(default=())

    @property
    def noise_ratio(self) -> float:
        if 1 - self.initial_fidelity < _TINY:
            return 1.0
        return (1 - self.achieved_fidelity) / (1 - self.initial_fidelity)

    def to_dict(self) -> dict:
        out = {
            "initial_fidelity": self.initial_fidelity,
            "achieved_fidelity": self.achieved_fidelity,
            "ideal_weight": self.ideal_weight,
            "noise_ratio": self.noise_ratio,
        }
        if self.probabilities is not None:
            out["probabilities"] = dict(zip(("p00", "p01", "p10", "p11"), self.probabilities.as_array().tolist()))
            out["rst"] = list(self.probabilities.rst)
        if self.schedule:
            out["schedule"] = list(self.schedule)
        return out


def identity_sacrifice(e: IsotropicVector) -> SacrificeResult:
    """Largest f' for which Pauli mixing turns ``e`` into global white noise."""
    r, s, t = e.rst
    if min(abs(r), abs(s), abs(t)) < _TINY:
        raise InfeasibleError(f"mixing matrix is singular (r, s, t = {r}, {s}, {t})")
    m = mixing_matrix(e)
    lo, hi = _feasible_interval(*constraint_coefficients(r, s, t))
    if lo > hi + 1e-12:
        raise InfeasibleError("no fidelity makes every mixing probability nonnegative")
    f_max = hi
    p = np.linalg.solve(m, white_target(f_max))
    if np.min(p) < -1e-12:
        raise InfeasibleError(f"mixing probabilities {p} are negative")
    probs = MixingProbabilities(*np.clip(p, 0, None).tolist(), rst=(r, s, t))
    out = IsotropicVector(*(m @ probs.as_array()).tolist())
    return SacrificeResult(e.fidelity, out.fidelity, (16 * out.fidelity - 1) / 15, probabilities=probs, output_vector=out)


def isotropic_vector(e: ChoiState, pairs=None) -> IsotropicVector:
    """Read the isotropic coefficients of a two-qubit channel in the given pairing."""
    pairs = identity_pairs(2) if pairs is None else pairs
    extract_white_noise(e, pairs)
    basis, labels = bell_product_basis(2, 2, pairs)
    diag = np.real(np.einsum("ia,ij,ja->a", basis.conj(), e.matrix, basis))
    groups = {(0, 0): [], (0, 1): [], (1, 0): [], (1, 1): []}
    for value, ((k1, l1), (k2, l2)) in zip(diag, labels):
        groups[(int((k1, l1) != (0, 0)), int((k2, l2) != (0, 0)))].append(value)
    return IsotropicVector(*[float(np.mean(groups[k])) for k in ((0, 0), (0, 1), (1, 0), (1, 1))])


def _pair_paulis(pairs):
    """Single-qubit Pauli index (0..3) on each pair's output -> two-qubit operator."""
    out_of = [o for o, _ in pairs]

    def op(j1, j2):
        factors = [I2, I2]
        factors[out_of[0]] = SIGMA[j1]
        factors[out_of[1]] = SIGMA[j2]
        return kron(*factors)

    return op


def pauli_mixing_set(probs: MixingProbabilities, pairs=None) -> TwirlSet:
    """The mixing as a schedule of Pauli operations on each pair's output qubit."""
    pairs = identity_pairs(2) if pairs is None else pairs
    op = _pair_paulis(pairs)
    p = probs.as_array()
    elements = []
    for j1 in range(4):
        for j2 in range(4):
            w = p[2 * int(j1 > 0) + int(j2 > 0)]
            if w > 0:
                elements.append(TwirlElement(w, np.eye(4), op(j1, j2)))
    return TwirlSet(tuple(elements), "pauli-mixing")


def _element_dict(stage, el: TwirlElement, label: str) -> dict:
    return {
        "stage": stage,
        "probability": el.probability,
        "label": label,
        "pre_re": np.real(el.pre).tolist(),
        "pre_im": np.imag(el.pre).tolist(),
        "post_re": np.real(el.post).tolist(),
        "post_im": np.imag(el.post).tolist(),
    }


def _isotropic_sacrifice(e: ChoiState, pairs, target_u) -> SacrificeResult:
    vec = isotropic_vector(e, pairs)
    res = identity_sacrifice(vec)
    mix = pauli_mixing_set(res.probabilities, pairs)
    out = twirl(e, mix)
    f_out = jamiolkowski_fidelity(out, target_u)
    expected = IsotropicVector.white(f_out).as_array()
    if np.max(np.abs(isotropic_vector(out, pairs).as_array() - expected)) > TOL_OUTPUT:
        raise InfeasibleError("mixed channel is not global white noise")
    schedule = tuple(_element_dict(1, el, "pauli-mixing") for el in mix.elements)
    return SacrificeResult(
        jamiolkowski_fidelity(e, target_u), f_out, (16 * f_out - 1) / 15,
        output=out, probabilities=res.probabilities, output_vector=res.output_vector, schedule=schedule,
    )


def identity_channel_sacrifice(e: ChoiState) -> SacrificeResult:
    """Identity sacrifice applied to an isotropic two-qubit channel."""
    return _isotropic_sacrifice(e, identity_pairs(2), np.eye(4))


def swap_sacrifice(e: ChoiState) -> SacrificeResult:
    """Identity sacrifice in the (A, B'), (B, A') pairing of a SWAP-twirled channel."""
    extract_white_noise(e, SWAP_PAIRS)
    f = jamiolkowski_fidelity(e, SWAP)
    if f <= 15 / 16:
        raise InfeasibleError(f"SWAP fidelity {f} is not above 15/16")
    return _isotropic_sacrifice(e, SWAP_PAIRS, SWAP)


# CNOT-type gate ------------------------------------------------------------------

_CNOT = phase_gate(np.pi / 4)
_I4 = np.eye(4)
_INDEX = {lab: k for k, lab in enumerate(BASIS_ORDERING)}


def _post(u) -> TwirlElement:
    return TwirlElement(1.0, _I4, u)


def _both(u) -> TwirlElement:
    return TwirlElement(1.0, u, u)


def _chain(*els: TwirlElement) -> TwirlElement:
    """Apply the elements in order; probability 1 placeholder."""
    pre, post = _I4, _I4
    for el in els:
        pre, post = pre @ el.pre, el.post @ post
    return TwirlElement(1.0, pre, post)


UX_A, UZ_A = _post(kron(X, I2)), _post(kron(Z, I2))
UX_B, UZ_B = _post(kron(I2, X)), _post(kron(I2, Z))
FLIP_A, FLIP_B = _both(kron(Z, I2)), _both(kron(I2, Z))
W_A, W_B = _post(kron(1j * Y, I2)), _post(kron(I2, 1j * Y))
UT_A = _both(kron(X, I2))
IDENTITY = _post(_I4)

TRANSFER_OPS = (
    ("1", IDENTITY), ("W_B", W_B), ("Ux_B", UX_B), ("Uz_B", UZ_B), ("Ux_A", UX_A), ("Uz_A", UZ_A),
    ("Ux_A Ux_B", _chain(UX_B, UX_A)), ("Ux_A Uz_B", _chain(UZ_B, UX_A)),
    ("Uz_A Ux_B", _chain(UX_B, UZ_A)), ("Uz_A Uz_B", _chain(UZ_B, UZ_A)),
    ("W_B Ux_A", _chain(UX_A, W_B)), ("W_B Uz_A", _chain(UZ_A, W_B)),
)


def _conj(m: np.ndarray, el: TwirlElement) -> np.ndarray:
    s = el.state_operator
    return s @ m @ s.conj().T


def _entry(m: np.ndarray, row, col) -> complex:
    return complex(in_gate_basis(ChoiState(m, (2, 2), (2, 2)))[_INDEX[row], _INDEX[col]])


class _Stages:
    """Collects (stage, weight, element, label) for the exported schedule."""

    def __init__(self):
        self.rows = []

    def add(self, stage, options):
        total = sum(w for w, _, _ in options if w > _TINY)
        for w, el, label in options:
            if w > _TINY:
                self.rows.append(_element_dict(stage, TwirlElement(min(w / total, 1.0), el.pre, el.post), label))


def _mix(m: np.ndarray, options) -> np.ndarray:
    return sum(w * _conj(m, el) for w, el, _ in options if w > _TINY)


def cnot_sacrifice(e: ChoiState) -> SacrificeResult:
    """Turn a channel in CNOT form into q U(pi/4) + (1-q) global white noise."""
    extract_cnot_form(e)
    f = jamiolkowski_fidelity(e, _CNOT)
    stages = _Stages()
    m = e.matrix

    # Stage 1: cancel the Gamma_01 and Gamma_10 coherences.
    e1_opts = [(0.5, UX_B, "Ux_B"), (0.5, UZ_B, "Uz_B")]
    e2_opts = [(0.5, UX_A, "Ux_A"), (0.5, UZ_A, "Uz_A")]
    e1, e2 = _mix(m, e1_opts), _mix(m, e2_opts)
    w, z1 = _entry(m, (0, 1), (2, 3)).real, _entry(e1, (0, 1), (2, 3)).real
    x, z2 = _entry(m, (1, 0), (3, 2)).real, _entry(e2, (1, 0), (3, 2)).real
    if w * z1 > 0:
        e1 = _conj(e1, FLIP_B)
        e1_opts = [(p, _chain(el, FLIP_B), lab + " Zflip_B") for p, el, lab in e1_opts]
    if x * z2 > 0:
        e2 = _conj(e2, FLIP_A)
        e2_opts = [(p, _chain(el, FLIP_A), lab + " Zflip_A") for p, el, lab in e2_opts]
    weights = [1.0, 0.0, 0.0]
    for k, (coh, z) in enumerate(((w, z1), (x, z2)), start=1):
        if abs(coh) > _TINY:
            if abs(z) < _TINY:
                raise InfeasibleError("stage 1 has no weight to cancel a coherence")
            weights[k] = abs(coh) / abs(z)
    p = np.array(weights) / sum(weights)
    m = p[0] * m + p[1] * e1 + p[2] * e2
    stages.add(1, [(p[0], IDENTITY, "1")] + [(p[1] * q, el, lab) for q, el, lab in e1_opts]
               + [(p[2] * q, el, lab) for q, el, lab in e2_opts])

    # Stage 2: cancel the |Psi_02><Psi_20| coherence.
    m_w = _conj(m, W_A)
    x2, xw = _entry(m, (0, 2), (2, 0)), _entry(m_w, (0, 2), (2, 0))
    w_el, w_label = W_A, "W_A"
    if (x2 * np.conj(xw)).real > 0:
        m_w, xw = _conj(m_w, FLIP_B), -xw
        w_el, w_label = _chain(W_A, FLIP_B), "W_A Zflip_B"
    q = 1.0 if abs(x2) + abs(xw) < _TINY else abs(xw) / (abs(x2) + abs(xw))
    m = q * m + (1 - q) * m_w
    stages.add(2, [(q, IDENTITY, "1"), (1 - q, w_el, w_label)])

    # Stage 3: move ideal weight onto the noise diagonal until it is flat.
    b = gate_basis()
    psi = unitary_choi_vector(_CNOT)
    ideal_b = b.conj().T @ np.outer(psi, psi.conj()) @ b
    f_part = 2 * _entry(m, (0, 0), (2, 2)).imag
    diag = np.real(np.diag(b.conj().T @ m @ b - f_part * ideal_b))
    columns = []
    for _, el in TRANSFER_OPS:
        t = _conj(m, el)
        t = 0.5 * (t + _conj(t, UT_A))
        columns.append(np.real(np.diag(b.conj().T @ t @ b)))
    n = len(TRANSFER_OPS)
    a_eq = np.zeros((17, n + 1))
    a_eq[:16, 0] = diag + f_part / 16
    a_eq[:16, 1:] = np.column_stack(columns)
    a_eq[16, :] = 1
    b_eq = np.append(np.full(16, 1 / 16), 1.0)
    cost = np.zeros(n + 1)
    cost[0] = -1
    lp = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * (n + 1), method="highs")
    if not lp.success:
        raise InfeasibleError(f"diagonal equalization infeasible: {lp.message}")
    mu, nus = lp.x[0], lp.x[1:]
    out = mu * m + sum(nu * 0.5 * (_conj(m, el) + _conj(_conj(m, el), UT_A)) for nu, (_, el) in zip(nus, TRANSFER_OPS))
    options = [(mu, IDENTITY, "1")]
    for nu, (label, el) in zip(nus, TRANSFER_OPS):
        options += [(nu / 2, el, label), (nu / 2, _chain(el, UT_A), label + " Ut_A")]
    stages.add(3, options)

    q_t = mu * f_part
    return _white_result(e, f, out, q_t, _CNOT, tuple(stages.rows))


def _white_result(e: ChoiState, f: float, out_m: np.ndarray, q_t: float, u, schedule) -> SacrificeResult:
    out = ChoiState(out_m, (2, 2), (2, 2))
    target = q_t * choi_of_unitary(u, (2, 2)).matrix + (1 - q_t) * np.eye(16) / 16
    residual = np.max(np.abs(out.matrix - target))
    if residual > TOL_OUTPUT:
        raise InfeasibleError(f"output is not ideal plus white noise (residual {residual:.3e})")
    return SacrificeResult(f, jamiolkowski_fidelity(out, u), q_t, output=out, schedule=schedule)


# Switchable phase gate -----------------------------------------------------------


def _two_qubit_order(block: int) -> list[int]:
    """Positions of a block's entries in the (k//2, l//2) two-qubit ordering."""
    return [2 * (i // 2) + j // 2 for i, j in BASIS_ORDERING[4 * block:4 * block + 4]]


@dataclass(frozen=True, eq=False)
class SeparableMixer:
    """Trace-weighted 4x4 block embedded in one Gamma block of the gate basis."""

    block: int
    weight: float
    matrix: np.ndarray

    def two_qubit_matrix(self) -> np.ndarray:
        """The block as a two-qubit matrix (basis |k//2, l//2>), which the embedding maps locally."""
        order = _two_qubit_order(self.block)
        out = np.zeros((4, 4), dtype=complex)
        out[np.ix_(order, order)] = self.matrix
        return out

    def embedded(self) -> np.ndarray:
        full = np.zeros((16, 16), dtype=complex)
        s = 4 * self.block
        full[s:s + 4, s:s + 4] = self.matrix
        b = gate_basis()
        return b @ full @ b.conj().T

    def is_separable(self, tol: float = 1e-12) -> bool:
        """PPT of the two-qubit block (sufficient) and of the embedded state across AA'|BB'."""
        small = np.linalg.eigvalsh(partial_transpose(self.two_qubit_matrix(), (2, 2), 1))
        big = np.linalg.eigvalsh(partial_transpose(self.embedded(), (2, 2, 2, 2), [1, 3]))
        psd = np.linalg.eigvalsh(self.matrix)
        return min(small.min(), big.min(), psd.min()) >= -tol

    def to_dict(self) -> dict:
        return {
            "block": f"{self.block // 2}{self.block % 2}",
            "weight": self.weight,
            "state_re": np.real(self.matrix / self.weight).tolist(),
            "state_im": np.imag(self.matrix / self.weight).tolist(),
        }


def _block_level(r: np.ndarray, block: int) -> float:
    """Smallest lambda with lambda 1 - R_block an X-shaped PSD and PPT matrix."""
    s = 4 * block
    m = max(abs(r[s, s + 3]), abs(r[s + 1, s + 2]))
    level = -np.inf
    for i, j in ((0, 3), (1, 2)):
        ri, rj = r[s + i, s + i].real, r[s + j, s + j].real
        level = max(level, (ri + rj) / 2 + np.hypot((ri - rj) / 2, m))
    return level


def phase_gate_mixers(e: ChoiState, alpha: float) -> tuple[float, list[SeparableMixer]]:
    """Probability of the noisy gate and the separable block mixers that whiten it."""
    u = phase_gate(alpha)
    b = gate_basis()
    psi = unitary_choi_vector(u)
    f = jamiolkowski_fidelity(e, u)
    noise = b.conj().T @ (e.matrix - f * np.outer(psi, psi.conj())) @ b
    level = max(_block_level(noise, k) for k in range(4))
    p = 1 / (f + 16 * level)
    if not 0 < p <= 1 + 1e-12:
        raise InfeasibleError(f"noisy gate weight {p} outside (0, 1]")
    mixers = []
    for k in range(4):
        s = slice(4 * k, 4 * k + 4)
        blk = p * (level * np.eye(4) - noise[s, s])
        blk = (blk + blk.conj().T) / 2
        weight = float(np.real(np.trace(blk)))
        if weight > _TINY:
            mixers.append(SeparableMixer(k, weight, blk))
    return min(p, 1.0), mixers


def phase_gate_sacrifice(e: ChoiState, alpha: float) -> SacrificeResult:
    """Mix a switchable noisy U(alpha) with separable states to reach ideal plus white noise."""
    extract_phase_gate_form(e, alpha)
    u = phase_gate(alpha)
    f = jamiolkowski_fidelity(e, u)
    p, mixers = phase_gate_mixers(e, alpha)
    bad = [m.block for m in mixers if not m.is_separable()]
    if bad:
        raise InfeasibleError(f"mixers for blocks {bad} fail the PPT check")
    out = p * e.matrix + sum((m.embedded() for m in mixers), np.zeros((16, 16), dtype=complex))
    schedule = ({"stage": 1, "probability": p, "label": "noisy gate"},) + tuple(
        {"stage": 1, "probability": m.weight, "label": "separable state", **m.to_dict()} for m in mixers
    )
    return _white_result(e, f, out, p * f, u, schedule)
