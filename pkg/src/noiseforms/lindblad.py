"""Markovian generators on qubits, their control transformations and stroboscopic evolution.

A generator acts as Z rho = -i[H + H_l, rho] + sum_kl L_kl (2 s_k rho s_l - s_l s_k rho - rho s_l s_k),
with s_k the unnormalized Pauli products over every index except the identity,
ordered lexicographically (``pauli_labels``).  Superoperators act on row-major
vectorized density matrices: vec(A rho B) = (A (x) B^T) vec(rho).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import ChoiState, format_matrix
from .linalg import TOL_EIG, TOL_HERM, TOL_RANK, ValidationError, as_matrix, is_hermitian, kron, mat_exp
from .pauli import SIGMA, Y
from .standard_forms import PauliChannelForm
from .twirl import TwirlSet, depolarizing_set, pauli_set, phase_gate_set

_SNAP = 1e-14


@lru_cache(maxsize=None)
def pauli_labels(qubits: int) -> tuple[tuple[int, ...], ...]:
    return tuple(k for k in itertools.product(range(4), repeat=qubits) if any(k))


@lru_cache(maxsize=None)
def _pauli_stack(qubits: int) -> np.ndarray:
    ops = np.stack([kron(*[SIGMA[i] for i in k]) for k in pauli_labels(qubits)])
    ops.setflags(write=False)
    return ops


def pauli_operator(label: Sequence[int]) -> np.ndarray:
    return kron(*[SIGMA[i] for i in label])


def _qubits_for(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim or n < 1:
        raise ValidationError(f"dimension {dim} is not a qubit register")
    return n


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    hamiltonian: np.ndarray
    lamb_shift: np.ndarray
    gks: np.ndarray

    def __post_init__(self):
        h = as_matrix(self.hamiltonian)
        n = _qubits_for(h.shape[0])
        hl = as_matrix(self.lamb_shift, *h.shape)
        size = 4**n - 1
        gks = as_matrix(self.gks, size, size)
        for name, m in (("H", h), ("H_l", hl), ("GKS matrix", gks)):
            if not is_hermitian(m, TOL_HERM):
                raise ValidationError(f"{name} is not Hermitian")
        if np.linalg.eigvalsh((gks + gks.conj().T) / 2).min() < -TOL_HERM:
            raise ValidationError("GKS matrix is not positive semidefinite")
        for name, m in (("hamiltonian", h), ("lamb_shift", hl), ("gks", gks)):
            m = m.copy()
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def qubits(self) -> int:
        return _qubits_for(self.hamiltonian.shape[0])

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @classmethod
    def zero(cls, qubits: int) -> "LindbladGenerator":
        d, size = 2**qubits, 4**qubits - 1
        return cls(np.zeros((d, d)), np.zeros((d, d)), np.zeros((size, size)))

    def replace(self, hamiltonian=None, lamb_shift=None, gks=None) -> "LindbladGenerator":
        return LindbladGenerator(
            self.hamiltonian if hamiltonian is None else hamiltonian,
            self.lamb_shift if lamb_shift is None else lamb_shift,
            self.gks if gks is None else gks,
        )

    def scaled(self, c: float) -> "LindbladGenerator":
        return LindbladGenerator(c * self.hamiltonian, c * self.lamb_shift, c * self.gks)

    def to_json(self) -> str:
        return (
            "{"
            f'"H_re":{format_matrix(self.hamiltonian.real)},"H_im":{format_matrix(self.hamiltonian.imag)},'
            f'"Hl_re":{format_matrix(self.lamb_shift.real)},"Hl_im":{format_matrix(self.lamb_shift.imag)},'
            f'"gks_re":{format_matrix(self.gks.real)},"gks_im":{format_matrix(self.gks.imag)},'
            '"basis":"pauli-lex"'
            "}\n"
        )


def generator_from_dict(data: dict) -> LindbladGenerator:
    try:
        if data.get("basis", "pauli-lex") != "pauli-lex":
            raise ValidationError(f"unsupported GKS basis {data['basis']!r}")
        parts = [np.asarray(data[k + "_re"], dtype=float) + 1j * np.asarray(data[k + "_im"], dtype=float)
                 for k in ("H", "Hl", "gks")]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed generator JSON: {exc}") from exc
    return LindbladGenerator(*parts)


def load_generator(path: str | Path) -> LindbladGenerator:
    return generator_from_dict(json.loads(Path(path).read_text()))


# Superoperators ----------------------------------------------------------------


def _left(a: np.ndarray) -> np.ndarray:
    return np.kron(a, np.eye(a.shape[0]))


def _right(b: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(b.shape[0]), b.T)


def generator_to_superoperator(z: LindbladGenerator) -> np.ndarray:
    """Matrix of Z on row-major vec(rho)."""
    h = z.hamiltonian + z.lamb_shift
    out = -1j * (_left(h) - _right(h))
    ops = _pauli_stack(z.qubits)
    for k, l in zip(*np.nonzero(np.abs(z.gks) > 0)):
        sk, sl = ops[k], ops[l]
        prod = sl @ sk
        out = out + z.gks[k, l] * (2 * np.kron(sk, sl.T) - _left(prod) - _right(prod))
    return out


def superoperator_to_choi(s: np.ndarray, qubits: int) -> ChoiState:
    """Trace-one Choi state over (outputs, inputs) of a superoperator."""
    d = 2**qubits
    m = s.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d) / d
    dims = (2,) * qubits
    return ChoiState(m, dims, dims)


def unitary_superoperator(u: np.ndarray) -> np.ndarray:
    return np.kron(u, u.conj())


def evolve(z: LindbladGenerator, t: float) -> ChoiState:
    """e^{Z t} as a Choi state."""
    return superoperator_to_choi(mat_exp(generator_to_superoperator(z) * t), z.qubits)


# Transformations ------------------------------------------------------------------


def pauli_rotation(u: np.ndarray) -> np.ndarray:
    """Real orthogonal O with U s_k U^dag = sum_l O_lk s_l."""
    n = _qubits_for(u.shape[0])
    ops = _pauli_stack(n)
    rotated = np.einsum("ab,kbc,dc->kad", u, ops, u.conj())
    o = np.einsum("lba,kab->lk", ops, rotated) / u.shape[0]
    if np.max(np.abs(o.imag)) > TOL_EIG:
        raise ValidationError("operator does not preserve the traceless Hermitian space")
    o = o.real
    o[np.abs(o) < _SNAP] = 0.0
    return o


def conjugate_generator(z: LindbladGenerator, u) -> LindbladGenerator:
    """Generator of U e^{Z t}(U^dag . U) U^dag."""
    u = as_matrix(u, z.dim, z.dim)
    if np.max(np.abs(u.conj().T @ u - np.eye(z.dim))) > TOL_EIG:
        raise ValidationError("conjugating operator is not unitary")
    o = pauli_rotation(u)
    ud = u.conj().T
    return LindbladGenerator(u @ z.hamiltonian @ ud, u @ z.lamb_shift @ ud, o @ z.gks @ o.T)


def average_generator(terms: Sequence[tuple[float, LindbladGenerator]]) -> LindbladGenerator:
    probs = np.array([p for p, _ in terms], dtype=float)
    if np.any(probs <= 0) or abs(probs.sum() - 1) > 1e-12:
        raise ValidationError("weights must be positive and sum to 1")
    return LindbladGenerator(
        sum(p * z.hamiltonian for p, z in terms),
        sum(p * z.lamb_shift for p, z in terms),
        sum(p * z.gks for p, z in terms),
    )


def _conjugation_unitaries(s: TwirlSet) -> list[tuple[float, np.ndarray]]:
    out = []
    for el in s.elements:
        if np.max(np.abs(el.pre - el.post.conj().T)) > TOL_EIG:
            raise ValidationError(f"{s.label} has elements that are not conjugations")
        out.append((el.probability, el.post))
    return out


def twirl_generator(z: LindbladGenerator, s: TwirlSet) -> LindbladGenerator:
    """sum_k u_k U_k Z U_k^dag over a set of conjugations."""
    return average_generator([(p, conjugate_generator(z, u)) for p, u in _conjugation_unitaries(s)])


# Stroboscopic control ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Within each of ``steps`` intervals, segment k runs for fraction u_k under conjugation by U_k."""

    segments: tuple[tuple[float, np.ndarray], ...]
    steps: int
    total_time: float

    def __post_init__(self):
        segs = tuple((float(p), as_matrix(u)) for p, u in self.segments)
        if not segs:
            raise ValidationError("schedule has no segments")
        if self.steps < 1:
            raise ValidationError("need at least one step")
        if self.total_time < 0:
            raise ValidationError("total time must be nonnegative")
        if any(p <= 0 for p, _ in segs) or abs(sum(p for p, _ in segs) - 1) > 1e-12:
            raise ValidationError("segment fractions must be positive and sum to 1")
        for _, u in segs:
            if u.shape[0] != u.shape[1] or np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > TOL_EIG:
                raise ValidationError("schedule contains a non-unitary pulse")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def from_set(cls, s: TwirlSet, steps: int, total_time: float) -> "PulseSchedule":
        return cls(tuple(_conjugation_unitaries(s)), steps, total_time)

    @property
    def dt(self) -> float:
        return self.total_time / self.steps

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "total_time": self.total_time,
            "segments": [
                {"fraction": p, "unitary_re": u.real.tolist(), "unitary_im": u.imag.tolist()} for p, u in self.segments
            ],
        }


def stroboscopic_superoperator(z: LindbladGenerator, schedule: PulseSchedule, mode: str = "sequential") -> np.ndarray:
    s = generator_to_superoperator(z)
    dt = schedule.dt
    if mode == "sequential":
        step = np.eye(s.shape[0], dtype=complex)
        for p, u in schedule.segments:
            cu = unitary_superoperator(u)
            step = cu @ mat_exp(s * p * dt) @ cu.conj().T @ step
    elif mode == "random":
        free = mat_exp(s * dt)
        step = sum(p * unitary_superoperator(u) @ free @ unitary_superoperator(u).conj().T for p, u in schedule.segments)
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    return np.linalg.matrix_power(step, schedule.steps)


def stroboscopic_evolve(z: LindbladGenerator, schedule: PulseSchedule, mode: str = "sequential") -> ChoiState:
    """M repetitions of the pulsed step; converges to e^{Z' t} with Z' the schedule average."""
    return superoperator_to_choi(stroboscopic_superoperator(z, schedule, mode), z.qubits)


def schedule_average(z: LindbladGenerator, schedule: PulseSchedule) -> LindbladGenerator:
    return average_generator([(p, conjugate_generator(z, u)) for p, u in schedule.segments])


# Standard forms of generators --------------------------------------------------------


def decoherence_standard_form(z: LindbladGenerator, level: str = "pauli") -> LindbladGenerator:
    """Twirl a pure-decoherence generator with local Paulis or the qubit depolarizing set."""
    if np.max(np.abs(z.hamiltonian)) > TOL_HERM:
        raise ValidationError("decoherence standard form needs H = 0")
    if level == "pauli":
        s = pauli_set(2, z.qubits)
    elif level == "depolarizing":
        s = depolarizing_set(2, z.qubits)
    else:
        raise ValidationError(f"unknown level {level!r}")
    return twirl_generator(z, s)


def dephasing_generator(rates: Sequence[float]) -> LindbladGenerator:
    """Single-qubit generator with diagonal GKS matrix diag(L1, L2, L3)."""
    return LindbladGenerator(np.zeros((2, 2)), np.zeros((2, 2)), np.diag(np.asarray(rates, dtype=float)))


def closed_form_pauli_channel(l1: float, l2: float, l3: float, t: float) -> PauliChannelForm:
    """Pauli weights E_0..E_3 of exp(t Z) for a diagonal single-qubit GKS matrix."""
    if min(l1, l2, l3, t) < 0:
        raise ValidationError("rates and time must be nonnegative")
    g1, g2, g3 = np.exp(-4 * (l2 + l3) * t), np.exp(-4 * (l1 + l3) * t), np.exp(-4 * (l1 + l2) * t)
    weights = (
        (1 + g1 + g2 + g3) / 4,
        (1 + g1 - g2 - g3) / 4,
        (1 - g1 + g2 - g3) / 4,
        (1 - g1 - g2 + g3) / 4,
    )
    # Bell-basis labels (k, l) of sigma_0..sigma_3 for one qubit.
    labels = (((0, 0),), ((0, 1),), ((1, 1),), ((1, 0),))
    order = {lab: w for lab, w in zip(labels, weights)}
    full = tuple(((k, l),) for k in range(2) for l in range(2))
    return PauliChannelForm(2, 1, tuple(float(order[lab]) for lab in full), full)


def depolarizing_decay(rate: float, t: float) -> float:
    """Shrinking factor p(t) of exp(t Z) when L = rate * identity."""
    return float(np.exp(-8 * rate * t))


# Ising interaction and the arbitrary-Hamiltonian chain --------------------------------

YY = kron(Y, Y)


def pauli_components(m: np.ndarray) -> dict[tuple[int, ...], complex]:
    """Coefficients of m in the Pauli-product basis (identity included)."""
    n = _qubits_for(m.shape[0])
    out = {}
    for k in itertools.product(range(4), repeat=n):
        c = np.trace(pauli_operator(k) @ m) / m.shape[0]
        if abs(c) > 0:
            out[k] = complex(c)
    return out


@dataclass(frozen=True)
class IsingForm:
    generator: LindbladGenerator
    coupling: float
    effective_coupling: float
    time_cost: float


def ising_standard_form(z: LindbladGenerator) -> IsingForm:
    """Twirl with the 32 phase-gate unitaries; the Lamb shift's YY part renormalizes g."""
    if z.qubits != 2:
        raise ValidationError("Ising form needs two qubits")
    g = float(np.real(np.trace(YY @ z.hamiltonian)) / 4)
    if np.max(np.abs(z.hamiltonian - g * YY)) > TOL_HERM or abs(g) < TOL_HERM:
        raise ValidationError("H is not of the form g sigma_y (x) sigma_y")
    twirled = twirl_generator(z, phase_gate_set())
    g_eff = g + float(np.real(np.trace(YY @ twirled.lamb_shift)) / 4)
    if g_eff / g <= 0:
        raise ValidationError(f"Lamb shift reverses the coupling (g' = {g_eff}); time cost undefined")
    return IsingForm(twirled, g, g_eff, g / g_eff)


@dataclass(frozen=True, eq=False)
class SimulationDecomposition:
    """target = cost * sum_i w_i V_i source V_i^dag (local corrections not supported)."""

    direction: str
    cost: float
    terms: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        if self.direction not in ("forward", "backward"):
            raise ValidationError("direction is 'forward' or 'backward'")
        if self.cost <= 0:
            raise ValidationError("time cost must be positive")
        terms = tuple((float(p), as_matrix(u, 4, 4)) for p, u in self.terms)
        if any(p <= 0 for p, _ in terms) or abs(sum(p for p, _ in terms) - 1) > 1e-12:
            raise ValidationError("weights must be positive and sum to 1")
        object.__setattr__(self, "terms", terms)

    def simulate(self, h: np.ndarray) -> np.ndarray:
        return self.cost * sum(p * u @ h @ u.conj().T for p, u in self.terms)

    def check(self, source: np.ndarray, target: np.ndarray, tol: float = 1e-8) -> None:
        err = np.max(np.abs(self.simulate(source) - target))
        if err > tol:
            raise ValidationError(f"{self.direction} decomposition misses its target by {err:.3e}")


@dataclass(frozen=True)
class ChainResult:
    generator: LindbladGenerator
    time_cost: float
    forward_cost: float
    lamb_cost: float
    backward_cost: float


def _mix(z: LindbladGenerator, dec: SimulationDecomposition) -> LindbladGenerator:
    return average_generator([(p, conjugate_generator(z, u)) for p, u in dec.terms]).scaled(dec.cost)


def arbitrary_h_chain(z: LindbladGenerator, fwd: SimulationDecomposition, bwd: SimulationDecomposition) -> ChainResult:
    """Simulate sigma_y sigma_y, twirl it into Ising form, then simulate H back."""
    h = z.hamiltonian
    fwd.check(h, YY)
    bwd.check(YY, h)
    z_y = _mix(z, fwd)
    ising = ising_standard_form(z_y)
    c_y = ising.time_cost
    # Rescaling by c_y turns g' back into 1; the leftover Lamb shift is a global phase.
    z_y = ising.generator.scaled(c_y).replace(hamiltonian=YY, lamb_shift=np.zeros((4, 4)))
    out = _mix(z_y, bwd)
    out = out.replace(hamiltonian=h)
    return ChainResult(out, fwd.cost * c_y * bwd.cost, fwd.cost, c_y, bwd.cost)


def chain_parameter_rank(fwd: SimulationDecomposition, bwd: SimulationDecomposition, tol: float = TOL_RANK) -> int:
    """Number of real parameters the chained GKS matrix can depend on (rank of L -> L')."""
    s = phase_gate_set()
    u_ops = [pauli_rotation(u) for _, u in _conjugation_unitaries(s)]
    v_ops = [(p, pauli_rotation(u)) for p, u in fwd.terms]
    w_ops = [(p, pauli_rotation(u)) for p, u in bwd.terms]
    size = 15
    columns = []
    for i in range(size):
        for j in range(i, size):
            for part in ((1, 1), (1j, -1j)) if i != j else ((1, 1),):
                m = np.zeros((size, size), dtype=complex)
                m[i, j], m[j, i] = part
                m = sum(p * o @ m @ o.T for p, o in v_ops)
                m = sum(o @ m @ o.T for o in u_ops) / len(u_ops)
                m = sum(p * o @ m @ o.T for p, o in w_ops)
                columns.append(np.concatenate([m.real.ravel(), m.imag.ravel()]))
    return int(np.linalg.matrix_rank(np.array(columns).T, tol=tol))


def independent_entries(gks: np.ndarray, tol: float = 1e-9) -> int:
    """Distinct magnitudes among the real and imaginary parts of the upper triangle above ``tol``."""
    iu = np.triu_indices(gks.shape[0])
    vals = np.abs(np.concatenate([gks[iu].real, gks[iu].imag]))
    vals = np.sort(vals[vals > tol])
    if vals.size == 0:
        return 0
    return int(1 + np.count_nonzero(np.diff(vals) > tol))


def ising_axis_decomposition(direction: str = "forward") -> SimulationDecomposition:
    """Single-term decomposition relating sigma_z sigma_z and sigma_y sigma_y via exp(-i pi/4 sigma_x) on both qubits."""
    from .pauli import X, pauli_exp

    r = pauli_exp(X, np.pi / 4)
    return SimulationDecomposition(direction, 1.0, ((1.0, kron(r, r)),))


# Separable generator mixing --------------------------------------------------------


@dataclass(frozen=True)
class MixingCheck:
    white: bool
    rate: float
    residual: float


def separable_mixing_check(z: LindbladGenerator, z_sep: LindbladGenerator, weight: float, tol: float = 1e-9) -> MixingCheck:
    """Whether adding ``weight`` times a separable generator makes the GKS matrix proportional to 1."""
    if weight < 0:
        raise ValidationError("weight must be nonnegative")
    total = z.gks + weight * z_sep.gks
    rate = float(np.real(np.trace(total)) / total.shape[0])
    residual = float(np.max(np.abs(total - rate * np.eye(total.shape[0]))))
    return MixingCheck(residual <= tol, rate, residual)
