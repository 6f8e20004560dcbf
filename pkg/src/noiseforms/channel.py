"""Choi-state representation of quantum operations.

A channel acting on input space A (dimension d_A) with output space A' is
stored as the trace-one matrix E = (channel (x) id)(P_Phi) on A' (x) A, with
all output parties first and all input parties second. Its action is

    channel(rho)_{ik} = d_A * sum_{jl} E_{ij,kl} rho_{jl}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .linalg import (
    TOL_EIG,
    TOL_HERM,
    TOL_RANK,
    DimensionError,
    ValidationError,
    as_matrix,
    check_shape,
    herm_eig,
    is_hermitian,
    kron,
    partial_trace,
    partial_transpose,
)
from .pauli import max_entangled


class NotCPError(ValidationError):
    """The Choi matrix has a negative eigenvalue beyond tolerance."""


class NotTPError(ValidationError):
    """The Choi matrix does not describe a trace-preserving map."""


@dataclass(frozen=True, eq=False)
class ChoiState:
    """Choi matrix over (outputs..., inputs...) with per-party dimensions."""

    matrix: np.ndarray
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]

    def __post_init__(self):
        in_dims = check_shape(self.in_dims)
        out_dims = check_shape(self.out_dims)
        m = as_matrix(self.matrix, int(np.prod(out_dims)) * int(np.prod(in_dims)))
        if m.shape[0] != m.shape[1]:
            raise DimensionError("Choi matrix must be square")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "in_dims", in_dims)
        object.__setattr__(self, "out_dims", out_dims)

    @property
    def d_in(self) -> int:
        return int(np.prod(self.in_dims))

    @property
    def d_out(self) -> int:
        return int(np.prod(self.out_dims))

    @property
    def shape(self) -> tuple[int, ...]:
        """Tensor shape of the full matrix: outputs then inputs."""
        return self.out_dims + self.in_dims

    @property
    def parties(self) -> int:
        return len(self.in_dims)

    def with_matrix(self, m) -> "ChoiState":
        return ChoiState(m, self.in_dims, self.out_dims)

    def is_hermitian(self, tol: float = TOL_HERM) -> bool:
        return is_hermitian(self.matrix, tol)

    def is_cp(self, tol: float = TOL_HERM) -> bool:
        if not self.is_hermitian(tol):
            return False
        return bool(herm_eig(self.matrix)[0][-1] >= -tol)

    def is_tp(self, tol: float = TOL_HERM) -> bool:
        n_out = len(self.out_dims)
        reduced = partial_trace(self.matrix, self.shape, range(n_out, n_out + len(self.in_dims)))
        return bool(np.max(np.abs(reduced - np.eye(self.d_in) / self.d_in)) <= tol)


def _dims(dims: int | Sequence[int]) -> tuple[int, ...]:
    return (int(dims),) if np.isscalar(dims) else tuple(int(x) for x in dims)


def choi_from_kraus(kraus: Sequence[np.ndarray], in_dims, out_dims=None) -> ChoiState:
    """E = sum_i (K_i (x) 1)|Phi><Phi|(K_i (x) 1)^dag."""
    in_dims = _dims(in_dims)
    out_dims = in_dims if out_dims is None else _dims(out_dims)
    d_in = int(np.prod(in_dims))
    phi = max_entangled(d_in)
    ident = np.eye(d_in)
    e = np.zeros((int(np.prod(out_dims)) * d_in,) * 2, dtype=complex)
    for k in kraus:
        v = kron(as_matrix(k), ident) @ phi
        e += np.outer(v, v.conj())
    return ChoiState(e, in_dims, out_dims)


def choi_from_map(fn: Callable[[np.ndarray], np.ndarray], in_dims, out_dims=None) -> ChoiState:
    """Build E from a linear map by evaluating it on matrix units."""
    in_dims = _dims(in_dims)
    out_dims = in_dims if out_dims is None else _dims(out_dims)
    d_in, d_out = int(np.prod(in_dims)), int(np.prod(out_dims))
    t = np.zeros((d_out, d_in, d_out, d_in), dtype=complex)
    for j in range(d_in):
        for l in range(d_in):
            unit = np.zeros((d_in, d_in), dtype=complex)
            unit[j, l] = 1
            t[:, j, :, l] = fn(unit) / d_in
    n = d_out * d_in
    return ChoiState(t.reshape(n, n), in_dims, out_dims)


def choi_of_unitary(u, in_dims=None) -> ChoiState:
    """Pure Choi state (U (x) 1)|Phi> of the unitary channel rho -> U rho U^dag."""
    u = as_matrix(u)
    d = u.shape[0]
    if u.shape[1] != d or np.max(np.abs(u.conj().T @ u - np.eye(d))) > TOL_EIG:
        raise ValidationError("operator is not unitary")
    in_dims = (d,) if in_dims is None else _dims(in_dims)
    check_shape(in_dims, d)
    w = u.reshape(-1)  # sqrt(d) |Psi_U>, kept unnormalized for exact entries
    return ChoiState(np.outer(w, w.conj()) / d, in_dims, in_dims)


def unitary_choi_vector(u) -> np.ndarray:
    """|Psi_U> = (U (x) 1)|Phi>."""
    u = as_matrix(u)
    return kron(u, np.eye(u.shape[1])) @ max_entangled(u.shape[1])


def apply(e: ChoiState, rho) -> np.ndarray:
    """Apply the channel encoded by ``e`` to ``rho``."""
    rho = as_matrix(rho, e.d_in, e.d_in)
    t = e.matrix.reshape(e.d_out, e.d_in, e.d_out, e.d_in)
    return e.d_in * np.einsum("ijkl,jl->ik", t, rho)


def kraus_from_choi(e: ChoiState) -> list[np.ndarray]:
    """Kraus operators from the spectral decomposition of E (one per nonzero eigenvalue).

    Each eigenvector is rephased so its largest entry is real and positive.
    """
    w, v = herm_eig(e.matrix)
    if w[-1] < -TOL_HERM:
        raise NotCPError(f"Choi matrix has eigenvalue {w[-1]:.3e}")
    scale = np.sqrt(e.d_in)
    out = []
    for i, lam in enumerate(w):
        if lam > TOL_RANK:
            vec = v[:, i]
            lead = vec[np.argmax(np.abs(vec))]
            out.append(scale * np.sqrt(lam) * (vec * abs(lead) / lead).reshape(e.d_out, e.d_in))
    return out


def sandwich(e: ChoiState, b_out, c_out, b_in, c_in) -> ChoiState:
    """(B_out (x) B_in) E (C_out (x) C_in).

    The resulting map is rho -> B_out channel(B_in^T rho C_in^T) C_out.
    """
    left = kron(as_matrix(b_out, e.d_out, e.d_out), as_matrix(b_in, e.d_in, e.d_in))
    right = kron(as_matrix(c_out, e.d_out, e.d_out), as_matrix(c_in, e.d_in, e.d_in))
    return e.with_matrix(left @ e.matrix @ right)


def conjugate_by(e: ChoiState, pre, post) -> ChoiState:
    """Choi state of rho -> post channel(pre rho pre^dag) post^dag."""
    pre = as_matrix(pre, e.d_in, e.d_in)
    post = as_matrix(post, e.d_out, e.d_out)
    op = kron(post, pre.T)
    return e.with_matrix(op @ e.matrix @ op.conj().T)


def jamiolkowski_fidelity(e: ChoiState, u) -> float:
    """f = <Psi_U|E|Psi_U>."""
    u = as_matrix(u, e.d_out, e.d_in)
    if np.max(np.abs(u.conj().T @ u - np.eye(e.d_in))) > TOL_EIG:
        raise ValidationError("operator is not unitary")
    w = u.reshape(-1)
    return float(np.real(np.vdot(w, e.matrix @ w)) / e.d_in)


def average_fidelity(f: float, d: int) -> float:
    """Average gate fidelity from the Jamiolkowski fidelity."""
    return (f * d + 1) / (d + 1)


def trace_distance(e: ChoiState, f: ChoiState) -> float:
    if e.shape != f.shape or e.out_dims != f.out_dims:
        raise DimensionError("Choi states have different shapes")
    w, _ = herm_eig(e.matrix - f.matrix)
    return float(0.5 * np.sum(np.abs(w)))


def hilbert_schmidt(e: ChoiState, f: ChoiState) -> complex:
    """<E, F> = tr(E^dag F)."""
    return complex(np.vdot(e.matrix, f.matrix))


def isotropic_choi(d: int, f: float) -> ChoiState:
    """f P_Phi + (1 - f)(1 - P_Phi)/(d^2 - 1)."""
    phi = max_entangled(d)
    p = np.outer(phi, phi.conj())
    gamma = (np.eye(d * d) - p) / (d * d - 1)
    return ChoiState(f * p + (1 - f) * gamma, (d,), (d,))


def depolarizing_choi(d: int, alpha: float) -> ChoiState:
    """Choi state of rho -> alpha rho + (1 - alpha) tr(rho) 1/d."""
    phi = max_entangled(d)
    return ChoiState(alpha * np.outer(phi, phi.conj()) + (1 - alpha) * np.eye(d * d) / d**2, (d,), (d,))


def is_ppt(matrix, shape: Sequence[int], subsystems, tol: float = 1e-12) -> bool:
    """Positivity of the partial transpose over ``subsystems``."""
    pt = partial_transpose(matrix, shape, subsystems)
    return bool(herm_eig(pt)[0][-1] >= -tol)


def _isotropic_fidelity(e: ChoiState, tol: float) -> float | None:
    if e.parties != 1 or e.d_in != e.d_out:
        return None
    iso = isotropic_choi(e.d_in, 0.0)
    phi = max_entangled(e.d_in)
    f = float(np.real(np.vdot(phi, e.matrix @ phi)))
    ref = f * np.outer(phi, phi.conj()) + (1 - f) * iso.matrix
    return f if np.max(np.abs(ref - e.matrix)) <= tol else None


def is_entanglement_breaking(e: ChoiState, tol: float = 1e-12) -> bool:
    """Separability of E for isotropic states (f <= 1/d) or single-qubit channels (PPT)."""
    f = _isotropic_fidelity(e, TOL_HERM)
    if f is not None:
        return f <= 1 / e.d_in + tol
    if e.shape == (2, 2):
        return is_ppt(e.matrix, e.shape, 1, tol)
    raise DimensionError("entanglement-breaking test supports isotropic or single-qubit channels only")


@dataclass(frozen=True, eq=False)
class Purification:
    """Unitary on system (x) environment; the environment starts in |0>."""

    unitary: np.ndarray
    env_dim: int
    sys_dim: int

    def channel(self, rho) -> np.ndarray:
        env0 = np.zeros((self.env_dim, self.env_dim), dtype=complex)
        env0[0, 0] = 1
        full = self.unitary @ kron(as_matrix(rho), env0) @ self.unitary.conj().T
        return partial_trace(full, (self.sys_dim, self.env_dim), [0]) if self.env_dim > 1 else full


def purify(e: ChoiState) -> Purification:
    """Stinespring dilation U(|psi>|0>) = sum_c K_c|psi>|c>, completed to a unitary."""
    if e.d_in != e.d_out:
        raise DimensionError("purification needs equal input and output dimensions")
    if not e.is_tp():
        raise NotTPError("purification needs a trace-preserving channel")
    kraus = kraus_from_choi(e)
    r, d = len(kraus), e.d_in
    iso = np.stack(kraus, axis=1).reshape(d * r, d)  # rows (i, c), cols j
    if r == 1:
        return Purification(iso, 1, d)
    u = np.zeros((d * r, d * r), dtype=complex)
    first = [j * r for j in range(d)]
    rest = [c for c in range(d * r) if c % r]
    u[:, first] = iso
    u[:, rest] = scipy.linalg.null_space(iso.conj().T)
    return Purification(u, r, d)


# JSON persistence -----------------------------------------------------------


def format_number(x: float) -> str:
    return format(float(x), ".17g")


def format_matrix(m: np.ndarray) -> str:
    return "[" + ",".join("[" + ",".join(format_number(x) for x in row) + "]" for row in m) + "]"


def channel_to_json(e: ChoiState) -> str:
    return (
        "{"
        f'"in_dims":{json.dumps(list(e.in_dims))},'
        f'"out_dims":{json.dumps(list(e.out_dims))},'
        f'"choi_re":{format_matrix(e.matrix.real)},'
        f'"choi_im":{format_matrix(e.matrix.imag)}'
        "}\n"
    )


def channel_from_dict(data: dict) -> ChoiState:
    try:
        re = np.asarray(data["choi_re"], dtype=float)
        im = np.asarray(data["choi_im"], dtype=float)
        return ChoiState(re + 1j * im, tuple(data["in_dims"]), tuple(data["out_dims"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed channel JSON: {exc}") from exc


def load_channel(path: str | Path) -> ChoiState:
    return channel_from_dict(json.loads(Path(path).read_text()))


def save_channel(e: ChoiState, path: str | Path) -> None:
    Path(path).write_text(channel_to_json(e))
