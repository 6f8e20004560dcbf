"""Dense complex linear algebra on small tensor-product spaces.

Matrices are plain ``numpy`` arrays. Multi-party shapes are tuples of
subsystem dimensions, ordered row-major (the first factor is the slowest
index).
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

TOL_HERM = 1e-9
TOL_EIG = 1e-10
TOL_RANK = 1e-10
TOL_FORM = 1e-8


class DimensionError(ValueError):
    """Raised when a matrix does not match the tensor shape it is given."""


class ValidationError(ValueError):
    """Raised when an input violates a numerical precondition."""


def as_matrix(m, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce ``m`` to a finite 2-d complex array, optionally checking its size."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    if rows is not None and a.shape[0] != rows:
        raise DimensionError(f"expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise DimensionError(f"expected {cols} columns, got {a.shape[1]}")
    return a


def check_shape(shape: Sequence[int], dim: int | None = None) -> tuple[int, ...]:
    """Validate a tensor shape and return it as a tuple."""
    shape = tuple(int(s) for s in shape)
    if not shape or any(s < 2 for s in shape):
        raise DimensionError(f"tensor factors must all be >= 2, got {shape}")
    if dim is not None and int(np.prod(shape)) != dim:
        raise DimensionError(f"shape {shape} does not match dimension {dim}")
    return shape


def kron(*factors) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors)."""
    return reduce(np.kron, [np.asarray(f, dtype=complex) for f in factors])


def _square(m, shape) -> tuple[np.ndarray, tuple[int, ...]]:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError("matrix must be square")
    return m, check_shape(shape, m.shape[0])


def partial_trace(m, shape: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    The kept subsystems stay in their original order.
    """
    m, shape = _square(m, shape)
    n = len(shape)
    keep = sorted(set(keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"subsystem index out of range for shape {shape}")
    t = m.reshape(shape + shape)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = [letters[n + i] if i in keep else row[i] for i in range(n)]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    res = np.einsum("".join(row) + "".join(col) + "->" + "".join(out), t)
    d = int(np.prod([shape[i] for i in keep])) if keep else 1
    return res.reshape(d, d)


def partial_transpose(m, shape: Sequence[int], subsystem: int | Iterable[int]) -> np.ndarray:
    """Transpose the indicated tensor factor(s) only."""
    m, shape = _square(m, shape)
    n = len(shape)
    subs = {subsystem} if isinstance(subsystem, (int, np.integer)) else set(subsystem)
    if any(s < 0 or s >= n for s in subs):
        raise DimensionError(f"subsystem index out of range for shape {shape}")
    axes = list(range(2 * n))
    for s in subs:
        axes[s], axes[n + s] = n + s, s
    d = m.shape[0]
    return m.reshape(shape + shape).transpose(axes).reshape(d, d)


def is_hermitian(m, tol: float = TOL_HERM) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def herm_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvector columns."""
    m = as_matrix(m)
    if not is_hermitian(m):
        raise ValidationError("matrix is not Hermitian within tolerance")
    h = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(h)
    return w[::-1], v[:, ::-1]


def mat_exp(m) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError("matrix must be square")
    return scipy.linalg.expm(m)
