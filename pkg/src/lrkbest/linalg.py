"""QR decomposition by Givens rotations, exact or CORDIC-driven.

Rotations run column by column, annihilating sub-diagonal entries from the
bottom row upward with rotations between adjacent rows. R ends up with a
nonnegative diagonal and exact zeros below it.

Only values are modelled; the systolic-array schedule of a hardware QR
changes latency but not results.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .fixedpoint import FLOAT_FMT, QFormat, fq, fq_array


class DecompositionError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CordicConfig:
    n_iterations: int = 24
    gain_compensation: str = "precomputed-constant"

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.gain_compensation not in ("precomputed-constant", "none"):
            raise ValueError(f"unknown gain compensation {self.gain_compensation!r}")


@dataclass
class QrResult:
    Q: np.ndarray
    R: np.ndarray


def cordic_gain(n_iterations: int) -> float:
    """Aggregate magnitude growth of ``n_iterations`` micro-rotations."""
    k = np.arange(n_iterations)
    return float(np.prod(np.sqrt(1.0 + 2.0 ** (-2.0 * k))))


@njit(cache=True)
def _cordic_gain(n):
    g = 1.0
    for k in range(n):
        g *= np.sqrt(1.0 + 2.0 ** (-2.0 * k))
    return g


@njit(cache=True)
def _rotate_exact(A, r0, r1, start, a, b, f):
    """Zero A[r1, start] against A[r0, start]; columns >= start are rotated."""
    r = np.hypot(a, b)
    c = fq(a / r, f)
    s = fq(b / r, f)
    for k in range(start + 1, A.shape[1]):
        x = A[r0, k]
        y = A[r1, k]
        A[r0, k] = fq(fq(c * x, f) + fq(s * y, f), f)
        A[r1, k] = fq(fq(c * y, f) - fq(s * x, f), f)
    A[r0, start] = fq(r, f)
    A[r1, start] = 0.0


@njit(cache=True)
def _rotate_cordic(A, r0, r1, start, n_iter, compensate, f):
    """Same as _rotate_exact but with shift-and-add micro-rotations.

    Directions are decided by vectoring the pivot pair and replayed on every
    other column of the two rows.
    """
    ncol = A.shape[1]
    if A[r0, start] < 0.0:
        # rotation by pi keeps the vectoring range inside +-90 degrees
        for k in range(start, ncol):
            A[r0, k] = -A[r0, k]
            A[r1, k] = -A[r1, k]
    p = 1.0
    for t in range(n_iter):
        d = -1.0 if A[r1, start] > 0.0 else 1.0
        for k in range(start, ncol):
            x = A[r0, k]
            y = A[r1, k]
            A[r0, k] = fq(x - d * fq(y * p, f), f)
            A[r1, k] = fq(y + d * fq(x * p, f), f)
        p *= 0.5
    if compensate:
        kc = fq(1.0 / _cordic_gain(n_iter), f)
        for k in range(start, ncol):
            A[r0, k] = fq(A[r0, k] * kc, f)
            A[r1, k] = fq(A[r1, k] * kc, f)
    A[r1, start] = 0.0


@njit(cache=True)
def givens_qr_inplace(W, n, use_cordic, n_iter, compensate, f):
    """Triangularize the first ``n`` columns of ``W`` in place.

    Columns after ``n`` are carried along (right-hand sides, or an identity
    block to accumulate Q^T).
    """
    m = W.shape[0]
    for j in range(n):
        for i in range(m - 1, j, -1):
            a = W[i - 1, j]
            b = W[i, j]
            if b == 0.0 and a >= 0.0:
                continue
            if use_cordic:
                _rotate_cordic(W, i - 1, i, j, n_iter, compensate, f)
            else:
                _rotate_exact(W, i - 1, i, j, a, b, f)
    for j in range(n):
        if W[j, j] < 0.0:
            for k in range(j, W.shape[1]):
                W[j, k] = -W[j, k]
        for i in range(j + 1, m):
            W[i, j] = 0.0


def _qr(A, cordic: CordicConfig | None, fmt: QFormat | None) -> QrResult:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < A.shape[1]:
        raise DecompositionError("QR needs a matrix with at least as many rows as columns")
    m, n = A.shape
    pk = FLOAT_FMT if fmt is None else fmt.packed()
    W = np.hstack([A, np.eye(m)])
    if fmt is not None:
        W = fq_array(W, pk)
    use_cordic = cordic is not None
    n_iter = cordic.n_iterations if use_cordic else 0
    compensate = use_cordic and cordic.gain_compensation == "precomputed-constant"
    givens_qr_inplace(W, n, use_cordic, n_iter, compensate, pk)
    R = np.triu(W[:n, :n])
    Q = W[:, n:].T[:, :n].copy()
    scale = np.linalg.norm(A)
    if scale == 0.0 or np.min(np.abs(np.diag(R))) <= 1e-12 * scale * max(m, n):
        raise DecompositionError("matrix is rank deficient")
    return QrResult(Q, R)


def qr_givens(A, fmt: QFormat | None = None) -> QrResult:
    """Thin QR ``A = Q R`` by exact Givens rotations."""
    return _qr(A, None, fmt)


def qr_cordic(A, cfg: CordicConfig = CordicConfig(), fmt: QFormat | None = None) -> QrResult:
    """Thin QR with every rotation realized as ``cfg.n_iterations`` CORDIC steps.

    With ``fmt`` given, every intermediate is rounded to that Q-format.
    """
    return _qr(A, cfg, fmt)


def apply_qt(Q, y_bar) -> np.ndarray:
    return np.asarray(Q).T @ np.asarray(y_bar, dtype=float)
