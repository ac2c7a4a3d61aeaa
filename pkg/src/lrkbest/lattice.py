"""LLL reduction of the (MMSE-extended) channel basis.

The reduction works on the R factor of a QR decomposition: size reduction
subtracts integer multiples of earlier columns, a failed Lovasz test swaps
two columns and one Givens rotation restores the triangle. Every column
operation is mirrored on an integer transform ``T`` and, inversely, on
``T_inv`` so both stay exact.

In fixed-point mode divisions become Newton-Raphson reciprocals and the
restoring rotations become CORDIC rotations, all rounded to the LLL format.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

from .fixedpoint import FLOAT_FMT, QFormat, fq, fq_array
from .linalg import CordicConfig, _rotate_cordic, _rotate_exact, givens_qr_inplace


class LatticeError(ValueError):
    pass


class NonTerminationError(RuntimeError):
    pass


@dataclass
class LatticeBasis:
    B: np.ndarray

    def __post_init__(self):
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))


@dataclass
class UnimodularTransform:
    T: np.ndarray
    T_inv: np.ndarray


@dataclass(frozen=True)
class LllParams:
    delta: float = 0.75
    max_swaps: int | None = None

    def __post_init__(self):
        if not 0.25 < self.delta <= 1.0:
            raise ValueError("delta must lie in (1/4, 1]")
        if self.max_swaps is not None and self.max_swaps < 1:
            raise ValueError("max_swaps must be positive")


def default_max_swaps(B: np.ndarray) -> int:
    n = B.shape[1]
    s = np.linalg.svd(B, compute_uv=False)
    cond = s[0] / s[-1] if s[-1] > 0 else 1e16
    return int(10 * n * n * max(1.0, math.log2(max(cond, 2.0)))) + 10 * n


# 16-entry seed table for the mantissa reciprocal, m in [1, 2)
RECIP_LUT = 1.0 / (1.0 + (np.arange(16) + 0.5) / 16.0)


@njit(cache=True)
def nr_recip_kernel(x, n_iter, f, lut):
    """Newton-Raphson reciprocal ``r <- r (2 - x r)`` on the normalized mantissa.

    ``x = m 2^e`` with ``m`` in [1, 2). Floating mode seeds with
    ``2^-e (3 - m) / 2`` (exact at both ends of the octave, relative error
    at most 1/8); fixed mode seeds from a 16-entry table and rounds every
    step to the format ``f``.
    """
    neg = x < 0.0
    ax = -x if neg else x
    mant, ex = math.frexp(ax)
    m = mant * 2.0
    e = ex - 1
    if f[0] == 0.0:
        r = (3.0 - m) * 0.5
        for _ in range(n_iter):
            r = r * (2.0 - m * r)
    else:
        # mantissa datapath: at least the format's fraction bits plus headroom
        g = np.empty(7)
        g[0] = 1.0
        g[1] = f[1] * 2.0
        g[2] = -4.0 * g[1]
        g[3] = 4.0 * g[1] - 1.0
        g[4] = f[4]
        g[5] = 0.0
        g[6] = 1.0 / g[1]
        mq = fq(m, g)
        idx = int((m - 1.0) * 16.0)
        if idx > 15:
            idx = 15
        r = fq(lut[idx], g)
        for _ in range(n_iter):
            r = fq(r * fq(2.0 - fq(mq * r, g), g), g)
    out = math.ldexp(r, -e)
    if neg:
        out = -out
    return fq(out, f)


def nr_reciprocal(x: float, n_iter: int = 3, fmt: QFormat | None = None) -> float:
    """Approximate ``1/x`` with ``n_iter`` Newton-Raphson steps."""
    if x == 0:
        raise ZeroDivisionError("reciprocal of zero")
    pk = FLOAT_FMT if fmt is None else fmt.packed()
    return float(nr_recip_kernel(float(x), int(n_iter), pk, RECIP_LUT))


@njit(cache=True)
def _round_half_away(x):
    if x >= 0.0:
        return np.floor(x + 0.5)
    return -np.floor(-x + 0.5)


@njit(cache=True)
def lll_kernel(R, delta, max_swaps, f, use_cordic, n_iter, nr_iter, lut):
    """Reduce the upper-triangular ``R`` in place.

    Returns ``(T, T_inv, swaps)``; ``swaps == -1`` signals that ``max_swaps``
    was exceeded.
    """
    n = R.shape[1]
    T = np.eye(n, dtype=np.int64)
    Ti = np.eye(n, dtype=np.int64)
    fixed = f[0] != 0.0
    swaps = 0
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            if R[j, j] == 0.0:
                continue
            if fixed:
                ratio = fq(R[j, k] * nr_recip_kernel(R[j, j], nr_iter, f, lut), f)
            else:
                ratio = R[j, k] / R[j, j]
            mu = _round_half_away(ratio)
            if mu != 0.0:
                imu = np.int64(mu)
                for i in range(j + 1):
                    R[i, k] = fq(R[i, k] - fq(mu * R[i, j], f), f)
                for i in range(n):
                    T[i, k] -= imu * T[i, j]
                    Ti[j, i] += imu * Ti[k, i]
        a = R[k - 1, k - 1]
        lhs = fq(delta * fq(a * a, f), f)
        rhs = fq(fq(R[k - 1, k] * R[k - 1, k], f) + fq(R[k, k] * R[k, k], f), f)
        if lhs > rhs:
            for i in range(n):
                tmp = R[i, k - 1]
                R[i, k - 1] = R[i, k]
                R[i, k] = tmp
                t2 = T[i, k - 1]
                T[i, k - 1] = T[i, k]
                T[i, k] = t2
                t3 = Ti[k - 1, i]
                Ti[k - 1, i] = Ti[k, i]
                Ti[k, i] = t3
            # restore the triangle on rows k-1, k
            if use_cordic:
                _rotate_cordic(R, k - 1, k, k - 1, n_iter, True, f)
            else:
                _rotate_exact(R, k - 1, k, k - 1, R[k - 1, k - 1], R[k, k - 1], f)
            if R[k - 1, k - 1] < 0.0:
                for i in range(k - 1, n):
                    R[k - 1, i] = -R[k - 1, i]
            if R[k, k] < 0.0:
                for i in range(k, n):
                    R[k, i] = -R[k, i]
            swaps += 1
            if swaps > max_swaps:
                return T, Ti, -1
            k = k - 1 if k > 1 else 1
        else:
            k += 1
    return T, Ti, swaps


@dataclass
class LllResult:
    reduced: LatticeBasis
    transform: UnimodularTransform
    R: np.ndarray
    swaps: int


def lll_reduce(basis, params: LllParams = LllParams(), fmt: QFormat | None = None,
               cordic: CordicConfig | None = None, nr_iterations: int = 3) -> LllResult:
    """LLL-reduce the columns of ``basis``.

    Returns the reduced basis ``B T`` together with ``T`` and ``T^-1``. In
    floating mode the triangle is restored with exact Givens rotations;
    ``fmt`` switches to fixed-point with CORDIC (24 iterations unless
    ``cordic`` says otherwise).
    """
    B = basis.B if isinstance(basis, LatticeBasis) else np.atleast_2d(np.asarray(basis, dtype=float))
    m, n = B.shape
    if m < n or np.linalg.matrix_rank(B) < n:
        raise LatticeError("basis must have full column rank")
    max_swaps = params.max_swaps if params.max_swaps is not None else default_max_swaps(B)
    pk = FLOAT_FMT if fmt is None else fmt.packed()
    if fmt is not None and cordic is None:
        cordic = CordicConfig()
    use_cordic = cordic is not None
    n_iter = cordic.n_iterations if use_cordic else 0
    W = np.ascontiguousarray(B, dtype=float)
    if fmt is not None:
        W = fq_array(W, pk)
    givens_qr_inplace(W, n, use_cordic, n_iter, True, pk)
    R = np.ascontiguousarray(np.triu(W[:n, :n]))
    T, Ti, swaps = lll_kernel(R, params.delta, max_swaps, pk, use_cordic, n_iter,
                              nr_iterations, RECIP_LUT)
    if swaps < 0:
        raise NonTerminationError(f"LLL exceeded {max_swaps} swaps")
    return LllResult(LatticeBasis(B @ T), UnimodularTransform(T, Ti), R, swaps)


# ------------------------------------------------------------ verification

def gram_schmidt(B: np.ndarray):
    """Gram-Schmidt vectors (columns) and coefficients ``mu[i, j]`` for i > j."""
    B = np.asarray(B, dtype=float)
    n = B.shape[1]
    Bs = np.zeros_like(B)
    mu = np.zeros((n, n))
    for i in range(n):
        v = B[:, i].copy()
        for j in range(i):
            mu[i, j] = B[:, i] @ Bs[:, j] / (Bs[:, j] @ Bs[:, j])
            v -= mu[i, j] * Bs[:, j]
        Bs[:, i] = v
    return Bs, mu


def integer_inverse(T) -> np.ndarray | None:
    """Exact inverse of an integer matrix if it is integral, else None."""
    T = [[Fraction(int(v)) for v in row] for row in np.asarray(T)]
    n = len(T)
    aug = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(T)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if piv is None:
            return None
        aug[c], aug[piv] = aug[piv], aug[c]
        p = aug[c][c]
        aug[c] = [v / p for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                fac = aug[r][c]
                aug[r] = [a - fac * b for a, b in zip(aug[r], aug[c])]
    inv = [row[n:] for row in aug]
    if any(v.denominator != 1 for row in inv for v in row):
        return None
    return np.array([[int(v) for v in row] for row in inv], dtype=np.int64)


@dataclass
class ReductionReport:
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def __bool__(self):
        return self.ok


def verify_reduction(original, reduced, T, delta: float = 0.75, tol: float = 1e-10) -> ReductionReport:
    """Itemized LLL checks: reconstruction, unimodularity, size reduction, Lovasz.

    ``tol`` absorbs floating-point rounding in the Gram-Schmidt coefficients.
    """
    B0 = original.B if isinstance(original, LatticeBasis) else np.asarray(original, dtype=float)
    B1 = reduced.B if isinstance(reduced, LatticeBasis) else np.asarray(reduced, dtype=float)
    T = np.asarray(T.T if isinstance(T, UnimodularTransform) else T)
    report = ReductionReport()
    integral = np.all(np.asarray(T) == np.round(T))
    Ti = integer_inverse(np.round(T).astype(np.int64)) if integral else None
    report.checks["unimodular"] = bool(integral and Ti is not None)
    scale = max(np.linalg.norm(B1), 1e-300)
    report.checks["reconstruction"] = bool(np.linalg.norm(B0 @ T - B1) <= tol * scale)
    Bs, mu = gram_schmidt(B1)
    n = B1.shape[1]
    low = np.tril_indices(n, -1)
    report.checks["size_reduced"] = bool(np.all(np.abs(mu[low]) <= 0.5 + 1e-9))
    norms = np.einsum("ij,ij->j", Bs, Bs)
    lovasz = True
    for k in range(1, n):
        if delta * norms[k - 1] > norms[k] + mu[k, k - 1] ** 2 * norms[k - 1] + tol * norms[k - 1]:
            lovasz = False
            break
    report.checks["lovasz"] = lovasz
    return report


def orthogonality_defect(B) -> float:
    B = np.asarray(B, dtype=float)
    _, logdet = np.linalg.slogdet(B.T @ B)
    return float(np.exp(np.sum(np.log(np.linalg.norm(B, axis=0))) - 0.5 * logdet))
