"""The detector front end of one MIMO vector, in floating or fixed point:

    MMSE extension -> QR + LLL -> shift/scale -> QR of the reduced basis
    -> K-best search -> unshift + constellation quantization -> metrics

Fixed-point runs round every intermediate to the format of the variable
group it belongs to (channel/QR, LLL, PED, LLR) and use CORDIC rotations
and Newton-Raphson reciprocals in place of divisions and square roots.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .fixedpoint import FLOAT_FMT, QFormat, fq
from .kbest import kbest_kernel
from .lattice import RECIP_LUT, lll_kernel, nr_recip_kernel
from .linalg import givens_qr_inplace
from .model import get_scheme, modulate, quantize_to_constellation, real_symbols_to_bits

GROUPS = ("channel", "lll", "ped", "llr")

# Integer bits (sign included) per group, from range profiling of the float
# receiver on 8x8 QPSK between 2 and 4 dB (see wordlength.profile_pipeline).
PROFILED_INTEGER_BITS = {"channel": 6, "lll": 6, "ped": 6, "llr": 11}


@dataclass(frozen=True)
class Arithmetic:
    """Number formats per variable group; ``None`` means floating point."""

    channel: QFormat | None = None
    lll: QFormat | None = None
    ped: QFormat | None = None
    llr: QFormat | None = None
    cordic_iterations: int = 24
    nr_iterations: int = 3
    use_cordic: bool | None = None

    @classmethod
    def floating(cls, **kw) -> "Arithmetic":
        return cls(**kw)

    @classmethod
    def uniform(cls, fmt: QFormat, **kw) -> "Arithmetic":
        return cls(fmt, fmt, fmt, fmt, **kw)

    @classmethod
    def word_length(cls, wl: int, integer_bits=None, rounding: str = "nearest",
                    overflow: str = "saturate", **kw) -> "Arithmetic":
        """Every group ``wl`` bits wide, binary point placed by its integer bits."""
        if integer_bits is None:
            integer_bits = PROFILED_INTEGER_BITS
        if isinstance(integer_bits, int):
            integer_bits = {g: integer_bits for g in GROUPS}
        fmts = {g: QFormat(wl, wl - integer_bits[g], rounding, overflow) for g in GROUPS}
        return cls(**fmts, **kw)

    @property
    def is_fixed(self) -> bool:
        return any(getattr(self, g) is not None for g in GROUPS)

    @property
    def cordic(self) -> bool:
        return self.is_fixed if self.use_cordic is None else self.use_cordic

    def packed(self, group: str) -> np.ndarray:
        fmt = getattr(self, group)
        return FLOAT_FMT if fmt is None else fmt.packed()


@njit(cache=True)
def _detect_one(Hr, yr, alpha, K, delta, max_swaps, fch, flll, fped,
                use_cordic, n_iter, nr_iter, lut):
    m2, n = Hr.shape
    M = m2 + n
    Hb = np.zeros((M, n))
    for r in range(m2):
        for c in range(n):
            Hb[r, c] = fq(Hr[r, c], fch)
    a = fq(alpha, fch)
    for i in range(n):
        Hb[m2 + i, i] = a
    yq = np.zeros(M)
    for r in range(m2):
        yq[r] = fq(yr[r], fch)

    W = np.empty((M, n))
    for r in range(M):
        for c in range(n):
            W[r, c] = fq(Hb[r, c], flll)
    givens_qr_inplace(W, n, use_cordic, n_iter, True, flll)
    R0 = np.zeros((n, n))
    for r in range(n):
        for c in range(r, n):
            R0[r, c] = W[r, c]
    T, Ti, swaps = lll_kernel(R0, delta, max_swaps, flll, use_cordic, n_iter, nr_iter, lut)

    # reduced basis with the shifted received vector carried as column n
    W2 = np.zeros((M, n + 1))
    for r in range(M):
        for c in range(n):
            acc = 0.0
            for k in range(n):
                if T[k, c] != 0:
                    acc = fq(acc + Hb[r, k] * T[k, c], fch)
            W2[r, c] = acc
        rowsum = 0.0
        for k in range(n):
            rowsum = fq(rowsum + Hb[r, k], fch)
        W2[r, n] = fq(fq(yq[r] - rowsum, fch) * 0.5, fch)
    givens_qr_inplace(W2, n, use_cordic, n_iter, True, fch)
    R = np.zeros((n, n))
    yt = np.zeros(n)
    inv_diag = np.zeros(n)
    fixed = fch[0] != 0.0 or fped[0] != 0.0
    for r in range(n):
        for c in range(r, n):
            R[r, c] = fq(W2[r, c], fped)
        yt[r] = fq(W2[r, n], fped)
        if R[r, r] == 0.0:
            # quantized to nothing: keep the level searchable
            R[r, r] = 1.0 / fped[1] if fped[0] != 0.0 else 1e-300
        if fixed and fped[0] != 0.0:
            inv_diag[r] = nr_recip_kernel(R[r, r], nr_iter, fped, lut)
        else:
            inv_diag[r] = 1.0 / R[r, r]
    z, ped, per_level = kbest_kernel(R, yt, K, inv_diag, fped)
    return T, z, ped, per_level, swaps


@njit(cache=True)
def detect_block_kernel(Hs, ys, alpha, K, delta, max_swaps, fch, flll, fped,
                        use_cordic, n_iter, nr_iter, lut):
    V, m2, n = Hs.shape
    Ts = np.zeros((V, n, n), dtype=np.int64)
    zs = np.zeros((V, K, n), dtype=np.int64)
    peds = np.zeros((V, K))
    nodes = np.zeros(V, dtype=np.int64)
    swaps = np.zeros(V, dtype=np.int64)
    for v in range(V):
        T, z, ped, per_level, sw = _detect_one(Hs[v], ys[v], alpha, K, delta, max_swaps,
                                               fch, flll, fped, use_cordic, n_iter, nr_iter, lut)
        Ts[v] = T
        zs[v] = z
        peds[v] = ped
        nodes[v] = per_level.sum()
        swaps[v] = sw
    return Ts, zs, peds, nodes, swaps


@njit(cache=True)
def metrics_kernel(Hs, ys, S, fch, fllr):
    """``||y - H s||^2`` per vector and candidate, rounded in the LLR format."""
    V, m2, n = Hs.shape
    L = S.shape[1]
    out = np.zeros((V, L))
    for v in range(V):
        for l in range(L):
            acc = 0.0
            for r in range(m2):
                e = fq(ys[v, r], fch)
                for c in range(n):
                    e = fq(e - fq(Hs[v, r, c], fch) * S[v, l, c], fch)
                acc = fq(acc + fq(e * e, fllr), fllr)
            out[v, l] = acc
    return out


@dataclass
class BlockDetection:
    """Candidate lists of V received vectors."""

    symbols: np.ndarray  # (V, L, 2 n_tx) constellation points
    metrics: np.ndarray  # (V, L)
    peds: np.ndarray  # (V, L)
    nodes: np.ndarray  # (V,) expansions per search
    swaps: np.ndarray  # (V,) LLL swaps, -1 where the swap bound was hit
    transforms: np.ndarray  # (V, 2 n_tx, 2 n_tx)

    def bits(self, scheme) -> np.ndarray:
        return real_symbols_to_bits(self.symbols, scheme)

    def best_symbols(self) -> np.ndarray:
        """Per vector, the candidate with the smallest true metric."""
        idx = np.argmin(self.metrics, axis=1)
        return self.symbols[np.arange(len(idx)), idx]


def candidate_metrics(H_real, y_real, S, arith: Arithmetic = Arithmetic()) -> np.ndarray:
    """``||y - H s||^2`` of candidates ``S`` (V, L, 2 n_tx), shape (V, L)."""
    return metrics_kernel(np.ascontiguousarray(H_real, dtype=float),
                          np.ascontiguousarray(y_real, dtype=float),
                          np.ascontiguousarray(S, dtype=float),
                          arith.packed("channel"), arith.packed("llr"))


def bits_rescorer(H_real, y_real, scheme, arith: Arithmetic = Arithmetic()):
    """Callable mapping hard bits (V, B) to their metrics (V,)."""
    scheme = get_scheme(scheme)

    def rescore(bits):
        V = bits.shape[0]
        sc = modulate(np.asarray(bits).ravel(), scheme).reshape(V, -1)
        S = np.concatenate([sc.real, sc.imag], axis=1)[:, None, :]
        return candidate_metrics(H_real, y_real, S, arith)[:, 0]

    return rescore


def mmse_alpha(sigma2: float, scheme) -> float:
    """Regularization ``sqrt(N0 / (2 sigma_s^2))`` with ``N0 = 2 sigma2``."""
    return float(np.sqrt(sigma2 / get_scheme(scheme).real_symbol_variance))


def detect_block(H_real, y_real, sigma2: float, scheme, K: int, arith: Arithmetic = Arithmetic(),
                 delta: float = 0.75, max_swaps: int = 100000) -> BlockDetection:
    """Run the detector front end on a stack of real-valued systems.

    ``H_real`` is (V, 2 n_rx, 2 n_tx), ``y_real`` (V, 2 n_rx).
    """
    scheme = get_scheme(scheme)
    Hs = np.ascontiguousarray(H_real, dtype=float)
    ys = np.ascontiguousarray(y_real, dtype=float)
    if Hs.ndim == 2:
        Hs, ys = Hs[None], ys[None]
    Ts, zs, peds, nodes, swaps = detect_block_kernel(
        Hs, ys, mmse_alpha(sigma2, scheme), int(K), float(delta), int(max_swaps),
        arith.packed("channel"), arith.packed("lll"), arith.packed("ped"),
        arith.cordic, arith.cordic_iterations, arith.nr_iterations, RECIP_LUT)
    s_hat = 2.0 * np.einsum("vij,vlj->vli", Ts, zs) + 1.0
    S = quantize_to_constellation(s_hat, scheme)
    metrics = candidate_metrics(Hs, ys, S, arith)
    return BlockDetection(S, metrics, peds, nodes, swaps, Ts)
