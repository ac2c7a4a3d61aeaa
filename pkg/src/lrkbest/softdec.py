"""Soft output from the candidate list, layered min-sum LDPC decoding and the
outer detector/decoder loop.

LLR sign convention: positive means bit 0 is more likely. A bit value b
maps to the antipodal label x = 1 - 2b.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from numba import njit

from .fixedpoint import FLOAT_FMT, QFormat, fq

DEFAULT_CLIP = 25.0


class LlrInputError(ValueError):
    pass


# ------------------------------------------------------------------ Eq. 11

@njit(cache=True)
def llr_kernel(cand_x, metrics, priors, inv_sigma2, clip, empty, f, out):
    """Max-log extrinsic LLRs of one received vector.

    cand_x: (L, B) antipodal labels; metrics: (L,) ||y - H s||^2;
    priors: (B,) a-priori LLRs; ``inv_sigma2 < 0`` marks a noiseless channel.
    Bits on which every candidate agrees get ``+-empty``.
    """
    L, B = cand_x.shape
    base = np.empty(L)
    psum = np.empty(L)
    dmin = metrics[0]
    for l in range(1, L):
        if metrics[l] < dmin:
            dmin = metrics[l]
    for l in range(L):
        # the common offset dmin cancels between the two maxima
        if inv_sigma2 < 0.0:
            base[l] = 0.0 if metrics[l] == dmin else -np.inf
        else:
            base[l] = -fq(fq(metrics[l] - dmin, f) * inv_sigma2, f)
        acc = 0.0
        for k in range(B):
            acc = fq(acc + cand_x[l, k] * priors[k], f)
        psum[l] = acc
    for k in range(B):
        mp = -np.inf
        mm = -np.inf
        has_p = False
        has_m = False
        for l in range(L):
            v = base[l] + fq(psum[l] - cand_x[l, k] * priors[k], f)
            if cand_x[l, k] > 0:
                has_p = True
                if v > mp:
                    mp = v
            else:
                has_m = True
                if v > mm:
                    mm = v
        if not has_m:
            out[k] = empty
        elif not has_p:
            out[k] = -empty
        else:
            val = 0.5 * (mp - mm)
            if val > clip:
                val = clip
            elif val < -clip:
                val = -clip
            out[k] = fq(val, f)
    return out


def llr_extrinsic(cand_x, metrics, priors, sigma2: float, clip: float = DEFAULT_CLIP,
                  fmt: QFormat | None = None, empty: float | None = None) -> np.ndarray:
    """Extrinsic LLR per bit from a candidate list.

    ``L_E(k) = 1/2 max_{x_k=+1} {-d/sigma2 + x_[k]^T L_A,[k]}
    - 1/2 max_{x_k=-1} {...}`` where ``d = ||y - H s||^2`` and ``x_[k]``
    omits bit k. If every candidate agrees on bit k the result is ``+-empty``
    (default ``clip``).
    """
    cand_x = np.atleast_2d(np.asarray(cand_x, dtype=float))
    metrics = np.atleast_1d(np.asarray(metrics, dtype=float))
    if cand_x.shape[0] == 0:
        raise LlrInputError("candidate list is empty")
    if metrics.shape[0] != cand_x.shape[0]:
        raise LlrInputError("one metric per candidate is required")
    priors = np.zeros(cand_x.shape[1]) if priors is None else np.asarray(priors, dtype=float)
    pk = FLOAT_FMT if fmt is None else fmt.packed()
    inv = -1.0 if sigma2 == 0 else fq(1.0 / sigma2, pk)
    out = np.empty(cand_x.shape[1])
    return llr_kernel(np.ascontiguousarray(cand_x), np.ascontiguousarray(metrics),
                      np.ascontiguousarray(priors), inv, float(clip),
                      float(clip if empty is None else min(empty, clip)), pk, out)


def bits_to_antipodal(bits) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


# ------------------------------------------------------------------ LDPC

class LdpcError(ValueError):
    pass


def _gf2_rref(H: np.ndarray):
    """Row-reduce a binary matrix; returns (reduced rows, pivot columns)."""
    A = (np.asarray(H, dtype=np.uint8) & 1).copy()
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        mask = A[:, c].astype(bool)
        mask[r] = False
        A[mask] ^= A[r]
        pivots.append(c)
        r += 1
    return A[:r], np.array(pivots, dtype=np.int64)


@dataclass
class LdpcCode:
    """Binary LDPC code given by its parity-check matrix."""

    H: np.ndarray
    max_iterations: int = 20
    scaling: float = 0.75
    name: str = ""
    _enc: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=np.uint8)
        if not 0 < self.scaling <= 1:
            raise LdpcError("min-sum scaling must lie in (0, 1]")
        rows, cols = np.nonzero(self.H)
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        self.row_ptr = np.zeros(self.H.shape[0] + 1, dtype=np.int64)
        np.add.at(self.row_ptr, rows + 1, 1)
        self.row_ptr = np.cumsum(self.row_ptr)
        self.col_idx = cols.astype(np.int64)

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def rank(self) -> int:
        return len(self._encoder()[1])

    @property
    def k(self) -> int:
        return self.n - self.rank

    def _encoder(self):
        if self._enc is None:
            A, pivots = _gf2_rref(self.H)
            info = np.setdiff1d(np.arange(self.n), pivots)
            self._enc = (A[:, info].astype(np.int64), pivots, info)
        return self._enc

    @property
    def info_positions(self) -> np.ndarray:
        return self._encoder()[2]

    def encode(self, info_bits) -> np.ndarray:
        P, pivots, info = self._encoder()
        u = np.asarray(info_bits, dtype=np.int64)
        if u.shape[-1] != info.size:
            raise LdpcError(f"expected {info.size} information bits, got {u.shape[-1]}")
        c = np.zeros(u.shape[:-1] + (self.n,), dtype=np.int64)
        c[..., info] = u
        c[..., pivots] = (u @ P.T) % 2
        return c

    def syndrome(self, bits) -> np.ndarray:
        return (self.H.astype(np.int64) @ np.asarray(bits, dtype=np.int64)) % 2

    def is_codeword(self, bits) -> bool:
        return not np.any(self.syndrome(bits))

    # sparse text format: one parity row per line, column indices of its ones
    @classmethod
    def from_text(cls, text: str, **kw) -> "LdpcCode":
        rows = []
        n = None
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("n="):
                        n = int(tok[2:])
                continue
            rows.append([int(t) for t in line.split()])
        if not rows:
            raise LdpcError("parity file has no rows")
        width = max(max(r) for r in rows if r) + 1
        n = width if n is None else n
        if width > n:
            raise LdpcError(f"column index {width - 1} out of range for n={n}")
        H = np.zeros((len(rows), n), dtype=np.uint8)
        for i, r in enumerate(rows):
            H[i, r] = 1
        return cls(H, **kw)

    @classmethod
    def load(cls, path, **kw) -> "LdpcCode":
        path = str(path)
        if path.startswith("builtin:"):
            name = path.split(":", 1)[1]
            text = resources.files("lrkbest.data").joinpath(f"{name}.txt").read_text()
            return cls.from_text(text, name=name, **kw)
        return cls.from_text(Path(path).read_text(), name=Path(path).stem, **kw)

    def to_text(self) -> str:
        lines = [f"# n={self.n}"]
        for row in self.H:
            lines.append(" ".join(str(i) for i in np.nonzero(row)[0]))
        return "\n".join(lines) + "\n"


@njit(cache=True)
def _minsum_kernel(llr_in, row_ptr, col_idx, max_iter, scale, f):
    n = llr_in.size
    m = row_ptr.size - 1
    P = np.empty(n)
    for i in range(n):
        P[i] = fq(llr_in[i], f)
    Rm = np.zeros(col_idx.size)
    tmp = np.zeros(col_idx.size)
    for it in range(max_iter):
        for r in range(m):
            min1 = np.inf
            min2 = np.inf
            idx = -1
            sgn = 1.0
            for e in range(row_ptr[r], row_ptr[r + 1]):
                t = fq(P[col_idx[e]] - Rm[e], f)
                tmp[e] = t
                a = abs(t)
                if a < min1:
                    min2 = min1
                    min1 = a
                    idx = e
                elif a < min2:
                    min2 = a
                if t < 0.0:
                    sgn = -sgn
            for e in range(row_ptr[r], row_ptr[r + 1]):
                mag = min2 if e == idx else min1
                s = -sgn if tmp[e] < 0.0 else sgn
                msg = s * fq(scale * mag, f)
                Rm[e] = msg
                P[col_idx[e]] = fq(tmp[e] + msg, f)
        ok = True
        for r in range(m):
            parity = 0
            for e in range(row_ptr[r], row_ptr[r + 1]):
                v = P[col_idx[e]]
                if v == 0.0:
                    ok = False
                    break
                if v < 0.0:
                    parity ^= 1
            if parity or not ok:
                ok = False
                break
        if ok:
            return P, True, it + 1
    return P, False, max_iter


def ldpc_decode(llr_in, code: LdpcCode, clip: float = DEFAULT_CLIP, fmt: QFormat | None = None):
    """Layered normalized min-sum. Returns (posterior LLRs, converged, iterations).

    Stops as soon as the hard decision satisfies every check. A zero LLR is
    an undecided bit and never satisfies a check.
    """
    llr_in = np.ascontiguousarray(llr_in, dtype=float)
    if llr_in.shape != (code.n,):
        raise LlrInputError(f"expected {code.n} LLRs, got shape {llr_in.shape}")
    pk = FLOAT_FMT if fmt is None else fmt.packed()
    P, ok, it = _minsum_kernel(llr_in, code.row_ptr, code.col_idx, code.max_iterations,
                               code.scaling, pk)
    return np.clip(P, -clip, clip), bool(ok), int(it)


# ------------------------------------------------------------------ outer loop

@dataclass(frozen=True)
class IterationConfig:
    max_outer_iterations: int = 4
    epsilon: float = 0.01
    clip: float = DEFAULT_CLIP
    empty_llr: float | None = None  # unanimous-bit magnitude, None = clip
    add_decision: bool = True

    def __post_init__(self):
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.clip > 0:
            raise ValueError("clip must be positive")
        if self.empty_llr is not None and not self.empty_llr > 0:
            raise ValueError("empty_llr must be positive")

    @property
    def empty(self) -> float:
        return self.clip if self.empty_llr is None else min(self.empty_llr, self.clip)


@dataclass
class BlockCandidates:
    """Candidate lists of all MIMO vectors carrying one codeword.

    ``cand_x`` is (V, L, B) antipodal labels in transmit order, ``metrics``
    (V, L) holds ``||y - H s||^2`` per candidate. ``rescore`` maps hard
    bits (V, B) to their metrics (V,); without it the decoder's decision
    cannot join the list.
    """

    cand_x: np.ndarray
    metrics: np.ndarray
    sigma2: float
    rescore: object = None


@dataclass
class DecodeResult:
    hard_bits: np.ndarray
    iterations: int
    llr_snapshots: list
    hard_per_iteration: list


def iterate_decode(cands: BlockCandidates, code: LdpcCode, cfg: IterationConfig = IterationConfig(),
                   interleaver=None, fmt: QFormat | None = None) -> DecodeResult:
    """Exchange extrinsic LLRs between the list detector and the LDPC decoder.

    Each outer iteration rebuilds the detector list: the K-best candidates
    plus, from the second iteration on, the vector the decoder currently
    decides on (when ``cands.rescore`` is given and ``cfg.add_decision``).
    The list is scored with the decoder's extrinsic output as priors. The
    loop ends when the mean absolute change of the decoder posterior falls
    below ``cfg.epsilon`` (the state before the first pass is all zeros) or
    after ``cfg.max_outer_iterations``. Hard decisions are the signs of the
    last posterior.
    """
    V, L, B = cands.cand_x.shape
    n = V * B
    if n != code.n:
        raise LlrInputError(f"{V} vectors x {B} bits do not fill a length-{code.n} codeword")
    perm = np.arange(n) if interleaver is None else np.asarray(interleaver)
    pk = FLOAT_FMT if fmt is None else fmt.packed()
    sigma2 = cands.sigma2
    inv = -1.0 if sigma2 == 0 else fq(1.0 / sigma2, pk)
    clip, empty = float(cfg.clip), float(cfg.empty)
    augment = cfg.add_decision and cands.rescore is not None
    la = np.zeros(n)
    prev = np.zeros(n)
    snapshots, hards = [], []
    le = np.empty((V, B))
    cand_x = np.zeros((V, L + 1, B))
    cand_x[:, :L] = cands.cand_x
    metrics = np.zeros((V, L + 1))
    metrics[:, :L] = cands.metrics
    hard_tx = None
    it = 0
    for it in range(1, cfg.max_outer_iterations + 1):
        la_tx = la[perm].reshape(V, B)
        use = L
        if augment and hard_tx is not None:
            cand_x[:, L] = 1.0 - 2.0 * hard_tx
            metrics[:, L] = cands.rescore(hard_tx)
            use = L + 1
        for v in range(V):
            llr_kernel(cand_x[v, :use], metrics[v, :use], la_tx[v], inv, clip, empty, pk, le[v])
        llr_code = np.empty(n)
        llr_code[perm] = le.ravel()
        post, _, _ = ldpc_decode(llr_code, code, clip, fmt)
        snapshots.append(post)
        hard = (post < 0).astype(np.int8)
        hards.append(hard)
        hard_tx = hard[perm].reshape(V, B)
        la = np.clip(post - llr_code, -clip, clip)
        if np.mean(np.abs(post - prev)) < cfg.epsilon:
            break
        prev = post
    return DecodeResult(hards[-1], it, snapshots, hards)
