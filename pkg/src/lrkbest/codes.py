"""Construction of the shipped quasi-cyclic LDPC codes.

The parity part of the base matrix has the dual-diagonal layout used by the
IEEE 802.11n codes (one weight-3 column followed by a staircase), so the
code is encodable and full rank. Circulant shifts of the information part
are drawn at random and rejected when they close a length-4 cycle.
"""
from __future__ import annotations

import numpy as np

from .softdec import LdpcCode, _gf2_rref


def _creates_4cycle(base, r, c, s, Z):
    rows, cols = base.shape
    for r2 in range(rows):
        if r2 == r or base[r2, c] < 0:
            continue
        for c2 in range(cols):
            if c2 == c or base[r, c2] < 0 or base[r2, c2] < 0:
                continue
            if (s - base[r, c2] + base[r2, c2] - base[r2, c]) % Z == 0:
                return True
    return False


def dual_diagonal_base(n_rows: int, info_degrees, Z: int, seed: int = 0,
                       max_tries: int = 200) -> np.ndarray:
    """Base matrix of shifts (-1 = zero block) with a dual-diagonal parity part."""
    rng = np.random.default_rng(seed)
    n_info = len(info_degrees)
    for _ in range(max_tries):
        base = -np.ones((n_rows, n_info + n_rows), dtype=np.int64)
        mid = n_rows // 2
        base[0, n_info] = 1
        base[mid, n_info] = 0
        base[n_rows - 1, n_info] = 1
        for j in range(1, n_rows):
            base[j - 1, n_info + j] = 0
            base[j, n_info + j] = 0
        ok = True
        row_load = (base >= 0).sum(axis=1).astype(float)
        for c in range(n_info):
            # prefer lightly loaded rows to keep check degrees even
            weights = np.exp(-row_load)
            rows = rng.choice(n_rows, size=info_degrees[c], replace=False, p=weights / weights.sum())
            for r in rows:
                for _attempt in range(50):
                    s = int(rng.integers(Z))
                    if not _creates_4cycle(base, r, c, s, Z):
                        base[r, c] = s
                        break
                else:
                    ok = False
                    break
                row_load[r] += 1
            if not ok:
                break
        if ok and not _has_4cycle(base, Z):
            return base
    raise RuntimeError("could not place circulants without 4-cycles")


def _has_4cycle(base, Z):
    rows, cols = base.shape
    for r1 in range(rows):
        for r2 in range(r1 + 1, rows):
            both = np.nonzero((base[r1] >= 0) & (base[r2] >= 0))[0]
            for i, c1 in enumerate(both):
                for c2 in both[i + 1:]:
                    if (base[r1, c1] - base[r1, c2] + base[r2, c2] - base[r2, c1]) % Z == 0:
                        return True
    return False


def expand_base(base: np.ndarray, Z: int) -> np.ndarray:
    rows, cols = base.shape
    H = np.zeros((rows * Z, cols * Z), dtype=np.uint8)
    eye = np.eye(Z, dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            s = base[r, c]
            if s >= 0:
                H[r * Z:(r + 1) * Z, c * Z:(c + 1) * Z] = np.roll(eye, s, axis=1)
    return H


def qc576(seed: int = 2015) -> LdpcCode:
    """Rate-1/2, n = 576 (Z = 24) code; 576 bits fill whole 8x8 QPSK/16QAM/64QAM vectors."""
    base = dual_diagonal_base(12, [6, 3, 3, 3, 6, 3, 3, 3, 6, 3, 3, 3], 24, seed=seed)
    return LdpcCode(expand_base(base, 24), name="qc576")


def tiny12(seed: int = 7) -> LdpcCode:
    """Small (12, 6) code, full rank and free of 4-cycles.

    Column 0 covers checks {0, 1, 2}; the other columns are distinct check
    pairs not inside that triple, so no two columns share two checks.
    """
    from itertools import combinations

    rng = np.random.default_rng(seed)
    pairs = [p for p in combinations(range(6), 2) if not set(p) <= {0, 1, 2}]
    for _ in range(100):
        order = rng.permutation(len(pairs))[:11]
        H = np.zeros((6, 12), dtype=np.uint8)
        H[[0, 1, 2], 0] = 1
        for c, i in enumerate(order, start=1):
            H[list(pairs[i]), c] = 1
        if len(_gf2_rref(H)[1]) == 6:
            return LdpcCode(H, name="tiny12")
    raise RuntimeError("no (12, 6) code found")
