"""Breadth-first K-best search with on-demand (Schnorr-Euchner) child expansion.

Levels run from the last row of R upward. At each level every survivor owns
a lazy stream of children in zig-zag order around its Babai center. The K
children of the next level are picked by a tournament over these streams:
each stream contributes its best unexpanded child, the global minimum is
taken, and only the stream that lost its head computes a replacement. With
S survivors a level therefore costs at most ``S + K - 1`` expansions, and
the whole tree at most ``n (2K - 1)`` for ``n`` real dimensions.

The integer domain is unbounded, so streams never run dry and no boundary
checks are needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .fixedpoint import FLOAT_FMT, QFormat, fq
from .model import get_scheme


class SingularityError(ZeroDivisionError):
    pass


@dataclass
class SearchNode:
    """One partial path plus the cursor of its child stream."""

    level: int
    partial: np.ndarray
    ped: float
    center: float
    next_child_rank: int = 0


@dataclass
class CandidateList:
    z: np.ndarray  # (L, n) integer leaves
    ped: np.ndarray  # (L,) ascending

    def __len__(self):
        return len(self.ped)


@dataclass
class SearchStats:
    per_level: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def nodes_expanded(self) -> int:
        return int(self.per_level.sum())


@njit(cache=True)
def _round_half_up(x):
    return np.floor(x + 0.5)


@njit(cache=True)
def se_offset(rank, direction):
    """Offset of the ``rank``-th child from the rounded center: 0, d, -d, 2d, -2d, ..."""
    if rank == 0:
        return 0
    h = (rank + 1) // 2
    return h * direction if rank % 2 == 1 else -h * direction


@njit(cache=True)
def _center_direction(center):
    c0 = _round_half_up(center)
    d = 1 if center - c0 >= 0.0 else -1
    return c0, d


def babai_center(level: int, partial, R, y_tilde) -> float:
    """Center of row ``level`` given decided coordinates ``partial[level+1:]``."""
    R = np.asarray(R, dtype=float)
    if R[level, level] == 0:
        raise SingularityError(f"zero diagonal at level {level}")
    partial = np.asarray(partial)
    resid = y_tilde[level] - R[level, level + 1:] @ partial[level + 1:]
    return float(resid / R[level, level])


def se_children(center: float):
    """Endless generator of integer children in nondecreasing distance from ``center``."""
    c0, d = _center_direction(float(center))
    rank = 0
    while True:
        yield int(c0) + se_offset(rank, d)
        rank += 1


def se_next_child(node: SearchNode) -> int:
    c0, d = _center_direction(float(node.center))
    value = int(c0) + se_offset(node.next_child_rank, d)
    node.next_child_rank += 1
    return value


def ped_update(parent_ped: float, level: int, child_value: int, partial, R, y_tilde) -> float:
    z = np.array(partial, dtype=float, copy=True)
    z[level] = child_value
    r = y_tilde[level] - np.asarray(R)[level, level:] @ z[level:]
    return float(parent_ped + r * r)


# ---------------------------------------------------------------- heap
# tournament keys are (ped, emission order); ints identify the survivor

@njit(cache=True)
def _less(pa, oa, pb, ob):
    return pa < pb or (pa == pb and oa < ob)


@njit(cache=True)
def _heap_push(hp, ho, hs, size, p, o, s):
    i = size
    hp[i] = p
    ho[i] = o
    hs[i] = s
    while i > 0:
        parent = (i - 1) // 2
        if _less(hp[i], ho[i], hp[parent], ho[parent]):
            hp[i], hp[parent] = hp[parent], hp[i]
            ho[i], ho[parent] = ho[parent], ho[i]
            hs[i], hs[parent] = hs[parent], hs[i]
            i = parent
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(hp, ho, hs, size):
    p, o, s = hp[0], ho[0], hs[0]
    size -= 1
    hp[0], ho[0], hs[0] = hp[size], ho[size], hs[size]
    i = 0
    while True:
        left = 2 * i + 1
        right = left + 1
        best = i
        if left < size and _less(hp[left], ho[left], hp[best], ho[best]):
            best = left
        if right < size and _less(hp[right], ho[right], hp[best], ho[best]):
            best = right
        if best == i:
            break
        hp[i], hp[best] = hp[best], hp[i]
        ho[i], ho[best] = ho[best], ho[i]
        hs[i], hs[best] = hs[best], hs[i]
        i = best
    return p, o, s, size


@njit(cache=True)
def kbest_kernel(R, yt, K, inv_diag, f):
    """Returns (leaves (K, n) int64, peds (K,), expansions per level (n,))."""
    n = R.shape[0]
    fixed = f[0] != 0.0
    sz = np.zeros((K, n), dtype=np.int64)
    sped = np.zeros(K)
    n_surv = 1
    nz = np.zeros((K, n), dtype=np.int64)
    nped = np.zeros(K)
    per_level = np.zeros(n, dtype=np.int64)
    # per-survivor stream state
    b = np.zeros(K)
    c0 = np.zeros(K)
    dirs = np.zeros(K, dtype=np.int64)
    rank = np.zeros(K, dtype=np.int64)
    child = np.zeros(K)
    hp = np.zeros(K)
    ho = np.zeros(K, dtype=np.int64)
    hs = np.zeros(K, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        rii = R[i, i]
        order = 0
        size = 0
        for s in range(n_surv):
            acc = yt[i]
            for j in range(i + 1, n):
                acc = fq(acc - fq(R[i, j] * sz[s, j], f), f)
            b[s] = acc
            if fixed:
                center = fq(acc * inv_diag[i], f)
            else:
                center = acc / rii
            c0[s], dirs[s] = _center_direction(center)
            rank[s] = 0
            child[s] = c0[s]
            e = fq(acc - fq(rii * child[s], f), f)
            p = fq(sped[s] + fq(e * e, f), f)
            size = _heap_push(hp, ho, hs, size, p, order, s)
            order += 1
            per_level[i] += 1
        picked = 0
        while picked < K:
            p, o, s, size = _heap_pop(hp, ho, hs, size)
            for j in range(i + 1, n):
                nz[picked, j] = sz[s, j]
            nz[picked, i] = np.int64(child[s])
            nped[picked] = p
            picked += 1
            if picked == K:
                break
            rank[s] += 1
            child[s] = c0[s] + se_offset(rank[s], dirs[s])
            e = fq(b[s] - fq(rii * child[s], f), f)
            p2 = fq(sped[s] + fq(e * e, f), f)
            size = _heap_push(hp, ho, hs, size, p2, order, s)
            order += 1
            per_level[i] += 1
        for s in range(K):
            for j in range(n):
                sz[s, j] = nz[s, j]
            sped[s] = nped[s]
        n_surv = K
    return sz, sped, per_level


def kbest_search(R, y_tilde, K: int, fmt: QFormat | None = None, inv_diag=None):
    """K best integer vectors for ``||y_tilde - R z||^2`` with expansion counts.

    ``fmt`` rounds the PED datapath to a Q-format; ``inv_diag`` (reciprocals
    of R's diagonal) is then used for the Babai centers.
    """
    R = np.ascontiguousarray(R, dtype=float)
    yt = np.ascontiguousarray(y_tilde, dtype=float)
    if K < 1:
        raise ValueError("K must be >= 1")
    if np.any(np.diag(R) == 0):
        raise SingularityError("R has a zero on its diagonal")
    pk = FLOAT_FMT if fmt is None else fmt.packed()
    if inv_diag is None:
        inv_diag = 1.0 / np.diag(R)
    z, ped, per_level = kbest_kernel(R, yt, int(K), np.ascontiguousarray(inv_diag, dtype=float), pk)
    return CandidateList(z, ped), SearchStats(per_level)


def count_conventional(n_tx: int, K: int, scheme) -> int:
    """Expanded nodes of a conventional K-best: every survivor expands all m children."""
    m = get_scheme(scheme).constellation_size
    return 2 * n_tx * K * m


def on_demand_bound(n_tx: int, K: int) -> int:
    return 4 * n_tx * K - 2 * n_tx
