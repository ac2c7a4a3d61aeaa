"""Simulation-based range profiling and word-length search.

Profiling runs the floating-point receiver on a few trials and records
the magnitude of every intermediate per variable group. The word-length
search then lowers the fraction length step by step, measures the SNR
offset against floating point, and keeps the shortest word that stays
within the budget.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import noise_variance_from_snr
from .config import ExperimentConfig
from .fixedpoint import RangeProfile, profile_ranges
from .kbest import kbest_search
from .lattice import LllParams, lll_reduce
from .linalg import qr_givens
from .model import get_scheme, quantize_to_constellation, real_symbols_to_bits
from .receiver import GROUPS, Arithmetic, mmse_alpha
from .sim import (BerRangeError, _cached_context, ber_to_snr, float_twin, run_ber_sweep,
                  trial_inputs)
from .softdec import ldpc_decode, llr_extrinsic

SWEEP_HEADER = ("word_length", "fraction_length", "snr_probe_db", "ber_fixed", "ber_float",
                "offset_db")


class WordLengthSearchError(RuntimeError):
    def __init__(self, msg, rows=None):
        super().__init__(msg)
        self.rows = rows or []


def trace_trial(cfg: ExperimentConfig, trial: int, snr_db: float):
    """Yield ``(group, values)`` for every intermediate of one float trial."""
    scheme = get_scheme(cfg.scheme)
    ctx = _cached_context(cfg)
    sigma2 = noise_variance_from_snr(snr_db, scheme, cfg.n_tx, cfg.n_rx)
    _, _, H, s, noise = trial_inputs(cfg, ctx, trial)
    y = np.einsum("vij,vj->vi", H, s) + math.sqrt(sigma2) * noise
    a = mmse_alpha(sigma2, scheme)
    n = H.shape[2]
    llr_in = []
    for v in range(H.shape[0]):
        Hb = np.vstack([H[v], a * np.eye(n)])
        yb = np.concatenate([y[v], np.zeros(n)])
        yield "channel", Hb
        yield "channel", yb
        red = lll_reduce(Hb, LllParams(cfg.lll_delta))
        yield "lll", qr_givens(Hb).R
        yield "lll", red.R
        yield "lll", np.diag(red.R) ** 2
        Ht = red.reduced.B
        ysh = (yb - Hb.sum(axis=1)) / 2
        yield "channel", Ht
        yield "channel", ysh
        qr = qr_givens(Ht)
        yt = qr.Q.T @ ysh
        yield "channel", qr.R
        yield "channel", yt
        yield "ped", qr.R
        yield "ped", yt
        yield "ped", 1.0 / np.diag(qr.R)
        cl, _ = kbest_search(qr.R, yt, cfg.K)
        yield "ped", cl.ped
        S = quantize_to_constellation(2.0 * cl.z @ red.transform.T.T + 1.0, scheme)
        res = y[v][None, :] - S @ H[v].T
        yield "channel", res
        metrics = np.sum(res ** 2, axis=1)
        yield "llr", metrics
        yield "llr", (metrics - metrics.min()) / sigma2
        x = 1.0 - 2.0 * real_symbols_to_bits(S, scheme)
        le = llr_extrinsic(x, metrics, None, sigma2, cfg.clip)
        yield "llr", le
        llr_in.append(le)
    if ctx.code is not None:
        lc = np.concatenate(llr_in)
        perm = ctx.perm
        code_llr = np.empty_like(lc)
        code_llr[np.arange(lc.size) if perm is None else perm] = lc
        post, _, _ = ldpc_decode(code_llr, ctx.code, clip=np.inf)
        yield "llr", post


def profile_pipeline(cfg: ExperimentConfig, n_trials: int = 20, snr_db=None) -> RangeProfile:
    """Range profile per variable group from ``n_trials`` float trials at each SNR."""
    grid = cfg.snr_grid_db if snr_db is None else np.atleast_1d(snr_db)
    trace = []
    for snr in grid:
        for t in range(n_trials):
            trace.extend(trace_trial(cfg, t, float(snr)))
    return profile_ranges(trace)


# ------------------------------------------------------------------ search

@dataclass
class WordLengthResult:
    word_length: int
    arithmetic: Arithmetic
    rows: list = field(default_factory=list)

    def to_csv(self, path=None) -> str:
        return rows_to_csv(self.rows, path)


def rows_to_csv(rows, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([r["word_length"], r["fraction_length"], repr(float(r["snr_probe_db"])),
                    f"{r['ber_fixed']:.6e}", f"{r['ber_float']:.6e}", f"{r['offset_db']:.4f}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _ber_at(records, snr, it):
    for r in records:
        if r.iteration == it and r.snr_db == snr:
            return r.ber
    return float("nan")


def wordlength_search(cfg: ExperimentConfig, wl_max: int, wl_min: int, budget_db: float,
                      integer_bits=None, threads: int = 1, runner=run_ber_sweep,
                      rounding: str = "nearest", overflow: str = "saturate") -> WordLengthResult:
    """Shortest word length whose SNR offset against float stays within ``budget_db``.

    Every group gets the same word length with its binary point set by
    ``integer_bits`` (an int, a per-group dict, or the profiled table), so
    stepping the word length down removes one fraction bit everywhere.
    Word lengths run from ``wl_max`` down to ``wl_min``, each simulated with
    ``runner`` on the floating reference's seeds. A point passes when its
    offset at ``cfg.target_ber`` (last iteration) is at most ``budget_db``;
    curves that never reach the target count as an infinite offset. The
    ``fraction_length`` column reports the smallest fraction length of any
    group. Raises ``WordLengthSearchError`` with the table if nothing passes.
    """
    if wl_min > wl_max:
        raise ValueError("wl_min must not exceed wl_max")
    it = cfg.iterations
    ref = runner(float_twin(cfg), threads)
    snr_ref = ber_to_snr(ref, cfg.target_ber, it)
    probe = min((r.snr_db for r in ref if r.iteration == it), key=lambda s: abs(s - snr_ref))
    a = cfg.arithmetic
    rows, passing = [], []
    for wl in range(wl_max, wl_min - 1, -1):
        arith = Arithmetic.word_length(wl, integer_bits, rounding, overflow,
                                       cordic_iterations=a.cordic_iterations,
                                       nr_iterations=a.nr_iterations, use_cordic=a.use_cordic)
        recs = runner(cfg.with_arithmetic(arith), threads)
        try:
            off = ber_to_snr(recs, cfg.target_ber, it) - snr_ref
        except BerRangeError:
            off = math.inf
        fl = min(getattr(arith, g).fraction_length for g in GROUPS)
        rows.append(dict(word_length=wl, fraction_length=fl, snr_probe_db=probe,
                         ber_fixed=_ber_at(recs, probe, it), ber_float=_ber_at(ref, probe, it),
                         offset_db=off))
        if max(off, 0.0) <= budget_db:
            passing.append((wl, arith))
    if not passing:
        raise WordLengthSearchError(
            f"no word length in [{wl_min}, {wl_max}] keeps the offset within {budget_db} dB", rows)
    wl, arith = min(passing, key=lambda p: p[0])
    return WordLengthResult(wl, arith, rows)


def suggest_integer_bits(profile: RangeProfile, groups=GROUPS) -> dict:
    return {g: profile.integer_bits([g]) for g in groups}
