"""Monte-Carlo BER harness for the complete receiver.

One trial is one LDPC codeword: info bits -> encoder -> interleaver ->
Gray mapping onto as many MIMO vectors as the codeword fills, each with its
own Rayleigh channel and noise. Uncoded runs send ``vectors_per_trial``
vectors of random bits instead.

All randomness of a trial comes from ``trial_rng(seed, trial, stream)``, and
the same draws are reused at every SNR point. Trials are grouped into chunks
that may run on worker processes; chunk results are folded strictly in
trial order, so the output depends on the configuration only.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .channel import (STREAM_BITS, STREAM_NOISE, ChannelConfig, noise_variance_from_snr,
                      sample_channel, trial_rng)
from .config import ExperimentConfig
from .model import get_scheme, modulate, real_symbols_to_bits, realify_matrix
from .receiver import Arithmetic, bits_rescorer, detect_block
from .softdec import (BlockCandidates, IterationConfig, LdpcCode, bits_to_antipodal,
                      iterate_decode)

CSV_HEADER = ("snr_db", "iteration", "bits_sent", "bit_errors", "ber", "nodes_mean")
CI_HEADER = ("snr_db", "iteration", "ci_low", "ci_high")


class BerRangeError(ValueError):
    """The target BER is not bracketed by a measured curve."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


@dataclass(frozen=True)
class BerRecord:
    snr_db: float
    iteration: int
    bits_sent: int
    bit_errors: int
    nodes_mean: float
    trials: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent if self.bits_sent else 0.0

    def ci(self, z: float = 1.96):
        return wilson_interval(self.bit_errors, self.bits_sent, z)


def wilson_interval(k: int, n: int, z: float = 1.96):
    """Wilson score interval of a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    d = 1 + z * z / n
    c = (p + z * z / (2 * n)) / d
    h = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / d
    # the endpoints are exact at k = 0 and k = n
    lo = 0.0 if k == 0 else max(0.0, c - h)
    hi = 1.0 if k == n else min(1.0, c + h)
    return lo, hi


# ------------------------------------------------------------ trial runner

@dataclass(frozen=True)
class _Context:
    code: LdpcCode | None
    perm: np.ndarray | None
    n_vectors: int
    bits_per_vector: int


@lru_cache(maxsize=8)
def _load_code(path: str) -> LdpcCode:
    return LdpcCode.load(path)


def build_context(cfg: ExperimentConfig) -> _Context:
    scheme = get_scheme(cfg.scheme)
    B = cfg.n_tx * scheme.bits_per_complex_symbol
    if not cfg.coded:
        return _Context(None, None, cfg.vectors_per_trial, B)
    code = _load_code(cfg.code)
    code = replace(code, max_iterations=cfg.ldpc_iterations, scaling=cfg.minsum_scale)
    if code.n % B:
        raise ValueError(f"code length {code.n} is not a multiple of {B} bits per vector")
    perm = None
    if cfg.interleaver_seed is not None:
        perm = np.random.default_rng(cfg.interleaver_seed).permutation(code.n)
    return _Context(code, perm, code.n // B, B)


def trial_inputs(cfg: ExperimentConfig, ctx: _Context, trial: int):
    """Draw the SNR-independent part of a trial.

    Returns ``(info_bits, tx_bits, H_real, s_real, noise)`` where ``noise`` is
    unit-variance and gets scaled per SNR point.
    """
    scheme = get_scheme(cfg.scheme)
    rb = trial_rng(cfg.seed, trial, STREAM_BITS)
    if ctx.code is not None:
        info = rb.integers(0, 2, ctx.code.k).astype(np.int8)
        cw = ctx.code.encode(info)
        tx = cw if ctx.perm is None else cw[ctx.perm]
    else:
        info = rb.integers(0, 2, ctx.n_vectors * ctx.bits_per_vector).astype(np.int8)
        tx = info
    V = ctx.n_vectors
    sc = modulate(np.asarray(tx), scheme).reshape(V, cfg.n_tx)
    s = np.concatenate([sc.real, sc.imag], axis=1)
    Hc = sample_channel(ChannelConfig(cfg.n_tx, cfg.n_rx, cfg.seed), trial, n_blocks=V)
    H = np.stack([realify_matrix(h) for h in Hc])
    noise = trial_rng(cfg.seed, trial, STREAM_NOISE).standard_normal((V, 2 * cfg.n_rx))
    return info, tx, H, s, noise


def run_trial(cfg: ExperimentConfig, ctx: _Context, sigma2: float, trial: int):
    """Simulate one trial at noise variance ``sigma2`` (per real dimension).

    Returns ``(bits, errors_per_iteration, nodes_total, searches)``.
    """
    scheme = get_scheme(cfg.scheme)
    info, _, H, s, noise = trial_inputs(cfg, ctx, trial)
    y = np.einsum("vij,vj->vi", H, s) + math.sqrt(sigma2) * noise
    det = detect_block(H, y, sigma2, scheme, cfg.K, cfg.arithmetic, cfg.lll_delta)
    n_it = cfg.iterations
    errors = np.zeros(n_it, dtype=np.int64)
    if ctx.code is None:
        hard = real_symbols_to_bits(det.best_symbols(), scheme).ravel()
        errors[0] = int(np.count_nonzero(hard != info))
    else:
        cands = BlockCandidates(bits_to_antipodal(det.bits(scheme)), det.metrics, sigma2,
                                bits_rescorer(H, y, scheme, cfg.arithmetic))
        itcfg = IterationConfig(cfg.max_outer_iterations, cfg.epsilon, cfg.clip,
                                cfg.empty_llr, cfg.add_decision)
        res = iterate_decode(cands, ctx.code, itcfg, ctx.perm, cfg.arithmetic.llr)
        pos = ctx.code.info_positions
        for i in range(n_it):
            # after the loop stops, later iterations repeat the final decision
            hard = res.hard_per_iteration[min(i, len(res.hard_per_iteration) - 1)]
            errors[i] = int(np.count_nonzero(hard[pos] != info))
    return len(info), errors, int(det.nodes.sum()), len(det.nodes)


def _run_chunk(cfg: ExperimentConfig, sigma2: float, start: int, stop: int):
    ctx = _cached_context(cfg)
    bits = 0
    errors = np.zeros(cfg.iterations, dtype=np.int64)
    nodes = searches = 0
    for t in range(start, stop):
        b, e, nd, ns = run_trial(cfg, ctx, sigma2, t)
        bits += b
        errors += e
        nodes += nd
        searches += ns
    return bits, errors, nodes, searches


@lru_cache(maxsize=4)
def _cached_context(cfg: ExperimentConfig) -> _Context:
    return build_context(cfg)


# ------------------------------------------------------------------ sweeps

def _chunks(cfg):
    t = 0
    while t < cfg.trials_per_point:
        yield t, min(t + cfg.chunk_size, cfg.trials_per_point)
        t += cfg.chunk_size


def _done(cfg, trials, final_errors) -> bool:
    if trials >= cfg.trials_per_point:
        return True
    if cfg.target_bit_errors <= 0:
        return False
    return trials >= cfg.min_trials and final_errors >= cfg.target_bit_errors


def run_ber_sweep(cfg: ExperimentConfig, threads: int = 1, progress=None) -> list[BerRecord]:
    """BER per SNR point and outer iteration.

    A point stops after ``trials_per_point`` trials, or earlier once at
    least ``min_trials`` trials ran and the last iteration collected
    ``target_bit_errors`` errors. The check happens at chunk boundaries in
    trial order, so ``threads`` changes speed only.
    """
    _cached_context(cfg)  # fail early on a bad code path
    scheme = get_scheme(cfg.scheme)
    records = []
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for snr in cfg.snr_grid_db:
            sigma2 = noise_variance_from_snr(snr, scheme, cfg.n_tx, cfg.n_rx)
            bits, errors, nodes, searches, trials = 0, np.zeros(cfg.iterations, dtype=np.int64), 0, 0, 0
            chunks = _chunks(cfg)
            if pool is None:
                results = (_run_chunk(cfg, sigma2, a, b) + (b - a,) for a, b in chunks)
            else:
                results = _ordered_parallel(pool, cfg, sigma2, chunks, 2 * threads)
            for b_, e_, n_, s_, t_ in results:
                bits += b_
                errors += e_
                nodes += n_
                searches += s_
                trials += t_
                if _done(cfg, trials, errors[-1]):
                    break
            if hasattr(results, "close"):
                results.close()
            for i in range(cfg.iterations):
                records.append(BerRecord(float(snr), i + 1, bits, int(errors[i]),
                                         nodes / max(searches, 1), trials))
            if progress is not None:
                progress(records[-cfg.iterations:])
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return records


def _ordered_parallel(pool, cfg, sigma2, chunks, window):
    pending = []
    try:
        for a, b in chunks:
            pending.append((pool.submit(_run_chunk, cfg, sigma2, a, b), b - a))
            if len(pending) >= window:
                fut, n = pending.pop(0)
                yield fut.result() + (n,)
        while pending:
            fut, n = pending.pop(0)
            yield fut.result() + (n,)
    finally:
        for fut, _ in pending:
            fut.cancel()


# ---------------------------------------------------------------- CSV I/O

def _fmt(x: float) -> str:
    return repr(float(x))


def records_to_csv(records, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([_fmt(r.snr_db), r.iteration, r.bits_sent, r.bit_errors,
                    f"{r.ber:.6e}", f"{r.nodes_mean:.4f}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def ci_to_csv(records, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CI_HEADER)
    for r in records:
        lo, hi = r.ci()
        w.writerow([_fmt(r.snr_db), r.iteration, f"{lo:.6e}", f"{hi:.6e}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def ci_path_for(path: str) -> str:
    stem, dot, ext = str(path).rpartition(".")
    return f"{stem}_ci.{ext}" if dot else f"{path}_ci"


# ------------------------------------------------------------- comparisons

def curve(records, iteration: int):
    """(snr, ber, bits) arrays of one iteration, sorted by SNR."""
    rs = sorted((r for r in records if r.iteration == iteration), key=lambda r: r.snr_db)
    return (np.array([r.snr_db for r in rs]), np.array([r.ber for r in rs]),
            np.array([r.bits_sent for r in rs]))


def ber_to_snr(records, target_ber: float, iteration: int) -> float:
    """SNR at which the BER curve first drops to ``target_ber``.

    Log-BER is interpolated linearly in SNR between the bracketing points;
    a zero count is floored at half an error so the log stays finite.
    """
    snr, ber, bits = curve(records, iteration)
    if len(snr) == 0:
        raise BerRangeError(f"no records for iteration {iteration}")
    ber = np.maximum(ber, 0.5 / np.maximum(bits, 1))
    lt = np.log10(target_ber)
    lb = np.log10(ber)
    for i in range(len(snr) - 1):
        if lb[i] >= lt >= lb[i + 1] and lb[i] != lb[i + 1]:
            return float(snr[i] + (lb[i] - lt) / (lb[i] - lb[i + 1]) * (snr[i + 1] - snr[i]))
        if lb[i] == lt:
            return float(snr[i])
    if lb[-1] == lt:
        return float(snr[-1])
    raise BerRangeError(
        f"target BER {target_ber:g} not bracketed at iteration {iteration}: "
        f"BER spans {ber.max():.3g}..{ber.min():.3g} over {snr.min():g}..{snr.max():g} dB",
        partial=list(zip(snr.tolist(), ber.tolist())))


@dataclass
class OffsetReport:
    target_ber: float
    iteration: int
    snr_fixed: float
    snr_float: float
    fixed: list
    floating: list

    @property
    def offset_db(self) -> float:
        return self.snr_fixed - self.snr_float


def float_twin(cfg: ExperimentConfig) -> ExperimentConfig:
    a = cfg.arithmetic
    return cfg.with_arithmetic(Arithmetic(cordic_iterations=a.cordic_iterations,
                                          nr_iterations=a.nr_iterations))


def compare_fixed_float(cfg_fixed: ExperimentConfig, cfg_float: ExperimentConfig | None = None,
                        threads: int = 1, iteration: int | None = None,
                        float_records=None) -> OffsetReport:
    """SNR offset of the fixed-point receiver against floating point at ``target_ber``.

    Both runs share seed and grid; ``float_records`` reuses an earlier
    floating-point sweep.
    """
    cfg_float = float_twin(cfg_fixed) if cfg_float is None else cfg_float
    it = cfg_fixed.iterations if iteration is None else iteration
    fx = run_ber_sweep(cfg_fixed, threads)
    fl = run_ber_sweep(cfg_float, threads) if float_records is None else float_records
    target = cfg_fixed.target_ber
    try:
        s_fl = ber_to_snr(fl, target, it)
        s_fx = ber_to_snr(fx, target, it)
    except BerRangeError as exc:
        exc.partial = {"fixed": fx, "float": fl}
        raise
    return OffsetReport(target, it, s_fx, s_fl, fx, fl)


def offset_table_csv(report: OffsetReport, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("snr_db", "iteration", "ber_fixed", "ber_float"))
    fl = {(r.snr_db, r.iteration): r for r in report.floating}
    for r in report.fixed:
        g = fl.get((r.snr_db, r.iteration))
        w.writerow([_fmt(r.snr_db), r.iteration, f"{r.ber:.6e}",
                    f"{g.ber:.6e}" if g is not None else ""])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
