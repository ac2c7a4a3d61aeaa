"""Rayleigh channel draws, AWGN and SNR bookkeeping.

Every random draw of a Monte-Carlo trial comes from a generator keyed by
``(seed, trial_index, stream)`` through :class:`numpy.random.SeedSequence`,
so a trial's result does not depend on which worker ran it or when.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import get_scheme

# substream identifiers within one trial
STREAM_CHANNEL = 0
STREAM_NOISE = 1
STREAM_BITS = 2


@dataclass(frozen=True)
class ChannelConfig:
    n_tx: int
    n_rx: int
    seed: int = 0
    snr_db: float = 10.0

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be positive")
        if self.n_tx > self.n_rx:
            raise ValueError(f"n_tx={self.n_tx} exceeds n_rx={self.n_rx}")


def trial_rng(seed: int, trial_index: int, stream: int) -> np.random.Generator:
    """Independent generator for one (seed, trial, stream) triple."""
    ss = np.random.SeedSequence([int(seed) & (2 ** 64 - 1), int(trial_index), int(stream)])
    return np.random.Generator(np.random.PCG64(ss))


def sample_channel(cfg: ChannelConfig, trial_index: int, n_blocks: int | None = None) -> np.ndarray:
    """i.i.d. CN(0, 1) channel matrix of shape (n_rx, n_tx).

    With ``n_blocks`` given, returns ``n_blocks`` independent matrices drawn
    from the same trial stream (one per transmitted vector of a codeword).
    """
    rng = trial_rng(cfg.seed, trial_index, STREAM_CHANNEL)
    shape = (1 if n_blocks is None else n_blocks, cfg.n_rx, cfg.n_tx)
    g = rng.standard_normal(shape + (2,)) * np.sqrt(0.5)
    H = g[..., 0] + 1j * g[..., 1]
    return H[0] if n_blocks is None else H


def noise_variance_from_snr(snr_db: float, scheme, n_tx: int, n_rx: int | None = None) -> float:
    """Per-real-dimension noise variance for a received Eb/N0 of ``snr_db``.

    Eb counts the energy collected by all ``n_rx`` antennas per information
    bit of the uncoded symbol stream: ``Eb = n_rx * Es / bits_per_symbol``.
    N0 is the complex noise variance per receive antenna; the returned value
    is ``N0 / 2``.
    """
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    scheme = get_scheme(scheme)
    n_rx = n_tx if n_rx is None else n_rx
    eb = n_rx * scheme.mean_symbol_energy / scheme.bits_per_complex_symbol
    n0 = eb / 10.0 ** (snr_db / 10.0)
    return n0 / 2.0


def add_awgn(y, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Add real Gaussian noise of variance ``sigma2`` to every real component of ``y``.

    Complex input gets independent noise on the real and imaginary parts.
    """
    if sigma2 < 0:
        raise ValueError("noise variance must be nonnegative")
    y = np.asarray(y)
    std = np.sqrt(sigma2)
    if np.iscomplexobj(y):
        w = rng.standard_normal(y.shape + (2,))
        return y + std * (w[..., 0] + 1j * w[..., 1])
    return y + std * rng.standard_normal(y.shape)
