import numpy as np
import pytest

from lrkbest.channel import (ChannelConfig, add_awgn, noise_variance_from_snr, sample_channel,
                             trial_rng)
from lrkbest.model import QAM16, QAM64, QPSK


def test_config_validation():
    with pytest.raises(ValueError):
        ChannelConfig(4, 2)
    with pytest.raises(ValueError):
        ChannelConfig(0, 2)


def test_sample_channel_deterministic():
    cfg = ChannelConfig(8, 8, seed=5)
    assert np.array_equal(sample_channel(cfg, 3), sample_channel(cfg, 3))
    assert not np.array_equal(sample_channel(cfg, 3), sample_channel(cfg, 4))
    assert sample_channel(cfg, 0, n_blocks=5).shape == (5, 8, 8)


def test_sample_channel_statistics():
    cfg = ChannelConfig(8, 8, seed=11)
    h = np.concatenate([sample_channel(cfg, t, 40).ravel() for t in range(40)])
    assert h.size >= 100_000
    assert abs(h.mean()) < 0.02
    assert 0.98 <= np.mean(np.abs(h) ** 2) <= 1.02


def test_noise_variance_formula():
    # Eb = n_rx * Es / bits; sigma2 = Eb / snr / 2
    s = noise_variance_from_snr(0.0, QPSK, 8)
    assert s == pytest.approx(8 * 2 / 2 / 2)
    assert noise_variance_from_snr(3.0, QAM16, 8) / noise_variance_from_snr(13.0, QAM16, 8) \
        == pytest.approx(10.0)
    assert noise_variance_from_snr(0.0, QAM64, 4, 8) == pytest.approx(8 * 42 / 6 / 2)


def test_measured_snr_matches_request():
    rng = trial_rng(1, 0, 1)
    sigma2 = noise_variance_from_snr(5.0, QAM16, 8)
    noise = add_awgn(np.zeros(200_000), sigma2, rng)
    eb = 8 * QAM16.mean_symbol_energy / QAM16.bits_per_complex_symbol
    measured = 10 * np.log10(eb / (2 * np.var(noise)))
    assert abs(measured - 5.0) < 0.1


def test_add_awgn():
    y = np.arange(4.0)
    assert np.array_equal(add_awgn(y, 0.0, trial_rng(0, 0, 1)), y)
    a = add_awgn(np.zeros(1_000_000), 2.5, trial_rng(3, 1, 1))
    assert abs(np.var(a) / 2.5 - 1) < 0.01
    assert np.array_equal(add_awgn(y, 1.0, trial_rng(3, 1, 1)), add_awgn(y, 1.0, trial_rng(3, 1, 1)))
    with pytest.raises(ValueError):
        add_awgn(y, -1.0, trial_rng(0, 0, 1))


def test_noise_moments_gaussian():
    x = add_awgn(np.zeros(100_000), 1.0, trial_rng(9, 0, 1))
    z = (x - x.mean()) / x.std()
    skew, kurt = np.mean(z ** 3), np.mean(z ** 4) - 3
    jb = len(z) / 6 * (skew ** 2 + kurt ** 2 / 4)
    assert jb < 13.8  # chi2(2) quantile at 1e-3


def test_trial_streams_independent_of_order():
    a = [trial_rng(7, t, 0).standard_normal(3) for t in range(5)]
    b = [trial_rng(7, t, 0).standard_normal(3) for t in reversed(range(5))][::-1]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
