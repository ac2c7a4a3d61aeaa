import numpy as np
import pytest

from lrkbest.channel import ChannelConfig, sample_channel
from lrkbest.fixedpoint import QFormat
from lrkbest.kbest import on_demand_bound
from lrkbest.model import QAM16, QPSK, modulate, realify_matrix
from lrkbest.receiver import (Arithmetic, PROFILED_INTEGER_BITS, bits_rescorer, candidate_metrics,
                              detect_block, mmse_alpha)


def _block(seed, V, scheme, n=4, sigma=0.0):
    rng = np.random.default_rng(seed)
    H = np.stack([realify_matrix(h) for h in sample_channel(ChannelConfig(n, n, seed), 0, V)])
    bits = rng.integers(0, 2, (V, n * scheme.bits_per_complex_symbol))
    sc = modulate(bits.ravel(), scheme).reshape(V, n)
    s = np.concatenate([sc.real, sc.imag], axis=1)
    y = np.einsum("vij,vj->vi", H, s) + sigma * rng.standard_normal((V, 2 * n))
    return H, y, s, bits


def test_noiseless_detection_recovers_symbols():
    H, y, s, bits = _block(0, 20, QAM16)
    det = detect_block(H, y, 1e-6, QAM16, 4)
    assert np.array_equal(det.best_symbols(), s)
    assert np.array_equal(det.bits(QAM16)[np.arange(20), np.argmin(det.metrics, 1)], bits)
    assert np.all(det.nodes <= on_demand_bound(4, 4))
    assert np.all(np.abs(det.transforms.round() - det.transforms) == 0)


def test_candidate_metrics_match_numpy():
    H, y, s, _ = _block(1, 5, QPSK, sigma=0.5)
    det = detect_block(H, y, 0.25, QPSK, 4)
    ref = np.sum((y[:, None, :] - np.einsum("vij,vlj->vli", H, det.symbols)) ** 2, axis=2)
    assert np.allclose(candidate_metrics(H, y, det.symbols), ref)
    assert np.allclose(det.metrics, ref)


def test_rescorer_scores_bits():
    H, y, s, bits = _block(2, 6, QPSK, sigma=0.3)
    d = bits_rescorer(H, y, QPSK)(bits)
    assert np.allclose(d, np.sum((y - np.einsum("vij,vj->vi", H, s)) ** 2, axis=1))


def test_wide_fixed_point_matches_float():
    H, y, _, _ = _block(3, 10, QAM16, sigma=0.4)
    fl = detect_block(H, y, 0.16, QAM16, 4, Arithmetic(use_cordic=True))
    fx = detect_block(H, y, 0.16, QAM16, 4, Arithmetic.word_length(40))
    assert np.array_equal(fl.symbols, fx.symbols)
    assert np.allclose(fl.metrics, fx.metrics, atol=1e-6)


def test_arithmetic_constructors():
    a = Arithmetic.word_length(16)
    assert a.is_fixed and a.cordic
    assert a.llr == QFormat(16, 16 - PROFILED_INTEGER_BITS["llr"])
    assert Arithmetic.word_length(12, 4).channel == QFormat(12, 8)
    u = Arithmetic.uniform(QFormat(16, 8))
    assert u.ped == u.lll == QFormat(16, 8)
    assert not Arithmetic().is_fixed and not Arithmetic().cordic


def test_mmse_alpha():
    assert mmse_alpha(2.0, QPSK) == pytest.approx(np.sqrt(2.0))
    assert mmse_alpha(5.0, QAM16) == pytest.approx(1.0)
