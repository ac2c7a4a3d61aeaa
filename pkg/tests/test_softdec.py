import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrkbest.codes import qc576, tiny12
from lrkbest.fixedpoint import QFormat
from lrkbest.softdec import (BlockCandidates, IterationConfig, LdpcCode, LdpcError, LlrInputError,
                             bits_to_antipodal, iterate_decode, ldpc_decode, llr_extrinsic)
from oracles import brute_llr


def test_symmetric_pair_gives_zero():
    x = np.array([[1.0, 1.0, -1.0], [-1.0, 1.0, -1.0]])
    le = llr_extrinsic(x, [3.0, 3.0], np.zeros(3), 1.0)
    assert le[0] == 0.0
    # bits 1 and 2 are unanimous
    assert le[1] == 25.0 and le[2] == -25.0


def test_hand_example():
    x = np.array([[1.0], [-1.0]])
    assert llr_extrinsic(x, [2.0, 4.0], np.zeros(1), 1.0)[0] == pytest.approx(1.0)


def test_single_candidate_fallback():
    le = llr_extrinsic([[1.0, -1.0]], [0.5], None, 1.0, clip=8.0)
    assert list(le) == [8.0, -8.0]
    assert list(llr_extrinsic([[1.0, -1.0]], [0.5], None, 1.0, clip=8.0, empty=3.0)) == [3.0, -3.0]


def test_input_errors():
    with pytest.raises(LlrInputError):
        llr_extrinsic(np.zeros((0, 3)), [], None, 1.0)
    with pytest.raises(LlrInputError):
        llr_extrinsic([[1.0, 1.0]], [1.0, 2.0], None, 1.0)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 8), st.integers(1, 8),
       st.floats(0.1, 5.0), st.floats(0.5, 30.0))
def test_matches_brute_force(seed, L, B, sigma2, clip):
    rng = np.random.default_rng(seed)
    x = rng.choice([-1.0, 1.0], size=(L, B))
    d = rng.uniform(0, 30, L)
    la = rng.normal(scale=4, size=B)
    got = llr_extrinsic(x, d, la, sigma2, clip=clip)
    assert np.max(np.abs(got - brute_llr(x, d, la, sigma2, clip))) <= 1e-12
    assert np.all(np.abs(got) <= clip)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-50, 50))
def test_own_prior_excluded(seed, delta):
    rng = np.random.default_rng(seed)
    x = rng.choice([-1.0, 1.0], size=(6, 5))
    d = rng.uniform(0, 10, 6)
    la = rng.normal(size=5)
    base = llr_extrinsic(x, d, la, 1.0)
    for k in range(5):
        la2 = la.copy()
        la2[k] += delta
        # excluded by subtraction from the full prior sum, so equal up to rounding
        assert abs(llr_extrinsic(x, d, la2, 1.0)[k] - base[k]) <= 1e-12


def test_fixed_point_llr_close_to_float():
    rng = np.random.default_rng(0)
    x = rng.choice([-1.0, 1.0], size=(5, 16))
    d = rng.uniform(0, 40, 5)
    la = rng.normal(scale=3, size=16)
    fl = llr_extrinsic(x, d, la, 0.8)
    fx = llr_extrinsic(x, d, la, 0.8, fmt=QFormat(24, 12))
    assert np.max(np.abs(fl - fx)) < 1e-2


# ---------------------------------------------------------------- LDPC

@pytest.fixture(scope="module")
def tiny():
    return LdpcCode.load("builtin:tiny12")


def test_codes_structure(tiny):
    assert (tiny.n, tiny.k) == (12, 6)
    big = qc576()
    assert (big.n, big.k) == (576, 288)
    assert np.array_equal(LdpcCode.load("builtin:qc576").H, big.H)
    assert np.array_equal(tiny12().H, tiny.H)
    for code in (tiny, big):
        H = code.H.astype(np.int64)
        overlap = H.T @ H
        np.fill_diagonal(overlap, 0)
        assert overlap.max() <= 1  # no 4-cycles


def test_encode_gives_codewords(tiny):
    rng = np.random.default_rng(1)
    for code in (tiny, qc576()):
        u = rng.integers(0, 2, (20, code.k))
        c = code.encode(u)
        assert all(code.is_codeword(w) for w in c)
        assert np.array_equal(c[:, code.info_positions], u)
    with pytest.raises(LdpcError):
        tiny.encode(np.zeros(5))


def test_text_round_trip(tiny, tmp_path):
    p = tmp_path / "code.txt"
    p.write_text(tiny.to_text())
    assert np.array_equal(LdpcCode.load(p).H, tiny.H)
    with pytest.raises(LdpcError):
        LdpcCode.from_text("# n=3\n0 5\n")
    with pytest.raises(LdpcError):
        LdpcCode.from_text("\n")
    with pytest.raises(LdpcError):
        LdpcCode(tiny.H, scaling=0.0)


def test_decode_strong_codeword(tiny):
    cw = tiny.encode(np.array([1, 0, 1, 1, 0, 0]))
    llr = 20.0 * bits_to_antipodal(cw)
    post, ok, it = ldpc_decode(llr, tiny)
    assert ok and it == 1
    assert np.array_equal(np.sign(post), np.sign(llr))


def test_decode_corrects_single_flip(tiny):
    cw = tiny.encode(np.array([0, 1, 1, 0, 1, 0]))
    for j in range(tiny.n):
        llr = 10.0 * bits_to_antipodal(cw)
        llr[j] = -np.sign(llr[j]) * 2.0
        post, ok, _ = ldpc_decode(llr, tiny)
        assert ok and np.array_equal(post < 0, cw == 1), j


def test_decode_all_zero_input(tiny):
    post, ok, it = ldpc_decode(np.zeros(tiny.n), tiny)
    assert not ok and it == tiny.max_iterations
    assert np.all(post == 0)


def test_decode_dimension_error(tiny):
    with pytest.raises(LlrInputError):
        ldpc_decode(np.zeros(5), tiny)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1.0, 20.0))
def test_satisfied_codeword_sign_invariant(seed, mag):
    code = tiny12()
    rng = np.random.default_rng(seed)
    cw = code.encode(rng.integers(0, 2, code.k))
    llr = bits_to_antipodal(cw) * rng.uniform(mag, 2 * mag, code.n)
    post, ok, it = ldpc_decode(llr, code)
    assert ok and it == 1 and np.array_equal(np.sign(post), np.sign(llr))


# ---------------------------------------------------------------- outer loop

def _noiseless_block(code, rng, L=4):
    cw = code.encode(rng.integers(0, 2, code.k))
    V, B = 3, 4
    x_true = bits_to_antipodal(cw).reshape(V, B)
    cand = np.repeat(x_true[:, None, :], L, axis=1)
    metrics = np.zeros((V, L))
    for v in range(V):
        for l in range(1, L):
            j = rng.integers(B)
            cand[v, l, j] *= -1
            metrics[v, l] = 4.0 + l
    return cw, BlockCandidates(cand, metrics, sigma2=0.1)


def test_iterate_noiseless_exits_at_two(tiny):
    cw, block = _noiseless_block(tiny, np.random.default_rng(2))
    res = iterate_decode(block, tiny, IterationConfig(max_outer_iterations=4))
    assert np.array_equal(res.hard_per_iteration[0], cw)
    assert res.iterations == 2 and np.array_equal(res.hard_bits, cw)
    assert len(res.llr_snapshots) == 2


def test_iterate_epsilon_infinite(tiny):
    _, block = _noiseless_block(tiny, np.random.default_rng(3))
    res = iterate_decode(block, tiny, IterationConfig(epsilon=np.inf))
    assert res.iterations == 1


def test_iterate_decision_joins_list(tiny):
    cw, block = _noiseless_block(tiny, np.random.default_rng(4))
    calls = []

    def rescore(bits):
        calls.append(bits.copy())
        return np.zeros(bits.shape[0])

    block.rescore = rescore
    res = iterate_decode(block, tiny, IterationConfig(max_outer_iterations=3))
    # called once per iteration after the first, with the previous decision
    assert len(calls) == res.iterations - 1 == 1
    assert np.array_equal(calls[0].ravel(), cw)
    calls.clear()
    iterate_decode(block, tiny, IterationConfig(max_outer_iterations=3, add_decision=False))
    assert calls == []


def test_iterate_interleaver_and_size_check(tiny):
    cw, block = _noiseless_block(tiny, np.random.default_rng(5))
    perm = np.random.default_rng(0).permutation(tiny.n)
    # candidates are given in transmit order: tx position i carries code bit perm[i]
    block.cand_x = block.cand_x.reshape(3, 4, 4)
    tx = bits_to_antipodal(cw)[perm].reshape(3, 4)
    block.cand_x[:, 0] = tx
    res = iterate_decode(block, tiny, IterationConfig(), interleaver=perm)
    assert np.array_equal(res.hard_per_iteration[0], cw)
    with pytest.raises(LlrInputError):
        iterate_decode(BlockCandidates(np.ones((2, 1, 4)), np.zeros((2, 1)), 1.0), tiny)


def test_iteration_config_validation():
    for kw in ({"max_outer_iterations": 0}, {"epsilon": 0}, {"clip": -1}, {"empty_llr": 0}):
        with pytest.raises(ValueError):
            IterationConfig(**kw)
    assert IterationConfig(clip=6, empty_llr=20).empty == 6
