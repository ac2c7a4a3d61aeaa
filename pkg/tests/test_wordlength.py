import math

import numpy as np
import pytest

from lrkbest.config import ExperimentConfig
from lrkbest.sim import BerRecord
from lrkbest.wordlength import (SWEEP_HEADER, WordLengthSearchError, profile_pipeline,
                                suggest_integer_bits, wordlength_search)

CFG = ExperimentConfig(snr_grid_db=(0.0, 1.0, 2.0, 3.0, 4.0), code=None, n_tx=2, n_rx=2)


def fake_runner(loss_per_bit):
    """BER curve 10^-(snr) shifted right by ``loss_per_bit * (20 - wl)`` dB below 20 bits."""
    calls = []

    def run(cfg, threads=1):
        a = cfg.arithmetic
        shift = 0.0 if not a.is_fixed else max(0, 20 - a.channel.word_length) * loss_per_bit
        calls.append(a.channel.word_length if a.is_fixed else None)
        bits = 10 ** 7
        return [BerRecord(s, 1, bits, int(round(10 ** -(s - shift) * bits * 0.1)), 0.0)
                for s in cfg.snr_grid_db]

    run.calls = calls
    return run


def test_infinite_budget_picks_minimum():
    res = wordlength_search(CFG, 24, 12, math.inf, runner=fake_runner(0.3))
    assert res.word_length == 12
    assert [r["word_length"] for r in res.rows] == list(range(24, 11, -1))


def test_budget_selects_shortest_passing():
    run = fake_runner(0.25)
    res = wordlength_search(CFG, 24, 12, 0.6, runner=run)
    # shift 0.25 dB per bit below 20: 18 bits cost 0.5 dB, 17 bits 0.75 dB
    assert res.word_length == 18
    assert run.calls[0] is None and run.calls[1:] == list(range(24, 11, -1))
    assert res.arithmetic.channel.word_length == 18
    row = {r["word_length"]: r for r in res.rows}
    assert row[17]["offset_db"] == pytest.approx(0.75, abs=1e-3)  # integer error counts
    assert res.to_csv().splitlines()[0] == ",".join(SWEEP_HEADER)


def test_impossible_budget_reports_table():
    with pytest.raises(WordLengthSearchError) as exc:
        wordlength_search(CFG, 16, 14, -1e-9, runner=fake_runner(0.25))
    assert [r["word_length"] for r in exc.value.rows] == [16, 15, 14]


def test_unbracketed_fixed_curve_is_infinite_offset():
    res = wordlength_search(CFG, 20, 12, 1.0, runner=fake_runner(1.0))
    row = {r["word_length"]: r for r in res.rows}
    assert math.isinf(row[12]["offset_db"])
    assert res.word_length == 19


def test_bad_range():
    with pytest.raises(ValueError):
        wordlength_search(CFG, 12, 14, 1.0, runner=fake_runner(0.1))


def test_profile_is_deterministic_and_covers_groups():
    cfg = ExperimentConfig(snr_grid_db=(3.0,), clip=6.0)
    a = profile_pipeline(cfg, n_trials=2)
    b = profile_pipeline(cfg, n_trials=2)
    assert a == b
    bits = suggest_integer_bits(a)
    assert set(bits) == {"channel", "lll", "ped", "llr"}
    assert all(2 <= v <= 16 for v in bits.values())
