import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrkbest.config import ExperimentConfig
from lrkbest.receiver import Arithmetic
from lrkbest.sim import (CI_HEADER, CSV_HEADER, BerRangeError, BerRecord, ber_to_snr, ci_path_for,
                         ci_to_csv, compare_fixed_float, records_to_csv, run_ber_sweep,
                         wilson_interval)


def _uncoded(**kw):
    base = dict(snr_grid_db=(60.0,), n_tx=4, n_rx=4, scheme="QAM16", code=None,
                vectors_per_trial=4, trials_per_point=20, min_trials=5, chunk_size=5)
    base.update(kw)
    return ExperimentConfig(**base)


def _coded(**kw):
    base = dict(snr_grid_db=(3.0,), trials_per_point=4, min_trials=2, chunk_size=2, clip=6.0)
    base.update(kw)
    return ExperimentConfig(**base)


def test_noiseless_uncoded_is_error_free():
    (rec,) = run_ber_sweep(_uncoded())
    assert rec.bit_errors == 0 and rec.bits_sent == 20 * 4 * 16 and rec.trials == 20
    assert rec.nodes_mean <= 4 * 4 * 4 - 2 * 4


def test_noiseless_coded_is_error_free():
    recs = run_ber_sweep(_coded(snr_grid_db=(40.0,)))
    assert [r.iteration for r in recs] == [1, 2, 3, 4]
    assert all(r.bit_errors == 0 and r.bits_sent == 4 * 288 for r in recs)


def test_same_seed_same_records():
    cfg = _coded(snr_grid_db=(1.0, 2.0))
    a, b = run_ber_sweep(cfg), run_ber_sweep(cfg)
    assert a == b
    assert records_to_csv(a) == records_to_csv(b)
    assert run_ber_sweep(_coded(snr_grid_db=(1.0,), seed=2)) != a[:4]


def test_early_stop_and_cap():
    cfg = _uncoded(snr_grid_db=(0.0,), trials_per_point=100, min_trials=10, target_bit_errors=1)
    (rec,) = run_ber_sweep(cfg)
    assert rec.trials == 10 and rec.bit_errors >= 1
    (rec,) = run_ber_sweep(_uncoded(snr_grid_db=(0.0,), trials_per_point=7, target_bit_errors=10 ** 9))
    assert rec.trials == 7


def test_ber_falls_with_snr():
    recs = run_ber_sweep(_uncoded(snr_grid_db=(4.0, 10.0, 16.0), trials_per_point=50))
    bers = [r.ber for r in recs]
    assert bers[0] > bers[1] > bers[2]


def test_csv_formats(tmp_path):
    recs = [BerRecord(2.5, 1, 1000, 7, 12.5, 3), BerRecord(2.5, 2, 1000, 0, 12.5, 3)]
    text = records_to_csv(recs)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1] == "2.5,1,1000,7,7.000000e-03,12.5000"
    out = tmp_path / "r.csv"
    records_to_csv(recs, out)
    assert out.read_text() == text
    ci = ci_to_csv(recs).splitlines()
    assert ci[0] == ",".join(CI_HEADER) and len(ci) == 3
    assert ci_path_for(str(out)).endswith("r_ci.csv")


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 10_000))
def test_wilson_contains_estimate(k, n):
    k = min(k, n)
    lo, hi = wilson_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


def test_wilson_reference_value():
    # 10 successes in 100: standard Wilson 95% interval
    lo, hi = wilson_interval(10, 100)
    assert lo == pytest.approx(0.05523, abs=1e-4) and hi == pytest.approx(0.17437, abs=1e-4)


def _curve(snrs, bers, it=1, bits=10 ** 6):
    return [BerRecord(s, it, bits, int(round(b * bits)), 0.0) for s, b in zip(snrs, bers)]


def test_ber_to_snr_interpolates_in_log():
    recs = _curve([0.0, 1.0, 2.0], [1e-1, 1e-2, 1e-4])
    assert ber_to_snr(recs, 1e-3, 1) == pytest.approx(1.5)
    assert ber_to_snr(recs, 1e-2, 1) == pytest.approx(1.0)
    assert ber_to_snr(recs, math.sqrt(1e-1 * 1e-2), 1) == pytest.approx(0.5)


def test_ber_to_snr_zero_floor_and_errors():
    recs = _curve([0.0, 1.0], [1e-2, 0.0], bits=10 ** 4)
    # zero errors floored at 0.5 / 1e4 = 5e-5
    assert ber_to_snr(recs, 1e-3, 1) == pytest.approx(np.log10(1e-2 / 1e-3) / np.log10(1e-2 / 5e-5))
    with pytest.raises(BerRangeError) as exc:
        ber_to_snr(_curve([0.0, 1.0], [1e-1, 1e-2]), 1e-3, 1)
    assert exc.value.partial
    with pytest.raises(BerRangeError):
        ber_to_snr(recs, 1e-3, 2)


def test_compare_identical_arithmetic_gives_zero_offset():
    cfg = _uncoded(snr_grid_db=(8.0, 14.0, 20.0), trials_per_point=60, target_bit_errors=10 ** 9)
    rep = compare_fixed_float(cfg, cfg_float=cfg, iteration=1)
    assert rep.offset_db == 0.0


def test_wide_fixed_point_tracks_float():
    cfg = _uncoded(snr_grid_db=(12.0,), n_tx=2, n_rx=2, trials_per_point=40,
                   target_bit_errors=10 ** 9)
    fl = run_ber_sweep(cfg.with_arithmetic(Arithmetic(use_cordic=True)))
    fx = run_ber_sweep(cfg.with_arithmetic(Arithmetic.word_length(40)))
    assert fl[0].bit_errors == fx[0].bit_errors and fl[0].bit_errors > 0


def test_threads_do_not_change_results():
    cfg = _coded(snr_grid_db=(2.0,), trials_per_point=6, min_trials=2, chunk_size=1,
                 target_bit_errors=5)
    assert run_ber_sweep(cfg, threads=1) == run_ber_sweep(cfg, threads=3)
