import subprocess
import sys

import pytest

from lrkbest.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from lrkbest.sim import CSV_HEADER

SMALL = """[system]
n_tx = 2
n_rx = 2
scheme = QPSK
[detector]
k = 4
[decoder]
code = none
[sweep]
snr_db = 0, 6
trials_per_point = 20
min_trials = 5
chunk_size = 5
"""


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def test_sweep_writes_csv_and_ci(small, tmp_path):
    out = tmp_path / "run.csv"
    assert main(["sweep", "--config", str(small), "--out", str(out), "--quiet"]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) and len(lines) == 3
    assert (tmp_path / "run_ci.csv").is_file()


def test_sweep_seed_override(small, tmp_path, capsys):
    main(["sweep", "--config", str(small), "--quiet", "--seed", "1"])
    a = capsys.readouterr().out
    main(["sweep", "--config", str(small), "--quiet", "--seed", "3"])
    assert capsys.readouterr().out != a


def test_config_errors_exit_1(tmp_path, capsys):
    assert main(["sweep", "--config", str(tmp_path / "missing.ini")]) == EXIT_CONFIG
    bad = tmp_path / "bad.ini"
    bad.write_text("[sweep]\nsnr_db = 1\n[system]\nn_tx = 9\nn_rx = 2\n")
    assert main(["sweep", "--config", str(bad)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert main(["sweep"]) == EXIT_CONFIG
    assert main(["sweep", "--config", "builtin:nothing"]) == EXIT_CONFIG
    assert main(["sweep", "--config", str(bad), "--threads", "0"]) == EXIT_CONFIG


def test_compare_needs_fixed(small):
    assert main(["compare", "--config", str(small)]) == EXIT_CONFIG


def test_missing_code_file_exit_1(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[sweep]\nsnr_db = 1\n[decoder]\ncode = nowhere.txt\n")
    assert main(["sweep", "--config", str(p), "--quiet"]) == EXIT_CONFIG


def test_verify_single_suite(capsys):
    assert main(["verify", "--suite", "llr"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("llr PASS")
    assert main(["verify", "--suite", "nope"]) == EXIT_CONFIG


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lrkbest.cli", "verify", "--suite", "ldpc"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "ldpc PASS" in res.stdout


def test_runtime_exit_code_constant():
    assert EXIT_RUNTIME == 2
