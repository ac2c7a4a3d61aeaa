from importlib import resources

import pytest

from lrkbest.config import ConfigError, ExperimentConfig, load_config, parse_config
from lrkbest.fixedpoint import QFormat
from lrkbest.receiver import PROFILED_INTEGER_BITS

MINIMAL = "[sweep]\nsnr_db = 1, 2.5\n"


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.snr_grid_db == (1.0, 2.5)
    assert (cfg.n_tx, cfg.scheme, cfg.K, cfg.code) == (8, "QPSK", 4, "builtin:qc576")
    assert not cfg.arithmetic.is_fixed and cfg.iterations == 4


@pytest.mark.parametrize("name", ["qpsk8x8", "qpsk8x8_fixed16", "qam16_8x8", "qam64_8x8",
                                  "qpsk2x2_uncoded"])
def test_shipped_configs_parse(name):
    text = resources.files("lrkbest.data").joinpath(f"{name}.ini").read_text()
    cfg = parse_config(text, source=name)
    assert cfg.snr_grid_db


def test_fixed_auto_uses_profiled_bits():
    text = resources.files("lrkbest.data").joinpath("qpsk8x8_fixed16.ini").read_text()
    a = parse_config(text).arithmetic
    for g, ib in PROFILED_INTEGER_BITS.items():
        assert getattr(a, g) == QFormat(16, 16 - ib)


def test_fixed_overrides():
    cfg = parse_config(MINIMAL + "[arithmetic]\nmode = fixed\nword_length = 20\nfraction_length = 12\n"
                       "[arithmetic.llr]\ninteger_bits = 10\n")
    a = cfg.arithmetic
    assert a.channel == QFormat(20, 12) and a.llr == QFormat(20, 10)


def test_uncoded_and_relative_code_path(tmp_path):
    assert parse_config(MINIMAL + "[decoder]\ncode = none\n").iterations == 1
    p = tmp_path / "exp.ini"
    p.write_text(MINIMAL + "[decoder]\ncode = my.txt\n")
    assert load_config(p).code == str(tmp_path / "my.txt")


@pytest.mark.parametrize("text, fragment", [
    ("[system]\nn_tx = 2\n", "snr_db"),
    (MINIMAL + "[bogus]\n", "unknown section"),
    (MINIMAL + "[system]\nn_tx = 8\nn_rx = 4\n", "must not exceed"),
    (MINIMAL + "[system]\nscheme = 8PSK\n", "scheme"),
    (MINIMAL + "[detector]\nk = 0\n", "k must be"),
    (MINIMAL + "[arithmetic]\nmode = fixed\n", "word_length is required"),
    (MINIMAL + "[arithmetic]\nmode = fixed\nword_length = 8\nfraction_length = 9\n", "fraction_length"),
    (MINIMAL + "[arithmetic]\nmode = analog\n", "mode"),
    (MINIMAL + "[detector]\nk = four\n", "k"),
    ("not an ini", "header"),
])
def test_config_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "nope.ini")


def test_dataclass_validation_collects_problems():
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig((), K=0, epsilon=0)
    msg = str(exc.value)
    assert "snr_db" in msg and "k must" in msg and "epsilon" in msg
