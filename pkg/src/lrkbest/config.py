"""Experiment configuration files.

Plain INI (``configparser``) with these sections; every key is optional
except where noted::

    [system]
    n_tx = 8
    n_rx = 8
    scheme = QPSK            ; QPSK | 16QAM | 64QAM

    [detector]
    k = 4
    lll_delta = 0.75
    cordic_iterations = 24
    nr_iterations = 3
    use_cordic = auto        ; auto = CORDIC only in fixed point

    [decoder]
    code = builtin:qc576     ; path to a sparse parity file, or "none" (uncoded)
    ldpc_iterations = 20
    minsum_scale = 0.75
    max_outer_iterations = 4
    epsilon = 0.01
    clip = 25
    empty_llr = 4            ; LLR magnitude when all candidates agree on a bit (default: clip)
    add_decision = true      ; add the decoder's decision to the list from iteration 2 on
    interleaver_seed = 1     ; "none" disables the bit interleaver
    vectors_per_trial = 1    ; uncoded runs only

    [sweep]
    snr_db = 0, 1, 2, 3      ; required
    seed = 1
    trials_per_point = 20000
    min_trials = 1000
    target_bit_errors = 200  ; 0 runs exactly trials_per_point
    chunk_size = 25
    target_ber = 1e-3

    [arithmetic]
    mode = float             ; float | fixed
    word_length = 16         ; every group gets this many bits
    integer_bits = auto      ; auto = profiled integer bits per group, or one number for all
    ; fraction_length = 9    ; alternatively one shared Q(word_length, fraction_length)
    rounding = nearest       ; nearest | truncate
    overflow = saturate      ; saturate | wrap

    [arithmetic.lll]         ; optional per-group override (channel, lll, ped, llr)
    word_length = 18
    integer_bits = 6         ; or fraction_length
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .fixedpoint import QFormat
from .model import get_scheme
from .receiver import GROUPS, PROFILED_INTEGER_BITS, Arithmetic


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    snr_grid_db: tuple
    n_tx: int = 8
    n_rx: int = 8
    scheme: str = "QPSK"
    K: int = 4
    lll_delta: float = 0.75
    code: str | None = "builtin:qc576"
    ldpc_iterations: int = 20
    minsum_scale: float = 0.75
    max_outer_iterations: int = 4
    epsilon: float = 0.01
    clip: float = 25.0
    empty_llr: float | None = None
    add_decision: bool = True
    interleaver_seed: int | None = 1
    vectors_per_trial: int = 1
    seed: int = 1
    trials_per_point: int = 20000
    min_trials: int = 1000
    target_bit_errors: int = 200
    chunk_size: int = 25
    target_ber: float = 1e-3
    arithmetic: Arithmetic = field(default_factory=Arithmetic)

    def __post_init__(self):
        problems = []
        if not self.snr_grid_db:
            problems.append("[sweep] snr_db must list at least one SNR point")
        if self.n_tx < 1 or self.n_rx < 1:
            problems.append("[system] n_tx and n_rx must be positive")
        elif self.n_tx > self.n_rx:
            problems.append(f"[system] n_tx={self.n_tx} must not exceed n_rx={self.n_rx}")
        try:
            get_scheme(self.scheme)
        except ValueError as exc:
            problems.append(f"[system] scheme: {exc}")
        if self.K < 1:
            problems.append("[detector] k must be >= 1")
        if not 0.25 < self.lll_delta <= 1:
            problems.append("[detector] lll_delta must lie in (0.25, 1]")
        if self.max_outer_iterations < 1:
            problems.append("[decoder] max_outer_iterations must be >= 1")
        if not self.epsilon > 0:
            problems.append("[decoder] epsilon must be positive")
        if not self.clip > 0:
            problems.append("[decoder] clip must be positive")
        if self.empty_llr is not None and not self.empty_llr > 0:
            problems.append("[decoder] empty_llr must be positive")
        if self.trials_per_point < 1:
            problems.append("[sweep] trials_per_point must be >= 1")
        if self.chunk_size < 1:
            problems.append("[sweep] chunk_size must be >= 1")
        if not 0 < self.target_ber < 1:
            problems.append("[sweep] target_ber must lie in (0, 1)")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def coded(self) -> bool:
        return self.code is not None

    @property
    def iterations(self) -> int:
        return self.max_outer_iterations if self.coded else 1

    def with_arithmetic(self, arith: Arithmetic) -> "ExperimentConfig":
        return replace(self, arithmetic=arith)


def _get(section, key, conv, default):
    if section is None or key not in section:
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key} = {raw!r}: {exc}") from None


def _bool_or_auto(raw: str):
    low = raw.lower()
    if low == "auto":
        return None
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected auto, true or false")


def _bool(raw: str) -> bool:
    v = _bool_or_auto(raw)
    if v is None:
        raise ValueError("expected true or false")
    return v


def _optional_float(raw: str):
    return None if raw.lower() in ("none", "off", "") else float(raw)


def _optional_int(raw: str):
    return None if raw.lower() in ("none", "off", "") else int(raw)


def _scheme_name(raw: str) -> str:
    return get_scheme(raw).name.value


def _floats(raw: str):
    vals = tuple(float(t) for t in raw.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _int_or_profiled(raw: str):
    return None if raw.lower() in ("auto", "profiled") else int(raw)


def _format(section, wl_default, ib_default, rounding_default, overflow_default) -> QFormat:
    wl = _get(section, "word_length", int, wl_default)
    fl = _get(section, "fraction_length", int, None)
    ib = _get(section, "integer_bits", int, None)
    if wl is None:
        raise ConfigError(f"[{section.name}] word_length is required in fixed mode")
    if fl is None:
        fl = wl - (ib if ib is not None else ib_default)
    rounding = _get(section, "rounding", str, rounding_default)
    overflow = _get(section, "overflow", str, overflow_default)
    try:
        return QFormat(wl, fl, rounding, overflow)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {exc}") from None


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    known = {"system", "detector", "decoder", "sweep", "arithmetic"} | {f"arithmetic.{g}" for g in GROUPS}
    unknown = [s for s in cp.sections() if s not in known]
    if unknown:
        raise ConfigError(f"unknown section(s) {unknown}; expected {sorted(known)}")
    sysc = cp["system"] if cp.has_section("system") else None
    det = cp["detector"] if cp.has_section("detector") else None
    dec = cp["decoder"] if cp.has_section("decoder") else None
    sw = cp["sweep"] if cp.has_section("sweep") else None
    ar = cp["arithmetic"] if cp.has_section("arithmetic") else None
    if sw is None or "snr_db" not in sw:
        raise ConfigError("[sweep] snr_db is required (comma-separated SNR points in dB)")

    mode = _get(ar, "mode", str, "float").lower()
    kw = dict(
        cordic_iterations=_get(det, "cordic_iterations", int, 24),
        nr_iterations=_get(det, "nr_iterations", int, 3),
        use_cordic=_get(det, "use_cordic", _bool_or_auto, None),
    )
    if mode == "float":
        arith = Arithmetic(**kw)
    elif mode == "fixed":
        wl = _get(ar, "word_length", int, None)
        if wl is None:
            raise ConfigError("[arithmetic] word_length is required in fixed mode")
        fl = _get(ar, "fraction_length", int, None)
        ib = _get(ar, "integer_bits", _int_or_profiled, None)
        rounding = _get(ar, "rounding", str, "nearest")
        overflow = _get(ar, "overflow", str, "saturate")
        fmts = {}
        for g in GROUPS:
            # shared fraction length, shared integer bits, or the profiled table
            ib_g = wl - fl if fl is not None else (ib if ib is not None else PROFILED_INTEGER_BITS[g])
            name = f"arithmetic.{g}"
            if cp.has_section(name):
                fmts[g] = _format(cp[name], wl, ib_g, rounding, overflow)
            else:
                try:
                    fmts[g] = QFormat(wl, wl - ib_g, rounding, overflow)
                except ValueError as exc:
                    raise ConfigError(f"[arithmetic] {g} group: {exc}") from None
        arith = Arithmetic(**fmts, **kw)
    else:
        raise ConfigError(f"[arithmetic] mode = {mode!r}: expected float or fixed")

    code = _get(dec, "code", str, "builtin:qc576")
    if code.lower() in ("none", "uncoded"):
        code = None
    elif not code.startswith("builtin:"):
        p = Path(code)
        if not p.is_absolute() and source not in ("<string>",):
            p = Path(source).parent / p
        code = str(p)
    return ExperimentConfig(
        snr_grid_db=_get(sw, "snr_db", _floats, ()),
        n_tx=_get(sysc, "n_tx", int, 8),
        n_rx=_get(sysc, "n_rx", int, 8),
        scheme=_get(sysc, "scheme", _scheme_name, "QPSK"),
        K=_get(det, "k", int, 4),
        lll_delta=_get(det, "lll_delta", float, 0.75),
        code=code,
        ldpc_iterations=_get(dec, "ldpc_iterations", int, 20),
        minsum_scale=_get(dec, "minsum_scale", float, 0.75),
        max_outer_iterations=_get(dec, "max_outer_iterations", int, 4),
        epsilon=_get(dec, "epsilon", float, 0.01),
        clip=_get(dec, "clip", float, 25.0),
        empty_llr=_get(dec, "empty_llr", _optional_float, None),
        add_decision=_get(dec, "add_decision", _bool, True),
        interleaver_seed=_get(dec, "interleaver_seed", _optional_int, 1),
        vectors_per_trial=_get(dec, "vectors_per_trial", int, 1),
        seed=_get(sw, "seed", int, 1),
        trials_per_point=_get(sw, "trials_per_point", int, 20000),
        min_trials=_get(sw, "min_trials", int, 1000),
        target_bit_errors=_get(sw, "target_bit_errors", int, 200),
        chunk_size=_get(sw, "chunk_size", int, 25),
        target_ber=_get(sw, "target_ber", float, 1e-3),
        arithmetic=arith,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} does not exist")
    return parse_config(path.read_text(), source=str(path))
