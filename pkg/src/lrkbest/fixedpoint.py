"""Q-format fixed-point emulation.

Two layers share one definition of a format:

* :class:`FixedValue` and the ``quantize``/``fx_add``/``fx_mul`` functions
  work on Python integers and are bit-exact for any word length.
* :meth:`QFormat.packed` packs a format into a small float array consumed by
  :func:`fq`, the quantizer used inside the compiled pipeline kernels. Values
  there are float64 numbers that sit on the format's grid; this is bit-exact
  against the integer layer as long as intermediate products fit in the
  53-bit mantissa (word lengths up to 26 bits).
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

NEAREST = "nearest"  # round half away from zero
TRUNCATE = "truncate"  # floor, i.e. two's complement bit drop
SATURATE = "saturate"
WRAP = "wrap"


@dataclass(frozen=True)
class QFormat:
    word_length: int
    fraction_length: int
    rounding: str = NEAREST
    overflow: str = SATURATE

    def __post_init__(self):
        if self.word_length < 2:
            raise ValueError("word_length must be at least 2")
        if not 0 <= self.fraction_length <= self.word_length - 1:
            raise ValueError("fraction_length must lie in [0, word_length - 1]")
        if self.rounding not in (NEAREST, TRUNCATE):
            raise ValueError(f"unknown rounding mode {self.rounding!r}")
        if self.overflow not in (SATURATE, WRAP):
            raise ValueError(f"unknown overflow mode {self.overflow!r}")

    @property
    def integer_bits(self) -> int:
        """Bits left of the binary point, sign included."""
        return self.word_length - self.fraction_length

    @property
    def raw_min(self) -> int:
        return -(1 << (self.word_length - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.word_length - 1)) - 1

    @property
    def lsb(self) -> float:
        return 2.0 ** -self.fraction_length

    @property
    def min_value(self) -> float:
        return self.raw_min * self.lsb

    @property
    def max_value(self) -> float:
        return self.raw_max * self.lsb

    def packed(self) -> np.ndarray:
        return np.array([1.0, 2.0 ** self.fraction_length, float(self.raw_min),
                         float(self.raw_max), float(self.rounding == TRUNCATE),
                         float(self.overflow == WRAP), 2.0 ** -self.fraction_length])

    def __str__(self):
        return f"Q({self.word_length},{self.fraction_length})"


#: packed form of the identity "format" used by the floating-point pipeline
FLOAT_FMT = np.zeros(7)


@dataclass(frozen=True)
class FixedValue:
    raw: int
    format: QFormat

    @property
    def value(self) -> float:
        return math.ldexp(self.raw, -self.format.fraction_length)

    def as_fraction(self) -> Fraction:
        return Fraction(self.raw, 1 << self.format.fraction_length)

    def __float__(self):
        return self.value


def _round_ratio(num: int, den: int, rounding: str) -> int:
    """Round num/den (den > 0) to an integer."""
    if rounding == TRUNCATE:
        return num // den
    q, r = divmod(abs(num), den)
    if 2 * r >= den:
        q += 1
    return q if num >= 0 else -q


def _overflow(raw: int, fmt: QFormat) -> int:
    if fmt.raw_min <= raw <= fmt.raw_max:
        return raw
    if fmt.overflow == SATURATE:
        return fmt.raw_max if raw > fmt.raw_max else fmt.raw_min
    span = 1 << fmt.word_length
    return (raw - fmt.raw_min) % span + fmt.raw_min


def _from_scaled(num: int, den: int, fmt: QFormat) -> FixedValue:
    return FixedValue(_overflow(_round_ratio(num, den, fmt.rounding), fmt), fmt)


def quantize(x, fmt: QFormat) -> FixedValue:
    """Round ``x`` onto the grid of ``fmt`` (exact rational arithmetic)."""
    fr = Fraction(x) * (1 << fmt.fraction_length)
    return _from_scaled(fr.numerator, fr.denominator, fmt)


def _requantize(raw: int, fl: int, fmt: QFormat) -> FixedValue:
    """Convert ``raw * 2**-fl`` to ``fmt`` with a single rounding."""
    shift = fmt.fraction_length - fl
    if shift >= 0:
        return FixedValue(_overflow(raw << shift, fmt), fmt)
    return _from_scaled(raw, 1 << -shift, fmt)


def fx_add(a: FixedValue, b: FixedValue, out_fmt: QFormat) -> FixedValue:
    fl = max(a.format.fraction_length, b.format.fraction_length)
    total = (a.raw << (fl - a.format.fraction_length)) + (b.raw << (fl - b.format.fraction_length))
    return _requantize(total, fl, out_fmt)


def fx_sub(a: FixedValue, b: FixedValue, out_fmt: QFormat) -> FixedValue:
    return fx_add(a, FixedValue(-b.raw, b.format), out_fmt)


def fx_mul(a: FixedValue, b: FixedValue, out_fmt: QFormat) -> FixedValue:
    """Full-width product, then one rounding/overflow step into ``out_fmt``."""
    return _requantize(a.raw * b.raw, a.format.fraction_length + b.format.fraction_length, out_fmt)


@njit(cache=True)
def fq(x, f):
    """Quantize a float to the grid described by the packed format ``f`` (identity when disabled)."""
    if f[0] == 0.0:
        return x
    r = x * f[1]
    if f[4] != 0.0:
        r = np.floor(r)
    elif r >= 0.0:
        r = np.floor(r + 0.5)
    else:
        r = -np.floor(-r + 0.5)
    if r > f[3] or r < f[2]:
        if f[5] != 0.0 and np.isfinite(r):
            span = f[3] - f[2] + 1.0
            r = (r - f[2]) % span + f[2]
        elif r > f[3]:
            r = f[3]
        else:
            r = f[2]
    return r * f[6]


@njit(cache=True)
def fq_array(x, f):
    out = np.empty_like(x)
    flat_in = x.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = fq(flat_in[i], f)
    return out


def quantize_array(x, fmt: QFormat | None) -> np.ndarray:
    """Vectorised :func:`quantize` returning grid values as float64."""
    x = np.ascontiguousarray(x, dtype=float)
    if fmt is None:
        return x.copy()
    return fq_array(x, fmt.packed())


# ---------------------------------------------------------------- profiling

class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class VariableRange:
    name: str
    min: float
    max: float
    integer_bits: int


@dataclass
class RangeProfile:
    variables: dict

    def integer_bits(self, names: Iterable[str] | None = None) -> int:
        """Largest integer-bit requirement over ``names`` (all variables by default)."""
        names = list(self.variables) if names is None else list(names)
        return max(self.variables[n].integer_bits for n in names)

    def __getitem__(self, name):
        return self.variables[name]


def required_integer_bits(lo: float, hi: float) -> int:
    """Magnitude bits ``ceil(log2(m + 1))`` (at least one) plus a sign bit."""
    m = max(abs(lo), abs(hi))
    magnitude = max(1, math.ceil(math.log2(m + 1.0)))
    return magnitude + 1


def profile_ranges(trace) -> RangeProfile:
    """Per-variable min/max and integer-bit requirement.

    ``trace`` maps a variable name to an iterable (or array) of observed
    values, or is an iterable of ``(name, value)`` pairs.
    """
    if isinstance(trace, Mapping):
        items = {k: np.asarray(v, dtype=float).ravel() for k, v in trace.items()}
    else:
        grouped: dict[str, list] = {}
        for name, value in trace:
            grouped.setdefault(name, []).append(np.ravel(np.asarray(value, dtype=float)))
        items = {k: np.concatenate(v) for k, v in grouped.items()}
    if not items:
        raise ProfileError("empty trace")
    out = {}
    for name, obs in items.items():
        if obs.size == 0:
            raise ProfileError(f"variable {name!r} has no observations")
        lo, hi = float(obs.min()), float(obs.max())
        out[name] = VariableRange(name, lo, hi, required_integer_bits(lo, hi))
    return RangeProfile(out)
