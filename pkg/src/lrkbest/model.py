"""Signal model: QAM mapping, real-valued decomposition, MMSE extension and
the shift/scale map between constellation symbols and the integer lattice.

Symbols live on the unnormalized odd-integer grid (QPSK per-dimension
alphabet {-1, 1}, 16QAM {-3, -1, 1, 3}, ...). Energy normalization is done
by the noise variance, see :mod:`lrkbest.channel`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class InputShapeError(ValueError):
    pass


class ModelDomainError(ValueError):
    pass


# per-dimension reflected Gray tables, bits (MSB first) -> level index
_GRAY = {
    1: [0b0, 0b1],
    2: [0b00, 0b01, 0b11, 0b10],
    3: [0b000, 0b001, 0b011, 0b010, 0b110, 0b111, 0b101, 0b100],
}


class SchemeName(str, Enum):
    QPSK = "QPSK"
    QAM16 = "QAM16"
    QAM64 = "QAM64"


@dataclass(frozen=True)
class ModulationScheme:
    """Square QAM on the odd-integer lattice with a fixed per-dimension Gray map."""

    name: SchemeName
    bits_per_complex_symbol: int
    alphabet: np.ndarray = field(repr=False, compare=False)
    # gray_codes[i] is the bit label of alphabet[i]
    gray_codes: tuple = field(repr=False, compare=False)

    @property
    def bits_per_dim(self) -> int:
        return self.bits_per_complex_symbol // 2

    @property
    def constellation_size(self) -> int:
        return 2 ** self.bits_per_complex_symbol

    @property
    def mean_symbol_energy(self) -> float:
        """Mean |s|^2 over the complex constellation (QPSK 2, 16QAM 10, 64QAM 42)."""
        return 2.0 * float(np.mean(self.alphabet.astype(float) ** 2))

    @property
    def real_symbol_variance(self) -> float:
        return float(np.mean(self.alphabet.astype(float) ** 2))

    def label_bits(self, level_index: int) -> list[int]:
        code = self.gray_codes[level_index]
        b = self.bits_per_dim
        return [(code >> (b - 1 - i)) & 1 for i in range(b)]


def _make_scheme(name: SchemeName, bits: int) -> ModulationScheme:
    per_dim = bits // 2
    levels = 2 ** per_dim
    alphabet = np.arange(-(levels - 1), levels, 2, dtype=np.int64)
    return ModulationScheme(name, bits, alphabet, tuple(_GRAY[per_dim]))


QPSK = _make_scheme(SchemeName.QPSK, 2)
QAM16 = _make_scheme(SchemeName.QAM16, 4)
QAM64 = _make_scheme(SchemeName.QAM64, 6)

SCHEMES = {s.name.value: s for s in (QPSK, QAM16, QAM64)}
_ALIASES = {"QPSK": "QPSK", "4QAM": "QPSK", "QAM16": "QAM16", "16QAM": "QAM16",
            "QAM64": "QAM64", "64QAM": "QAM64"}


def get_scheme(name) -> ModulationScheme:
    if isinstance(name, ModulationScheme):
        return name
    key = _ALIASES.get(str(name).upper().replace("-", ""))
    if key is None:
        raise ValueError(f"unknown modulation scheme {name!r}; expected one of QPSK, 16QAM, 64QAM")
    return SCHEMES[key]


def _bits_to_levels(bits: np.ndarray, scheme: ModulationScheme) -> np.ndarray:
    """Map groups of bits_per_dim bits to alphabet values."""
    b = scheme.bits_per_dim
    groups = bits.reshape(-1, b)
    weights = 1 << np.arange(b - 1, -1, -1)
    codes = groups @ weights
    code_to_index = np.empty(2 ** b, dtype=np.int64)
    code_to_index[list(scheme.gray_codes)] = np.arange(2 ** b)
    return scheme.alphabet[code_to_index[codes]]


def _levels_to_bits(levels: np.ndarray, scheme: ModulationScheme) -> np.ndarray:
    b = scheme.bits_per_dim
    levels = np.asarray(levels)
    idx = (levels.astype(np.int64) + (2 ** b - 1)) // 2
    if np.any(levels != np.round(levels)) or np.any(idx < 0) or np.any(idx >= 2 ** b) \
            or np.any((levels.astype(np.int64) % 2) == 0):
        raise ModelDomainError("symbol component is not a member of the alphabet")
    codes = np.asarray(scheme.gray_codes)[idx]
    shifts = np.arange(b - 1, -1, -1)
    # shape levels.shape + (bits_per_dim,)
    return (codes[..., None] >> shifts) & 1


def modulate(bits, scheme) -> np.ndarray:
    """Map a bit vector to complex symbols.

    Each symbol consumes ``bits_per_complex_symbol`` bits: the first half
    selects the real level, the second half the imaginary level.
    """
    scheme = get_scheme(scheme)
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % scheme.bits_per_complex_symbol:
        raise InputShapeError(
            f"bit vector length {bits.size} is not a multiple of {scheme.bits_per_complex_symbol}")
    per_symbol = bits.reshape(-1, 2, scheme.bits_per_dim)
    re = _bits_to_levels(per_symbol[:, 0, :].ravel(), scheme)
    im = _bits_to_levels(per_symbol[:, 1, :].ravel(), scheme)
    return re.astype(float) + 1j * im.astype(float)


def demap(symbols, scheme) -> np.ndarray:
    """Inverse of :func:`modulate`. Symbols must lie exactly on the alphabet."""
    scheme = get_scheme(scheme)
    symbols = np.atleast_1d(np.asarray(symbols, dtype=complex))
    re = _levels_to_bits(symbols.real, scheme).reshape(symbols.size, -1)
    im = _levels_to_bits(symbols.imag, scheme).reshape(symbols.size, -1)
    return np.concatenate([re, im], axis=1).reshape(-1)


def real_symbols_to_bits(s_real: np.ndarray, scheme) -> np.ndarray:
    """Bits of a real-valued symbol vector ``[Re(s); Im(s)]`` (or a batch of them, last axis)."""
    scheme = get_scheme(scheme)
    s_real = np.asarray(s_real)
    n = s_real.shape[-1] // 2
    bits = _levels_to_bits(s_real.reshape(-1, 2, n), scheme)
    # per complex symbol: real bits then imaginary bits
    bits = bits.transpose(0, 2, 1, 3).reshape(*s_real.shape[:-1], -1)
    return bits


def bits_to_real_symbols(bits: np.ndarray, scheme) -> np.ndarray:
    """Bits of one transmit vector to ``[Re(s); Im(s)]``."""
    s = modulate(bits, scheme)
    return np.concatenate([s.real, s.imag])


@dataclass
class ComplexSystem:
    """``y_c = H_c s_c + n_c``. Variances are per real dimension throughout."""

    H_c: np.ndarray
    y_c: np.ndarray
    noise_variance: float = 0.0
    signal_variance: float = 1.0

    def __post_init__(self):
        self.H_c = np.atleast_2d(np.asarray(self.H_c, dtype=complex))
        self.y_c = np.asarray(self.y_c, dtype=complex).ravel()
        if self.y_c.size != self.H_c.shape[0]:
            raise InputShapeError("received vector length does not match channel rows")
        if not np.isfinite(self.noise_variance):
            raise ModelDomainError("noise variance must be finite")


@dataclass
class RealSystem:
    """``y = H s + n`` with real ``H`` of shape (2 N_R, 2 N_T).

    ``signal_variance`` is the per-real-dimension symbol variance.
    """

    H: np.ndarray
    y: np.ndarray
    noise_variance: float = 0.0
    signal_variance: float = 1.0


@dataclass
class ExtendedSystem:
    H_bar: np.ndarray
    y_bar: np.ndarray


def realify_matrix(H_c: np.ndarray) -> np.ndarray:
    H_c = np.asarray(H_c, dtype=complex)
    return np.block([[H_c.real, -H_c.imag], [H_c.imag, H_c.real]])


def realify_vector(v_c: np.ndarray) -> np.ndarray:
    v_c = np.asarray(v_c, dtype=complex)
    return np.concatenate([v_c.real, v_c.imag], axis=-1)


def realify(sys: ComplexSystem) -> RealSystem:
    return RealSystem(realify_matrix(sys.H_c), realify_vector(sys.y_c),
                      sys.noise_variance, sys.signal_variance)


def mmse_extend(sys: RealSystem, N0: float) -> ExtendedSystem:
    """Stack ``sqrt(N0 / (2 sigma_s^2)) I`` under ``H`` and zeros under ``y``."""
    if not sys.signal_variance > 0:
        raise ModelDomainError("signal variance must be positive")
    n = sys.H.shape[1]
    scale = np.sqrt(N0 / (2.0 * sys.signal_variance))
    H_bar = np.vstack([sys.H, scale * np.eye(n)])
    y_bar = np.concatenate([np.asarray(sys.y, dtype=float), np.zeros(n)])
    return ExtendedSystem(H_bar, y_bar)


def shift_scale(ext: ExtendedSystem) -> np.ndarray:
    """Received vector in the integer domain: ``(y_bar - H_bar 1) / 2``."""
    return (ext.y_bar - ext.H_bar.sum(axis=1)) / 2.0


def unshift(z, T) -> np.ndarray:
    """Symbol-domain estimate ``2 T z + 1``; accepts a batch of z as rows."""
    z = np.asarray(z)
    T = np.asarray(T)
    if z.shape[-1] != T.shape[1]:
        raise InputShapeError("lattice vector and transform dimensions differ")
    return 2.0 * (z @ T.T) + 1.0


def quantize_to_constellation(x, scheme) -> np.ndarray:
    """Nearest alphabet member per component; midpoints go to the larger value."""
    scheme = get_scheme(scheme)
    top = float(scheme.alphabet[-1])
    x = np.asarray(x, dtype=float)
    # odd grid: nearest odd integer = 2*floor(x/2) + 1, ties (even x) upward
    q = 2.0 * np.floor(x / 2.0) + 1.0
    return np.clip(q, -top, top)
