"""Packed binary hypervector algebra.

Hypervectors are fixed-dimension binary vectors ({0,1} per position) stored
bit-packed in uint8 words, 8 bits per word, most-significant bit first
(``numpy.packbits`` order). Pad bits past ``dim`` in the last word are always
zero.

Operations:
    - random_hv(dim, rng):        i.i.d. uniform random bits
    - xor_bind(a, b):             element-wise XOR (associative, self-inverse)
    - hamming(a, b):              count of differing bit positions
    - popcount(a):                count of set bits
    - accumulate(acc, hv):        element-wise integer summation (bundling)
    - binarize_majority(acc, n):  threshold back to bits at n/2, ties -> 1
    - cosine_similarity(hv, s):   dot(bits, s) / sqrt(popcount * ||s||^2)
    - axpy(s, alpha, hv, sign):   s += sign * alpha * bits

Randomness comes from :class:`SeededRng`, a thin wrapper over NumPy's PCG64
seeded through ``SeedSequence(seed, spawn_key=(stream,))``. Same seed and
stream give a bit-identical draw sequence on every platform.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "BitHypervector",
    "DimensionError",
    "IntAccumulator",
    "RealHypervector",
    "SeededRng",
    "accumulate",
    "axpy",
    "binarize_majority",
    "cosine_similarity",
    "hamming",
    "popcount",
    "random_hv",
    "xor_bind",
]

# Bits set per byte value, used by every popcount/Hamming path.
POPCOUNT_TABLE = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


class DimensionError(ValueError):
    """Dimension is invalid or two operands disagree on dimension."""


def _check_same_dim(a, b) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} != {b.dim}")


def words_for(dim: int) -> int:
    """Number of uint8 words needed to hold ``dim`` bits."""
    return (dim + 7) // 8


def _pad_mask(dim: int) -> int:
    """Mask for the last word keeping only in-range bits (MSB-first)."""
    used = dim % 8
    return 0xFF if used == 0 else (0xFF << (8 - used)) & 0xFF


class SeededRng:
    """Deterministic random source: PCG64 over SeedSequence(seed, (stream,)).

    ``stream`` separates independent draw domains derived from one user seed
    (0 = encoder tables, 1 = column shuffling). Same (seed, stream) pair
    yields the same draws everywhere.
    """

    __slots__ = ("seed", "stream", "gen")

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = int(seed)
        self.stream = int(stream)
        self.gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(self.stream,)))
        )

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


class BitHypervector:
    """A dim-bit binary hypervector packed into uint8 words.

    Bit j lives at ``words[j >> 3]``, position ``7 - (j & 7)`` (MSB first).
    Pad bits beyond ``dim`` are forced to zero on construction.
    """

    __slots__ = ("dim", "words")

    def __init__(self, dim: int, words: np.ndarray):
        if dim < 1:
            raise DimensionError(f"invalid dimension {dim}")
        words = np.ascontiguousarray(words, dtype=np.uint8)
        if words.shape != (words_for(dim),):
            raise DimensionError(
                f"word array has shape {words.shape}, expected ({words_for(dim)},)"
            )
        mask = _pad_mask(dim)
        if mask != 0xFF and (int(words[-1]) & (0xFF ^ mask)) != 0:
            words = words.copy()
            words[-1] &= mask
        self.dim = dim
        self.words = words

    @classmethod
    def zeros(cls, dim: int) -> "BitHypervector":
        return cls(dim, np.zeros(words_for(dim), dtype=np.uint8))

    @classmethod
    def from_bits(cls, bits) -> "BitHypervector":
        """Build from an iterable/array of 0/1 values."""
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size < 1:
            raise DimensionError("bits must be a non-empty 1-D sequence")
        return cls(arr.size, np.packbits(arr))

    def to_bits(self) -> np.ndarray:
        """Unpack to a (dim,) uint8 array of 0/1 values."""
        return np.unpackbits(self.words)[: self.dim]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitHypervector):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.words, other.words)

    def __repr__(self) -> str:
        return f"BitHypervector(dim={self.dim}, popcount={popcount(self)})"


class IntAccumulator:
    """Element-wise integer sums of binary hypervectors, pre-binarization."""

    __slots__ = ("dim", "values")

    def __init__(self, dim: int, values: np.ndarray | None = None):
        if dim < 1:
            raise DimensionError(f"invalid dimension {dim}")
        if values is None:
            values = np.zeros(dim, dtype=np.int64)
        else:
            values = np.ascontiguousarray(values, dtype=np.int64)
            if values.shape != (dim,):
                raise DimensionError(
                    f"values array has shape {values.shape}, expected ({dim},)"
                )
        self.dim = dim
        self.values = values

    def __repr__(self) -> str:
        return f"IntAccumulator(dim={self.dim})"


class RealHypervector:
    """Real-valued vector of the same dimensionality as the bit hypervectors.

    Used for the class similarity vectors; stored as float64.
    """

    __slots__ = ("dim", "values")

    def __init__(self, dim: int, values: np.ndarray):
        if dim < 1:
            raise DimensionError(f"invalid dimension {dim}")
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape != (dim,):
            raise DimensionError(
                f"values array has shape {values.shape}, expected ({dim},)"
            )
        self.dim = dim
        self.values = values

    @classmethod
    def zeros(cls, dim: int) -> "RealHypervector":
        return cls(dim, np.zeros(dim, dtype=np.float64))

    @classmethod
    def from_bits(cls, hv: BitHypervector) -> "RealHypervector":
        """Real lift of a binary hypervector (0/1 bits become 0.0/1.0)."""
        return cls(hv.dim, hv.to_bits().astype(np.float64))

    def copy(self) -> "RealHypervector":
        return RealHypervector(self.dim, self.values.copy())

    def norm_squared(self) -> float:
        return float(np.dot(self.values, self.values))

    def __repr__(self) -> str:
        return f"RealHypervector(dim={self.dim})"


def random_hv(dim: int, rng: SeededRng) -> BitHypervector:
    """Draw a hypervector with i.i.d. Bernoulli(1/2) bits."""
    if dim < 1:
        raise DimensionError(f"invalid dimension {dim}")
    bits = rng.gen.integers(0, 2, size=dim, dtype=np.uint8)
    return BitHypervector(dim, np.packbits(bits))


def xor_bind(a: BitHypervector, b: BitHypervector) -> BitHypervector:
    """Bind two hypervectors with element-wise XOR."""
    _check_same_dim(a, b)
    return BitHypervector(a.dim, np.bitwise_xor(a.words, b.words))


def popcount(a: BitHypervector) -> int:
    """Number of set bits (pad bits are zero by invariant)."""
    return int(POPCOUNT_TABLE[a.words].sum())


def hamming(a: BitHypervector, b: BitHypervector) -> int:
    """Hamming distance: popcount of the XOR."""
    _check_same_dim(a, b)
    return int(POPCOUNT_TABLE[np.bitwise_xor(a.words, b.words)].sum())


def accumulate(acc: IntAccumulator, hv: BitHypervector) -> IntAccumulator:
    """Add a hypervector's bits into the accumulator. Mutates and returns acc."""
    _check_same_dim(acc, hv)
    acc.values += hv.to_bits()
    return acc


def binarize_majority(acc: IntAccumulator, n: int) -> BitHypervector:
    """Majority binarization after summing n hypervectors.

    Bit j is 1 iff acc[j] >= n/2; an even-n tie at exactly n/2 maps to 1.
    Computed as 2*acc[j] >= n to stay in integer arithmetic.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    bits = (2 * acc.values >= n).astype(np.uint8)
    return BitHypervector(acc.dim, np.packbits(bits))


def cosine_similarity(hv: BitHypervector, s: RealHypervector) -> float:
    """Cosine of a bit vector against a real vector.

    dot(bits, s) / sqrt(popcount(hv) * ||s||^2); defined as 0.0 when either
    operand has zero norm. sqrt of the product keeps cos(hv, lift(hv)) == 1.0
    exact.
    """
    _check_same_dim(hv, s)
    if not np.isfinite(s.values).all():
        raise ValueError("real hypervector contains non-finite values")
    pc = popcount(hv)
    nsq = s.norm_squared()
    if pc == 0 or nsq <= 0.0:
        return 0.0
    d = float(np.dot(hv.to_bits().astype(np.float64), s.values))
    return d / np.sqrt(pc * nsq)


def axpy(s: RealHypervector, alpha: float, hv: BitHypervector, sign: int) -> RealHypervector:
    """s += sign * alpha * bits(hv). Mutates and returns s."""
    _check_same_dim(s, hv)
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    bits = hv.to_bits()
    if sign == 1:
        s.values[bits == 1] += alpha
    else:
        s.values[bits == 1] -= alpha
    return s
