"""Packed bit strings and the word-level kernels used to build ensembles.

Bit ``i`` of a string lives in bit ``i % 64`` of word ``i // 64`` (LSB first).
Padding bits past ``length_bits`` are always zero.  Textual forms (``from_str``,
``str(b)``) list bit 0 first.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit, prange

from ._io import atomic_write_bytes, atomic_write_text, fmt_real
from .errors import InvalidParameterError

WORD_BITS = 64
# Philox4x64 keyed by (seed, block index); one generator stream per block of
# BLOCK_BITS bits so that blocks can be produced independently.
BLOCK_BITS = 1 << 16
GENERATOR_VERSION = "philox4x64-block65536-v1"

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)


def _n_words(length_bits: int) -> int:
    return -(-length_bits // WORD_BITS)


def _tail_mask(length_bits: int) -> np.uint64:
    r = length_bits % WORD_BITS
    return _ALL if r == 0 else np.uint64((1 << r) - 1)


def _pack(bits: np.ndarray, n_words: int) -> np.ndarray:
    buf = np.zeros(n_words * WORD_BITS, dtype=np.uint8)
    buf[: bits.size] = bits
    return np.packbits(buf, bitorder="little").view("<u8").astype(np.uint64)


@dataclass(frozen=True, eq=False)
class BitString:
    length_bits: int
    words: np.ndarray

    def __post_init__(self):
        if self.length_bits < 1:
            raise InvalidParameterError(f"length_bits must be >= 1, got {self.length_bits}")
        words = np.ascontiguousarray(self.words, dtype=np.uint64)
        if words.shape != (_n_words(self.length_bits),):
            raise InvalidParameterError(
                f"expected {_n_words(self.length_bits)} words for {self.length_bits} bits, "
                f"got shape {words.shape}"
            )
        if words[-1] & ~_tail_mask(self.length_bits):
            raise InvalidParameterError("padding bits beyond length_bits must be zero")
        if words is self.words:
            words = words.copy()
        words.flags.writeable = False
        object.__setattr__(self, "words", words)

    @classmethod
    def from_bits(cls, bits: Iterable[int] | np.ndarray) -> BitString:
        arr = np.asarray(bits if isinstance(bits, np.ndarray) else list(bits), dtype=np.uint8)
        if arr.ndim != 1:
            raise InvalidParameterError("bits must be one-dimensional")
        if np.any(arr > 1):
            raise InvalidParameterError("bits must be 0 or 1")
        return cls(arr.size, _pack(arr, _n_words(arr.size)))

    @classmethod
    def from_str(cls, s: str) -> BitString:
        """``from_str("0101")`` sets bits 1 and 3."""
        if not s or set(s) - {"0", "1"}:
            raise InvalidParameterError(f"not a bit string: {s!r}")
        return cls.from_bits(np.frombuffer(s.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def zeros(cls, length_bits: int) -> BitString:
        return cls(length_bits, np.zeros(_n_words(length_bits), dtype=np.uint64))

    @classmethod
    def ones(cls, length_bits: int) -> BitString:
        words = np.full(_n_words(length_bits), _ALL, dtype=np.uint64)
        words[-1] = _tail_mask(length_bits)
        return cls(length_bits, words)

    @classmethod
    def from_bytes(cls, data: bytes, length_bits: int) -> BitString:
        nbytes = -(-length_bits // 8)
        if len(data) != nbytes:
            raise InvalidParameterError(f"expected {nbytes} bytes for {length_bits} bits, got {len(data)}")
        buf = np.zeros(_n_words(length_bits) * 8, dtype=np.uint8)
        buf[:nbytes] = np.frombuffer(data, dtype=np.uint8)
        return cls(length_bits, buf.view("<u8").astype(np.uint64))

    def to_bytes(self) -> bytes:
        return self.words.astype("<u8").tobytes()[: -(-self.length_bits // 8)]

    def to_bits(self) -> np.ndarray:
        bits = np.unpackbits(self.words.astype("<u8").view(np.uint8), bitorder="little")
        return bits[: self.length_bits]

    def __len__(self) -> int:
        return self.length_bits

    def __getitem__(self, i: int) -> int:
        if not -self.length_bits <= i < self.length_bits:
            raise IndexError(i)
        i %= self.length_bits
        return int((int(self.words[i // WORD_BITS]) >> (i % WORD_BITS)) & 1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self.length_bits == other.length_bits and np.array_equal(self.words, other.words)

    def __hash__(self) -> int:
        return hash((self.length_bits, self.words.tobytes()))

    def __xor__(self, other: BitString) -> BitString:
        if self.length_bits != other.length_bits:
            raise InvalidParameterError("xor of strings with different lengths")
        return BitString(self.length_bits, self.words ^ other.words)

    def __str__(self) -> str:
        return (self.to_bits() + ord("0")).tobytes().decode()

    def __repr__(self) -> str:
        if self.length_bits <= 64:
            return f"BitString({str(self)!r})"
        return f"BitString(length_bits={self.length_bits}, popcount={popcount(self)})"


@dataclass(frozen=True)
class SourceSpec:
    length_bits: int
    p: float
    seed: int = 0

    def __post_init__(self):
        if self.length_bits < 1:
            raise InvalidParameterError(f"length_bits must be >= 1, got {self.length_bits}")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameterError(f"p must lie in [0, 1], got {self.p}")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def _block_bits(spec: SourceSpec, block: int) -> np.ndarray:
    start = block * BLOCK_BITS
    size = min(BLOCK_BITS, spec.length_bits - start)
    rng = np.random.Generator(np.random.Philox(key=(block << 64) | spec.seed))
    return rng.random(size) < spec.p


def generate_source(spec: SourceSpec, workers: int = 1) -> BitString:
    """Independent Bernoulli(p) bits from a seeded counter-based generator.

    Output depends only on ``spec``; ``workers`` only changes how many blocks
    are drawn concurrently.
    """
    n_words = _n_words(spec.length_bits)
    if spec.p == 0.0:
        return BitString.zeros(spec.length_bits)
    if spec.p == 1.0:
        return BitString.ones(spec.length_bits)
    n_blocks = -(-spec.length_bits // BLOCK_BITS)
    words = np.zeros(n_words, dtype=np.uint64)
    per_block = BLOCK_BITS // WORD_BITS

    def fill(block: int) -> None:
        bits = _block_bits(spec, block)
        w = _pack(bits, _n_words(bits.size))
        words[block * per_block : block * per_block + w.size] = w

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_blocks)))
    else:
        for block in range(n_blocks):
            fill(block)
    return BitString(spec.length_bits, words)


def popcount(b: BitString) -> int:
    return int(np.bitwise_count(b.words).sum())


def rotate(b: BitString, n: int) -> BitString:
    """Bit ``i`` of the result is bit ``(i + n) % M`` of ``b``."""
    _check_shift(b, n)
    if n == 0:
        return b
    return BitString.from_bits(np.roll(b.to_bits(), -n))


def _check_shift(b: BitString, n) -> None:
    if not 0 <= n < b.length_bits:
        raise InvalidParameterError(f"shift must satisfy 0 <= n < {b.length_bits}, got {n}")


@njit(inline="always")
def _pc64(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return (x * _H01) >> np.uint64(56)


@njit(parallel=True, cache=True)
def _cyclic_kernel(words, ext, shifts, tail, out):
    nw = words.shape[0]
    last = nw - 1
    for j in prange(shifts.shape[0]):
        n = shifts[j]
        q = n >> 6
        s = np.uint64(n & 63)
        total = np.uint64(0)
        if s == np.uint64(0):
            for k in range(last):
                total += _pc64(words[k] ^ ext[q + k])
            total += _pc64((words[last] ^ ext[q + last]) & tail)
        else:
            r = np.uint64(64) - s
            for k in range(last):
                total += _pc64(words[k] ^ ((ext[q + k] >> s) | (ext[q + k + 1] << r)))
            w = (ext[q + last] >> s) | (ext[q + last + 1] << r)
            total += _pc64((words[last] ^ w) & tail)
        out[j] = total


def _doubled_words(b: BitString) -> np.ndarray:
    # b followed by b, so a cyclic window starting at n is a plain word-aligned read.
    bits = b.to_bits()
    return _pack(np.concatenate([bits, bits]), 2 * b.words.size + 1)


def cyclic_distances(b: BitString, shifts: Sequence[int] | np.ndarray) -> np.ndarray:
    """``hamming_cyclic(b, n)`` for every ``n`` in ``shifts`` as an int64 array.

    The doubled buffer is built once; each shift streams over it without
    materializing a rotated copy.  Shifts run in parallel (numba threads),
    each writing its own output slot.
    """
    shifts = np.ascontiguousarray(shifts, dtype=np.int64)
    if shifts.ndim != 1:
        raise InvalidParameterError("shifts must be one-dimensional")
    if shifts.size and (shifts.min() < 0 or shifts.max() >= b.length_bits):
        raise InvalidParameterError(f"shifts must satisfy 0 <= n < {b.length_bits}")
    out = np.zeros(shifts.size, dtype=np.int64)
    if shifts.size:
        words = np.array(b.words)
        _cyclic_kernel(words, _doubled_words(b), shifts, _tail_mask(b.length_bits), out)
    return out


def hamming_cyclic(b: BitString, n: int) -> int:
    """Hamming distance between ``b`` and ``b`` cyclically shifted by ``n``."""
    _check_shift(b, n)
    return int(cyclic_distances(b, [n])[0])


def _check_split(total_bits: int, count: int, sub_len: int) -> None:
    if count < 1 or sub_len < 1:
        raise InvalidParameterError(f"count and sub_len must be >= 1, got {count}, {sub_len}")
    if count * sub_len > total_bits:
        raise InvalidParameterError(
            f"source of {total_bits} bits is too short for {count} x {sub_len} bits"
        )


def split_substrings(long: BitString, count: int, sub_len: int) -> list[BitString]:
    _check_split(long.length_bits, count, sub_len)
    bits = long.to_bits()[: count * sub_len].reshape(count, sub_len)
    return [BitString.from_bits(row) for row in bits]


def substring_popcounts(long: BitString, count: int, sub_len: int) -> np.ndarray:
    """Popcounts of ``split_substrings(long, count, sub_len)`` without building them."""
    _check_split(long.length_bits, count, sub_len)
    cum = np.zeros(long.words.size + 1, dtype=np.int64)
    np.cumsum(np.bitwise_count(long.words), out=cum[1:])
    bounds = np.arange(count + 1, dtype=np.int64) * sub_len
    word = bounds // WORD_BITS
    rem = (bounds % WORD_BITS).astype(np.uint64)
    padded = np.append(long.words, np.uint64(0))
    partial = padded[word] & ((np.uint64(1) << rem) - np.uint64(1))
    prefix = cum[word] + np.bitwise_count(partial).astype(np.int64)
    return np.diff(prefix)


def header_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".hdr")


def write_bitstring(path, b: BitString, *, p: float | None = None, seed: int | None = None) -> None:
    """Raw LSB-first bytes at ``path`` plus a ``key=value`` sidecar at ``path.hdr``."""
    lines = [f"length_bits={b.length_bits}"]
    if p is not None:
        lines.append(f"p={fmt_real(p)}")
    if seed is not None:
        lines.append(f"seed={seed}")
    lines.append(f"generator={GENERATOR_VERSION}")
    atomic_write_bytes(path, b.to_bytes())
    atomic_write_text(header_path(path), "\n".join(lines) + "\n")


def read_header(path) -> dict[str, str]:
    header = {}
    for line in header_path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()
    return header


def read_bitstring(path) -> tuple[BitString, dict[str, str]]:
    header = read_header(path)
    if "length_bits" not in header:
        raise InvalidParameterError(f"{header_path(path)} lacks length_bits")
    return BitString.from_bytes(Path(path).read_bytes(), int(header["length_bits"])), header
