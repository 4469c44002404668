"""Bit-exact helpers for wide bus words.

Bit numbering is MSB-first everywhere: bit 0 of a word is its most
significant bit, and byte 0 of a packet occupies bits 0..7 of word 0.  This
keeps header offsets taken from protocol RFCs usable as-is.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BitRangeError, ConfigError, KeyPlacementError

MAX_BUS_BITS = 4096
MAX_KEY_BITS = 64


@dataclass(frozen=True, eq=False)
class WideBits:
    """An unsigned bit vector of fixed ``width`` held in a Python int."""

    width: int
    value: int = 0

    def __post_init__(self):
        if not 1 <= self.width <= MAX_BUS_BITS:
            raise ConfigError(f"width {self.width} outside 1..{MAX_BUS_BITS}")
        if self.value < 0 or self.value >> self.width:
            raise ConfigError(f"value does not fit in {self.width} bits")

    @classmethod
    def from_bytes(cls, data: bytes, width: int | None = None) -> WideBits:
        """Left-align ``data`` in a word of ``width`` bits, zero-padding the tail."""
        if width is None:
            width = len(data) * 8
        nbits = len(data) * 8
        if nbits > width:
            raise BitRangeError(f"{len(data)} bytes do not fit in {width} bits")
        return cls(width, int.from_bytes(data, "big") << (width - nbits))

    def to_bytes(self) -> bytes:
        nbytes = (self.width + 7) // 8
        return (self.value << (nbytes * 8 - self.width)).to_bytes(nbytes, "big")

    def bit(self, index: int) -> int:
        if not 0 <= index < self.width:
            raise BitRangeError(f"bit {index} outside word of {self.width} bits")
        return (self.value >> (self.width - 1 - index)) & 1

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def __eq__(self, other):
        if isinstance(other, WideBits):
            return self.width == other.width and self.value == other.value
        if isinstance(other, int):
            return self.value == other
        return NotImplemented

    def __hash__(self):
        return hash((self.width, self.value))

    def __rshift__(self, amount: int) -> WideBits:
        return WideBits(self.width, self.value >> amount)

    def __and__(self, other) -> WideBits:
        return WideBits(self.width, self.value & int(other) & ((1 << self.width) - 1))

    def __repr__(self):
        digits = (self.width + 3) // 4
        return f"WideBits({self.width}, 0x{self.value:0{digits}x})"


def numbits(n: int) -> int:
    """Bits needed to hold the value ``n``; ``numbits(0)`` is 1."""
    if n < 0:
        raise ConfigError(f"numbits of negative value {n}")
    return max(1, n.bit_length())


def b2b(nbytes: int) -> int:
    """Bytes to bits."""
    if nbytes < 0:
        raise ConfigError(f"negative byte count {nbytes}")
    return nbytes * 8


def create_mask(width: int, max_width: int = MAX_KEY_BITS) -> WideBits:
    """A word of ``width`` bits, all set."""
    if not 1 <= width <= max_width:
        raise ConfigError(f"mask width {width} outside 1..{max_width}")
    return WideBits(width, (1 << width) - 1)


def key_straddles(offset_bits: int, width_bits: int, bus_bits: int) -> bool:
    return offset_bits // bus_bits != (offset_bits + width_bits - 1) // bus_bits


def shift_def(header_bits: int, bus_bits: int, key_end_bit: int,
              key_bits: int | None = None) -> int:
    """Right-shift that moves a key ending at ``key_end_bit`` to the LSBs of its bus word.

    ``key_end_bit`` is exclusive and counted MSB-first from the header start.
    Passing ``key_bits`` also checks that the key sits inside one bus word.
    """
    if bus_bits < 1:
        raise ConfigError(f"bus width {bus_bits} must be positive")
    if not 0 <= key_end_bit <= header_bits:
        raise ConfigError(f"key end {key_end_bit} outside header of {header_bits} bits")
    if key_bits is not None:
        start = key_end_bit - key_bits
        if start < 0:
            raise ConfigError(f"key of {key_bits} bits cannot end at bit {key_end_bit}")
        if key_straddles(start, key_bits, bus_bits):
            raise KeyPlacementError(
                f"key at bits {start}..{key_end_bit - 1} crosses a {bus_bits}-bit word boundary")
    rem = key_end_bit % bus_bits
    return 0 if rem == 0 else bus_bits - rem


def extract_bits(word: WideBits, offset: int, width: int) -> int:
    """Value of ``width`` bits starting ``offset`` bits from the MSB of ``word``."""
    if offset < 0 or width < 1 or offset + width > word.width:
        raise BitRangeError(
            f"slice [{offset}, {offset + width}) outside word of {word.width} bits")
    return int((word >> (word.width - offset - width)) & create_mask(width, word.width))


def split_words(data: bytes, bus_bits: int) -> list[WideBits]:
    """Cut ``data`` into bus words, zero-padding the last one."""
    if bus_bits % 8:
        raise ConfigError(f"bus width {bus_bits} is not a whole number of bytes")
    step = bus_bits // 8
    return [WideBits.from_bytes(data[i:i + step], bus_bits) for i in range(0, len(data), step)]


def join_words(words, nbits: int) -> bytes:
    """Concatenate words MSB-first and keep the leading ``nbits`` bits (a byte multiple)."""
    if nbits % 8:
        raise ConfigError("join_words only returns whole bytes")
    raw = b"".join(w.to_bytes() for w in words)
    if nbits > len(raw) * 8:
        raise BitRangeError(f"{nbits} bits requested from {len(raw) * 8} available")
    return raw[: nbits // 8]
