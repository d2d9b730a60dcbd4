"""Fixed-width keys and bit-position masks.

Bit positions are 1-based and LSB-first: position ``i`` carries weight
``2**(i-1)``, position ``n`` is the most senior bit of an ``n``-bit key.
Keys of equal width order exactly like unsigned integers.

A :class:`Mask` selects a subset of positions.  Projection keeps the
selected bits *in place* (it does not compact them), so projections of
keys compare in the same order as the keys themselves restricted to the
mask.  The canonical partition of a mask splits it into its maximal
contiguous runs, listed senior first; ``head``/``tail`` of a run bound
the weight of any key bits inside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import ContractError

#: Upper bound on key width.  Wide enough for large composite schemas
#: (anything beyond 128 bits is allowed up to this cap).
MAX_WIDTH = 512


class BitKey(int):
    """An unsigned ``width``-bit key.

    Subclasses :class:`int`, so ordering, hashing and bitwise operators
    behave like the underlying unsigned value.  Arithmetic results are
    plain ints; re-wrap explicitly when the width still matters.
    """

    width: int

    def __new__(cls, value: int, width: int) -> "BitKey":
        if not 1 <= width <= MAX_WIDTH:
            raise ContractError(f"key width must be in 1..{MAX_WIDTH}, got {width}")
        value = int(value)
        if value < 0 or value >> width:
            raise ContractError(f"value {value} does not fit in {width} bits")
        self = super().__new__(cls, value)
        self.width = width
        return self

    @property
    def value(self) -> int:
        return int(self)

    def to_binary(self) -> str:
        """Fixed-width binary string, senior bit first."""
        return format(int(self), f"0{self.width}b")

    def to_hex(self) -> str:
        return format(int(self), f"0{(self.width + 3) // 4}x")

    def __repr__(self) -> str:
        return f"BitKey({self.to_binary()})"


@dataclass(frozen=True, slots=True)
class Mask:
    """A subset of the bit positions ``{1..width}``.

    ``bits`` is the integer with exactly the selected positions set, i.e.
    the value written :math:`1_m | 0_{\\tilde m}` in-place.
    """

    width: int
    bits: int

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_WIDTH:
            raise ContractError(f"mask width must be in 1..{MAX_WIDTH}")
        if self.bits < 0 or self.bits >> self.width:
            raise ContractError("mask has positions outside 1..width")

    @classmethod
    def from_positions(cls, width: int, positions: Iterable[int]) -> "Mask":
        bits = 0
        for p in positions:
            if not 1 <= p <= width:
                raise ContractError(f"position {p} outside 1..{width}")
            bits |= 1 << (p - 1)
        return cls(width, bits)

    @classmethod
    def full(cls, width: int) -> "Mask":
        return cls(width, (1 << width) - 1)

    @classmethod
    def empty(cls, width: int) -> "Mask":
        return cls(width, 0)

    @property
    def positions(self) -> tuple[int, ...]:
        """Selected positions, ascending."""
        out, b = [], self.bits
        while b:
            low = b & -b
            out.append(low.bit_length())
            b ^= low
        return tuple(out)

    @property
    def d(self) -> int:
        """Number of selected positions."""
        return self.bits.bit_count()

    @property
    def head(self) -> int:
        """Most senior selected position."""
        if not self.bits:
            raise ContractError("empty mask has no head")
        return self.bits.bit_length()

    @property
    def tail(self) -> int:
        """One less than the most junior selected position."""
        if not self.bits:
            raise ContractError("empty mask has no tail")
        return (self.bits & -self.bits).bit_length() - 1

    @property
    def is_contiguous(self) -> bool:
        return bool(self.bits) and self.head == self.tail + self.d

    def comask(self) -> "Mask":
        """Projection onto the complementary positions."""
        return Mask(self.width, ((1 << self.width) - 1) ^ self.bits)

    def union(self, other: "Mask") -> "Mask":
        self._check_width(other)
        return Mask(self.width, self.bits | other.bits)

    def intersect(self, other: "Mask") -> "Mask":
        self._check_width(other)
        return Mask(self.width, self.bits & other.bits)

    def difference(self, other: "Mask") -> "Mask":
        self._check_width(other)
        return Mask(self.width, self.bits & ~other.bits)

    def disjoint_with(self, other: "Mask") -> bool:
        self._check_width(other)
        return not self.bits & other.bits

    def _check_width(self, other: "Mask") -> None:
        if self.width != other.width:
            raise ContractError("mask widths differ")

    def __repr__(self) -> str:
        return f"Mask({set(self.positions) or '{}'}, width={self.width})"


@dataclass(frozen=True, slots=True)
class MaskProfile:
    """Canonical partition of a mask into contiguous runs, senior first."""

    d: int
    head: int
    tail: int
    components: tuple[Mask, ...]


def key_and_mask(x: BitKey, m: Mask) -> BitKey:
    """In-place projection ``x & m`` (selected bits kept, others zeroed)."""
    if x.width != m.width:
        raise ContractError(f"key width {x.width} != mask width {m.width}")
    return BitKey(int(x) & m.bits, x.width)


def merge_disjoint(p: BitKey, q: BitKey, mp: Mask, mq: Mask) -> BitKey:
    """Union of two projections living on disjoint masks."""
    if not (p.width == q.width == mp.width == mq.width):
        raise ContractError("widths differ")
    if mp.bits & mq.bits:
        raise ContractError("masks overlap")
    if int(p) & ~mp.bits:
        raise ContractError("p has bits outside its mask")
    if int(q) & ~mq.bits:
        raise ContractError("q has bits outside its mask")
    return BitKey(int(p) | int(q), p.width)


def comask(m: Mask) -> Mask:
    return m.comask()


def mask_profile(m: Mask) -> MaskProfile:
    """Head, tail and canonical partition of a nonempty mask."""
    if not m.bits:
        raise ContractError("empty mask has no profile")
    components = []
    bits = m.bits
    while bits:
        head = bits.bit_length()          # senior position of next run
        run = 0
        pos = head
        while pos >= 1 and bits >> (pos - 1) & 1:
            run |= 1 << (pos - 1)
            pos -= 1
        components.append(Mask(m.width, run))
        bits ^= run
    return MaskProfile(d=m.d, head=m.head, tail=m.tail, components=tuple(components))
