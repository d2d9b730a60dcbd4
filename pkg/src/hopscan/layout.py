"""Schema definition and composite-key composition.

A :class:`Layout` assigns each dimension's bits to positions of the
composite key while preserving the dimension's internal bit order (the
k-th most significant dimension bit lands on the k-th most senior
assigned position).  Keys composed this way trace a shuffled-bit curve
through the product space; the two built-in strategies are single-bit
interleaving (widest dimension first) and plain concatenation
("odometer" order).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Mapping, Sequence

from .bitkey import BitKey, Mask
from .errors import ContractError

SCHEMA_FORMAT = "hopscan-schema/1"

Strategy = Literal["interleave_by_cardinality", "odometer", "explicit"]


@dataclass(frozen=True, slots=True)
class Dimension:
    """A named attribute with power-of-two cardinality ``2**bits``."""

    name: str
    bits: int

    def __post_init__(self) -> None:
        if self.bits < 1:
            raise ContractError(f"dimension {self.name!r} needs at least 1 bit")
        if not self.name:
            raise ContractError("dimension name must be nonempty")

    @property
    def cardinality(self) -> int:
        return 1 << self.bits


@dataclass(frozen=True, slots=True)
class Layout:
    """Dimensions plus their bit placements in an ``width``-bit key.

    ``placement[name]`` lists composite-key positions senior first; the
    lists are pairwise disjoint, each strictly descending, and together
    cover ``{1..width}`` exactly.
    """

    dimensions: tuple[Dimension, ...]
    placement: Mapping[str, tuple[int, ...]]
    width: int

    def __post_init__(self) -> None:
        seen = 0
        for dim in self.dimensions:
            pos = self.placement.get(dim.name)
            if pos is None or len(pos) != dim.bits:
                raise ContractError(f"placement for {dim.name!r} must list {dim.bits} positions")
            if list(pos) != sorted(pos, reverse=True):
                raise ContractError(f"placement for {dim.name!r} must preserve bit order (descending)")
            for p in pos:
                if not 1 <= p <= self.width:
                    raise ContractError(f"position {p} outside 1..{self.width}")
                bit = 1 << (p - 1)
                if seen & bit:
                    raise ContractError(f"position {p} assigned twice")
                seen |= bit
        if seen != (1 << self.width) - 1:
            raise ContractError("placements must cover every key position")

    def dim_mask(self, name: str) -> Mask:
        """Mask over the positions holding dimension ``name``."""
        pos = self.placement.get(name)
        if pos is None:
            raise ContractError(f"unknown dimension {name!r}")
        return Mask.from_positions(self.width, pos)

    def dimension(self, name: str) -> Dimension:
        for dim in self.dimensions:
            if dim.name == name:
                return dim
        raise ContractError(f"unknown dimension {name!r}")

    def scatter(self, name: str, value: int) -> int:
        """Place one dimension value onto its key positions (others zero)."""
        dim = self.dimension(name)
        if not 0 <= value < dim.cardinality:
            raise ContractError(
                f"value {value} out of range for dimension {name!r} (cardinality {dim.cardinality})"
            )
        out = 0
        for k, p in enumerate(self.placement[name]):  # senior dim bit -> senior position
            if value >> (dim.bits - 1 - k) & 1:
                out |= 1 << (p - 1)
        return out

    def gather(self, name: str, key: int) -> int:
        """Read one dimension value back out of a composite key."""
        dim = self.dimension(name)
        value = 0
        for k, p in enumerate(self.placement[name]):
            value |= (key >> (p - 1) & 1) << (dim.bits - 1 - k)
        return value

    def compose(self, values: Mapping[str, int]) -> BitKey:
        """Build the composite key from per-dimension values."""
        key = 0
        for dim in self.dimensions:
            if dim.name not in values:
                raise ContractError(f"missing value for dimension {dim.name!r}")
            key |= self.scatter(dim.name, values[dim.name])
        return BitKey(key, self.width)

    def decompose(self, key: BitKey | int) -> dict[str, int]:
        """Exact inverse of :meth:`compose`."""
        if isinstance(key, BitKey) and key.width != self.width:
            raise ContractError(f"key width {key.width} != layout width {self.width}")
        k = int(key)
        if k < 0 or k >> self.width:
            raise ContractError("key does not fit the layout width")
        return {dim.name: self.gather(dim.name, k) for dim in self.dimensions}

    def to_dict(self) -> dict:
        return {
            "format": SCHEMA_FORMAT,
            "dimensions": [{"name": d.name, "bits": d.bits} for d in self.dimensions],
            "placement": {name: list(pos) for name, pos in self.placement.items()},
            "width": self.width,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_dict(cls, data: Mapping) -> "Layout":
        if data.get("format") != SCHEMA_FORMAT:
            raise ContractError(f"unsupported schema format {data.get('format')!r}")
        dims = [Dimension(d["name"], int(d["bits"])) for d in data["dimensions"]]
        if "placement" in data and data["placement"]:
            placement = {name: tuple(int(p) for p in pos) for name, pos in data["placement"].items()}
            width = int(data.get("width") or sum(d.bits for d in dims))
            return cls(tuple(dims), placement, width)
        strategy = data.get("strategy", "interleave_by_cardinality")
        return build_layout(dims, strategy)

    @classmethod
    def load(cls, path: str | Path) -> "Layout":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_layout(
    dims: Sequence[Dimension],
    strategy: Strategy = "interleave_by_cardinality",
    placement: Mapping[str, Sequence[int]] | None = None,
) -> Layout:
    """Assemble a layout using one of the placement strategies.

    ``interleave_by_cardinality`` deals one bit per dimension per round,
    widest dimension first (ties broken by declaration order), filling
    positions from the senior end down and skipping dimensions whose bits
    are exhausted.  ``odometer`` concatenates dimensions, first dimension
    most senior.  ``explicit`` takes ``placement`` verbatim and validates.
    """
    if not dims:
        raise ContractError("need at least one dimension")
    names = [d.name for d in dims]
    if len(set(names)) != len(names):
        raise ContractError("dimension names must be unique")
    width = sum(d.bits for d in dims)

    if strategy == "explicit":
        if placement is None:
            raise ContractError("explicit strategy needs a placement")
        fixed = {name: tuple(pos) for name, pos in placement.items()}
        return Layout(tuple(dims), fixed, width)

    result: dict[str, list[int]] = {d.name: [] for d in dims}
    if strategy == "odometer":
        pos = width
        for d in dims:
            for _ in range(d.bits):
                result[d.name].append(pos)
                pos -= 1
    elif strategy == "interleave_by_cardinality":
        order = sorted(range(len(dims)), key=lambda i: -dims[i].bits)  # stable on ties
        remaining = {d.name: d.bits for d in dims}
        pos = width
        while pos >= 1:
            for i in order:
                name = dims[i].name
                if remaining[name]:
                    remaining[name] -= 1
                    result[name].append(pos)
                    pos -= 1
    else:
        raise ContractError(f"unknown layout strategy {strategy!r}")
    return Layout(tuple(dims), {k: tuple(v) for k, v in result.items()}, width)
