"""Ordered key stores, op-count instrumentation and partitioning.

A store holds distinct integer keys (optionally with an opaque bytes
payload) and answers three primitives: ``get`` a key's value, ``scan_next``
the smallest stored key above one, and ``seek`` the smallest stored key at
or above one.  Stores are frozen after construction; readers may run
concurrently.

Two interchangeable implementations are provided (flat sorted array and a
bulk-loaded B+ tree) plus an instrumentation wrapper that tallies every
primitive call, and a partitioned wrapper that splits the key space into
disjoint intervals carrying their own statistics and senior-prefix
factorization.
"""

from __future__ import annotations

import struct
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

from .bitkey import Mask
from .errors import ContractError

GZK_MAGIC = b"GZK1"


class CoreStats(NamedTuple):
    card: int
    min_key: int | None
    max_key: int | None


@dataclass
class OpCounters:
    """Monotone event tallies for one scan run."""

    n_get: int = 0
    n_scan: int = 0
    n_seek: int = 0
    n_match: int = 0
    n_mismatch: int = 0
    n_hint: int = 0

    def snapshot(self) -> "OpCounters":
        return OpCounters(self.n_get, self.n_scan, self.n_seek,
                          self.n_match, self.n_mismatch, self.n_hint)

    def reset(self) -> None:
        self.n_get = self.n_scan = self.n_seek = 0
        self.n_match = self.n_mismatch = self.n_hint = 0

    def add(self, other: "OpCounters") -> None:
        self.n_get += other.n_get
        self.n_scan += other.n_scan
        self.n_seek += other.n_seek
        self.n_match += other.n_match
        self.n_mismatch += other.n_mismatch
        self.n_hint += other.n_hint

    def as_dict(self) -> dict[str, int]:
        return {
            "n_get": self.n_get, "n_scan": self.n_scan, "n_seek": self.n_seek,
            "n_match": self.n_match, "n_mismatch": self.n_mismatch, "n_hint": self.n_hint,
        }


class SortedArrayStore:
    """Keys in a flat sorted list; seeks by bisection, scans by a cached
    cursor (falls back to bisection whenever the cursor is stale, so
    interleaved readers stay correct)."""

    def __init__(self, keys: Sequence[int], values: Sequence[bytes] | None = None,
                 *, width: int | None = None, _presorted: bool = False):
        if values is not None and len(values) != len(keys):
            raise ContractError("values must align with keys")
        if not _presorted:
            if values is None:
                keys = sorted(set(keys))
            else:
                paired = sorted(dict(zip(keys, values)).items())
                keys = [k for k, _ in paired]
                values = [v for _, v in paired]
        self._keys: list[int] = list(keys)
        self._values = list(values) if values is not None else None
        self.width = width
        self._pos = 0

    def get(self, key: int) -> bytes | None:
        i = bisect_left(self._keys, key)
        if i < len(self._keys) and self._keys[i] == key:
            return self._values[i] if self._values is not None else b""
        return None

    def scan_next(self, key: int) -> int | None:
        keys = self._keys
        pos = self._pos
        if pos < len(keys) and keys[pos] == key:
            pos += 1
        else:
            pos = bisect_right(keys, key)
        self._pos = pos
        return keys[pos] if pos < len(keys) else None

    def seek(self, key: int) -> int | None:
        keys = self._keys
        pos = bisect_left(keys, key)
        self._pos = pos
        return keys[pos] if pos < len(keys) else None

    def stats(self) -> CoreStats:
        if not self._keys:
            return CoreStats(0, None, None)
        return CoreStats(len(self._keys), self._keys[0], self._keys[-1])

    def iter_keys(self) -> Iterator[int]:
        return iter(self._keys)

    def __len__(self) -> int:
        return len(self._keys)


class BPlusTreeStore:
    """Bulk-loaded B+ tree over the same contract (differential twin of
    the array store)."""

    def __init__(self, keys: Sequence[int], values: Sequence[bytes] | None = None,
                 *, width: int | None = None, fanout: int = 64):
        if fanout < 2:
            raise ContractError("fanout must be at least 2")
        if values is None:
            keys = sorted(set(keys))
            kv = None
        else:
            if len(values) != len(keys):
                raise ContractError("values must align with keys")
            paired = sorted(dict(zip(keys, values)).items())
            keys = [k for k, _ in paired]
            kv = [v for _, v in paired]
        self.width = width
        self._values = kv
        self._leaves: list[list[int]] = [list(keys[i:i + fanout]) for i in range(0, len(keys), fanout)] or [[]]
        self._leaf_offsets = []
        off = 0
        for leaf in self._leaves:
            self._leaf_offsets.append(off)
            off += len(leaf)
        self._card = off
        # routing levels: level[k][i] is the first key under child i
        self._levels: list[list[int]] = []
        level = [leaf[0] for leaf in self._leaves if leaf]
        while len(level) > 1:
            self._levels.append(level)
            level = [level[i] for i in range(0, len(level), fanout)]
        self._fanout = fanout

    def _leaf_index(self, key: int) -> int:
        if not self._levels:
            return 0
        idx = 0
        for depth in range(len(self._levels) - 1, -1, -1):
            level = self._levels[depth]
            if depth == len(self._levels) - 1:
                idx = bisect_right(level, key) - 1
            else:
                start = idx * self._fanout
                stop = min(start + self._fanout, len(level))
                idx = bisect_right(level, key, start, stop) - 1
            idx = max(idx, 0)
        return idx

    def get(self, key: int) -> bytes | None:
        li = self._leaf_index(key)
        leaf = self._leaves[li]
        i = bisect_left(leaf, key)
        if i < len(leaf) and leaf[i] == key:
            if self._values is None:
                return b""
            return self._values[self._leaf_offsets[li] + i]
        return None

    def seek(self, key: int) -> int | None:
        li = self._leaf_index(key)
        leaf = self._leaves[li]
        i = bisect_left(leaf, key)
        if i < len(leaf):
            return leaf[i]
        if li + 1 < len(self._leaves):
            return self._leaves[li + 1][0]
        return None

    def scan_next(self, key: int) -> int | None:
        return self.seek(key + 1)

    def stats(self) -> CoreStats:
        if not self._card:
            return CoreStats(0, None, None)
        return CoreStats(self._card, self._leaves[0][0], self._leaves[-1][-1])

    def iter_keys(self) -> Iterator[int]:
        for leaf in self._leaves:
            yield from leaf

    def __len__(self) -> int:
        return self._card


class InstrumentedStore:
    """Counting decorator shared by every implementation.  ``stats`` and
    ``iter_keys`` are free (statistics passes are not scan work)."""

    def __init__(self, base, counters: OpCounters | None = None):
        self.base = base
        self.counters = counters if counters is not None else OpCounters()
        self.width = getattr(base, "width", None)

    def get(self, key: int) -> bytes | None:
        self.counters.n_get += 1
        return self.base.get(key)

    def scan_next(self, key: int) -> int | None:
        self.counters.n_scan += 1
        return self.base.scan_next(key)

    def seek(self, key: int) -> int | None:
        self.counters.n_seek += 1
        return self.base.seek(key)

    def stats(self) -> CoreStats:
        return self.base.stats()

    def iter_keys(self) -> Iterator[int]:
        return self.base.iter_keys()

    def op_counters(self) -> OpCounters:
        return self.counters.snapshot()

    def reset_counters(self) -> None:
        self.counters.reset()

    def __len__(self) -> int:
        return len(self.base)


class _RangeView:
    """A store restricted to keys inside [lo, hi]; shares the base data."""

    def __init__(self, base, lo: int, hi: int):
        self.base = base
        self.lo = lo
        self.hi = hi
        self.width = getattr(base, "width", None)
        first = base.seek(lo)
        self._min = first if first is not None and first <= hi else None
        self._card = 0
        self._max = None
        if self._min is not None:
            k = self._min
            while k is not None and k <= hi:
                self._card += 1
                self._max = k
                k = base.scan_next(k)

    def get(self, key: int) -> bytes | None:
        if not self.lo <= key <= self.hi:
            return None
        return self.base.get(key)

    def seek(self, key: int) -> int | None:
        k = self.base.seek(max(key, self.lo))
        return k if k is not None and k <= self.hi else None

    def scan_next(self, key: int) -> int | None:
        return self.seek(key + 1)

    def stats(self) -> CoreStats:
        return CoreStats(self._card, self._min, self._max)

    def iter_keys(self) -> Iterator[int]:
        k = self._min
        while k is not None and k <= self.hi:
            yield k
            k = self.base.scan_next(k)

    def __len__(self) -> int:
        return self._card


@dataclass(frozen=True)
class Partition:
    """One key interval of a partitioned store with its local statistics
    and the senior bit run shared by every key it can contain."""

    index: int
    lo: int
    hi: int
    card: int
    min_key: int | None
    max_key: int | None
    prefix_mask: Mask
    prefix: int


def _common_prefix(lo: int, hi: int, width: int) -> tuple[Mask, int]:
    diff = lo ^ hi
    if diff == 0:
        return Mask.full(width), lo
    top = diff.bit_length()
    bits = (((1 << width) - 1) >> top) << top
    return Mask(width, bits), lo & bits


class PartitionedStore:
    """Disjoint, sorted key intervals covering the whole key space, each
    exposing the basic store contract over its slice of the base store."""

    def __init__(self, base, boundaries: Sequence[int]):
        # boundaries: ascending starts of each partition; first must be 0
        self.base = base
        self.width = base.width
        if base.width is None:
            raise ContractError("partitioned store needs a store with a key width")
        if not boundaries or boundaries[0] != 0 or list(boundaries) != sorted(set(boundaries)):
            raise ContractError("boundaries must be ascending and start at 0")
        space = 1 << base.width
        if boundaries[-1] >= space:
            raise ContractError("boundary outside the key space")
        self._parts: list[Partition] = []
        self._views: list[_RangeView] = []
        ends = list(boundaries[1:]) + [space]
        for i, (lo, end) in enumerate(zip(boundaries, ends)):
            hi = end - 1
            view = _RangeView(base, lo, hi)
            st = view.stats()
            pmask, pval = _common_prefix(lo, hi, base.width)
            self._parts.append(Partition(i, lo, hi, st.card, st.min_key, st.max_key, pmask, pval))
            self._views.append(view)

    @classmethod
    def equal_ranges(cls, base, parts: int) -> "PartitionedStore":
        if parts < 1:
            raise ContractError("need at least one partition")
        space = 1 << base.width
        if parts > space:
            raise ContractError("more partitions than keys in the space")
        step = space // parts
        return cls(base, [i * step for i in range(parts)])

    @classmethod
    def by_target_size(cls, base, target: int) -> "PartitionedStore":
        if target < 1:
            raise ContractError("target size must be positive")
        keys = list(base.iter_keys())
        boundaries = [0]
        for i in range(target, len(keys), target):
            if keys[i] != boundaries[-1]:
                boundaries.append(keys[i])
        return cls(base, boundaries)

    def partitions(self) -> list[Partition]:
        return list(self._parts)

    def view(self, index: int) -> _RangeView:
        return self._views[index]

    def stats(self) -> CoreStats:
        return self.base.stats()

    def iter_keys(self) -> Iterator[int]:
        return self.base.iter_keys()

    def __len__(self) -> int:
        return len(self.base)


def write_gzk(path: str | Path, keys: Iterable[int], width: int) -> None:
    """Binary key dump: magic, key width, count, then fixed-size keys."""
    ordered = sorted(set(int(k) for k in keys))
    nbytes = (width + 7) // 8
    with open(path, "wb") as fh:
        fh.write(GZK_MAGIC)
        fh.write(struct.pack("<H", width))
        fh.write(struct.pack("<Q", len(ordered)))
        for k in ordered:
            if k < 0 or k >> width:
                raise ContractError(f"key {k} does not fit in {width} bits")
            fh.write(k.to_bytes(nbytes, "little"))


def read_gzk(path: str | Path, *, allow_unsorted: bool = False) -> tuple[int, list[int]]:
    """Load a key dump; validates strict monotonicity unless told to sort."""
    raw = Path(path).read_bytes()
    if raw[:4] != GZK_MAGIC:
        raise ContractError("not a key-dump file (bad magic)")
    width = struct.unpack_from("<H", raw, 4)[0]
    count = struct.unpack_from("<Q", raw, 6)[0]
    nbytes = (width + 7) // 8
    expected = 14 + count * nbytes
    if len(raw) != expected:
        raise ContractError(f"truncated key dump: expected {expected} bytes, got {len(raw)}")
    keys = [int.from_bytes(raw[14 + i * nbytes: 14 + (i + 1) * nbytes], "little") for i in range(count)]
    for i in range(1, len(keys)):
        if keys[i] <= keys[i - 1]:
            if allow_unsorted:
                keys = sorted(set(keys))
                break
            raise ContractError("key dump is not strictly increasing (pass allow_unsorted to fix)")
    return width, keys
