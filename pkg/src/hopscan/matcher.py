"""Pattern matchers for conjunctive point/range/set restrictions.

A restriction constrains the in-place projection ``x & m`` of a key onto
its mask: equal to a fixed pattern, inside a closed interval, or member
of a finite set.  Restriction values are stored in place (spread over the
mask's positions), so projections compare as plain integers.

``reduce_filters`` normalizes a conjunction before matching: point
filters merge into one fixed pattern, ranges shed their common senior
prefix (a suffix-complete range collapses to a pure point), sets shed
their common pattern and may collapse to ranges or points, and complete
residual ranges drop out entirely.

The compiled :class:`Matcher` answers three questions about a key:

* ``match(x)`` -- does the key satisfy every restriction;
* ``mismatch(x)`` -- 0 on match, otherwise the signed position of the
  most senior bit responsible (positive: the projection overshoots its
  restriction, negative: it undershoots);
* ``hint(x, mm)`` -- the smallest key above ``x`` that could possibly
  match, or ``None`` when no such key exists.

Hints never skip a qualifying key: for a negative mismatch at ``j`` the
bit ``j`` is raised and everything junior is filled with the minimal
admissible continuation of every restriction; for a positive mismatch
the matcher finds the lowest position that can grow -- a free bit of the
key, or a restriction that can step to its next admissible branch -- and
applies the same construction there.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

from .bitkey import BitKey, Mask, mask_profile
from .errors import ContractError


@dataclass(frozen=True, slots=True)
class PointFilter:
    """Restriction ``x & mask == pattern`` (pattern in place)."""

    mask: Mask
    pattern: int

    def __post_init__(self) -> None:
        if not self.mask.bits:
            raise ContractError("point filter needs a nonempty mask")
        if self.pattern & ~self.mask.bits:
            raise ContractError("pattern has bits outside the mask")


@dataclass(frozen=True, slots=True)
class RangeFilter:
    """Restriction ``lo <= x & mask <= hi`` (bounds in place, inclusive)."""

    mask: Mask
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if not self.mask.bits:
            raise ContractError("range filter needs a nonempty mask")
        if self.lo & ~self.mask.bits or self.hi & ~self.mask.bits:
            raise ContractError("range bounds have bits outside the mask")
        if self.lo > self.hi:
            raise ContractError("range lower bound exceeds upper bound")


@dataclass(frozen=True, slots=True)
class SetFilter:
    """Restriction ``x & mask in values`` (values in place, sorted)."""

    mask: Mask
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.mask.bits:
            raise ContractError("set filter needs a nonempty mask")
        if not self.values:
            raise ContractError("set filter needs at least one value")
        if list(self.values) != sorted(set(self.values)):
            raise ContractError("set values must be strictly sorted")
        for v in self.values:
            if v & ~self.mask.bits:
                raise ContractError("set value has bits outside the mask")


Filter = Union[PointFilter, RangeFilter, SetFilter]


@dataclass(frozen=True, slots=True)
class ReducedProblem:
    """Normal form of a conjunction: one merged fixed pattern plus
    residual non-factorizable range/set restrictions on disjoint masks.

    ``trivial`` is ``"true"`` when every filter dropped out (anything
    matches) and ``"false"`` when the conjunction is unsatisfiable.
    """

    width: int
    fixed: PointFilter | None
    residual: tuple[Filter, ...]
    trivial: str | None = None

    @property
    def parts(self) -> tuple[Filter, ...]:
        if self.fixed is None:
            return self.residual
        return (self.fixed,) + self.residual


def _compact(value: int, mask_bits: int) -> int:
    """Gather the mask bits of ``value`` into a dense integer."""
    out = 0
    k = 0
    b = mask_bits
    while b:
        low = b & -b
        if value & low:
            out |= 1 << k
        k += 1
        b ^= low
    return out


def reduce_filters(filters: Sequence[Filter], width: int | None = None) -> ReducedProblem:
    """Normalize a conjunction of filters on pairwise disjoint masks."""
    if width is None:
        if not filters:
            raise ContractError("empty filter list needs an explicit width")
        width = filters[0].mask.width

    seen = 0
    for f in filters:
        if f.mask.width != width:
            raise ContractError("filter mask widths differ")
        if seen & f.mask.bits:
            raise ContractError("filter masks overlap")
        seen |= f.mask.bits

    fixed_mask = 0
    fixed_pattern = 0
    residual: list[Filter] = []

    def add_point(mask_bits: int, pattern: int) -> bool:
        nonlocal fixed_mask, fixed_pattern
        overlap = fixed_mask & mask_bits
        if (fixed_pattern ^ pattern) & overlap:
            return False  # contradictory fixed bits (defensive; disjoint inputs cannot hit this)
        fixed_mask |= mask_bits
        fixed_pattern |= pattern
        return True

    for f in filters:
        kind = "P" if isinstance(f, PointFilter) else "R" if isinstance(f, RangeFilter) else "S"
        mask_bits = f.mask.bits
        if kind == "P":
            payload: tuple = (f.pattern,)
        elif kind == "R":
            payload = (f.lo, f.hi)
        else:
            payload = (f.values,)

        while True:
            if kind == "P":
                (p,) = payload
                if not add_point(mask_bits, p):
                    return ReducedProblem(width, None, (), trivial="false")
                break

            if kind == "R":
                a, b = payload
                if a == b:
                    kind, payload = "P", (a,)
                    continue
                diff_top = (a ^ b).bit_length()
                prefix_bits = mask_bits & ~((1 << diff_top) - 1)
                if prefix_bits:
                    if not add_point(prefix_bits, a & prefix_bits):
                        return ReducedProblem(width, None, (), trivial="false")
                    mask_bits &= (1 << diff_top) - 1
                    payload = (a & mask_bits, b & mask_bits)
                    continue
                # non-factorizable now; drop if complete
                if a == 0 and b == mask_bits:
                    break
                residual.append(RangeFilter(Mask(width, mask_bits), a, b))
                break

            # kind == "S"
            (values,) = payload
            if len(values) == 1:
                kind, payload = "P", (values[0],)
                continue
            span = _compact(values[-1], mask_bits) - _compact(values[0], mask_bits) + 1
            if span == len(values):
                kind, payload = "R", (values[0], values[-1])
                continue
            or_all = 0
            and_all = mask_bits
            for v in values:
                or_all |= v
                and_all &= v
            common = mask_bits & ~(or_all ^ and_all)
            if common:
                if not add_point(common, and_all & common):
                    return ReducedProblem(width, None, (), trivial="false")
                mask_bits &= ~common
                payload = (tuple(v & mask_bits for v in values),)
                continue
            residual.append(SetFilter(Mask(width, mask_bits), values))
            break

    fixed = PointFilter(Mask(width, fixed_mask), fixed_pattern) if fixed_mask else None
    trivial = "true" if fixed is None and not residual else None
    return ReducedProblem(width, fixed, tuple(residual), trivial)


# ---------------------------------------------------------------------------
# Compiled restriction parts.  All share the same small interface used by the
# composite matcher: mismatch, minimal fill below a cut, and (for a positive
# mismatch) candidate positions where the restriction itself can grow.
# ---------------------------------------------------------------------------


class _PointPart:
    __slots__ = ("mask", "pattern", "profile", "min_v", "max_v", "source")

    def __init__(self, f: PointFilter):
        self.mask = f.mask.bits
        self.pattern = f.pattern
        self.profile = mask_profile(f.mask)
        self.min_v = f.pattern
        self.max_v = f.pattern
        self.source = f

    def member(self, x: int) -> bool:
        return (x & self.mask) == self.pattern

    def mismatch(self, x: int) -> int:
        diff = (x & self.mask) ^ self.pattern
        if not diff:
            return 0
        j = diff.bit_length()
        return j if x >> (j - 1) & 1 else -j

    def fill_below(self, h_base: int, cut: int) -> int:
        low = (1 << (cut - 1)) - 1
        assert (h_base & self.mask & ~low) == (self.pattern & ~low)
        return self.pattern & low

    def raise_candidates(self, x: int, j: int) -> Iterable[int]:
        return ()


class _RangePart:
    __slots__ = ("mask", "lo", "hi", "profile", "min_v", "max_v", "source")

    def __init__(self, f: RangeFilter):
        self.mask = f.mask.bits
        self.lo = f.lo
        self.hi = f.hi
        self.profile = mask_profile(f.mask)
        self.min_v = f.lo
        self.max_v = f.hi
        self.source = f

    def member(self, x: int) -> bool:
        return self.lo <= (x & self.mask) <= self.hi

    def mismatch(self, x: int) -> int:
        v = x & self.mask
        if v < self.lo:
            return -((v ^ self.lo).bit_length())
        if v > self.hi:
            return (v ^ self.hi).bit_length()
        return 0

    def fill_below(self, h_base: int, cut: int) -> int:
        low = (1 << (cut - 1)) - 1
        va = h_base & self.mask
        lo_senior = self.lo & ~low
        assert lo_senior <= va <= self.hi
        if va == lo_senior:
            return self.lo & low
        return 0

    def raise_candidates(self, x: int, j: int) -> Iterable[int]:
        # 0-bits of the projection, above j, where stepping the projection
        # up (and clearing its junior bits) keeps it inside [lo, hi].
        v = x & self.mask
        zeros = ~v & self.mask & ~((1 << j) - 1)
        while zeros:
            low = zeros & -zeros
            s = low.bit_length()
            below = (1 << (s - 1)) - 1
            w = (v & ~below) | (1 << (s - 1))
            if w > self.hi:
                return
            if (w | (self.mask & below)) >= self.lo:
                yield s
                return
            zeros ^= low


class _SetPart:
    __slots__ = ("mask", "values", "levels", "profile", "min_v", "max_v", "source")

    def __init__(self, f: SetFilter):
        self.mask = f.mask.bits
        self.values = f.values
        self.profile = mask_profile(f.mask)
        # (component bits, component tail) senior first
        self.levels = tuple((c.bits, c.tail) for c in self.profile.components)
        self.min_v = f.values[0]
        self.max_v = f.values[-1]
        self.source = f

    def member(self, x: int) -> bool:
        v = x & self.mask
        i = bisect_left(self.values, v)
        return i < len(self.values) and self.values[i] == v

    def mismatch(self, x: int) -> int:
        if self.member(x):
            return 0
        values = self.values
        lo, hi = 0, len(values)
        prefix = 0
        for cmask, ctail in self.levels:
            vq = x & cmask
            base = prefix | vq
            l2 = bisect_left(values, base, lo, hi)
            l3 = bisect_left(values, base + (1 << ctail), l2, hi)
            if l2 < l3:
                lo, hi, prefix = l2, l3, base
                continue
            if l2 < hi:  # successor branch exists at this level
                sq = values[l2] & cmask
                return -((vq ^ sq).bit_length())
            pq = values[hi - 1] & cmask
            return (vq ^ pq).bit_length()
        return 0  # unreachable: membership handled above

    def fill_below(self, h_base: int, cut: int) -> int:
        low = (1 << (cut - 1)) - 1
        va = h_base & self.mask
        i = bisect_left(self.values, va)
        assert i < len(self.values)
        e = self.values[i]
        assert (e & ~low) == va, "no admissible continuation for this prefix"
        return e & low

    def raise_candidates(self, x: int, j: int) -> Iterable[int]:
        # At every level of the narrowing walk, the first in-set branch
        # whose value diverges from the key's above position j.
        values = self.values
        lo, hi = 0, len(values)
        prefix = 0
        for cmask, ctail in self.levels:
            vq = x & cmask
            thr = vq | (cmask & ((1 << j) - 1))
            nxt = thr + (1 << ctail)
            if not nxt & ~cmask:  # still inside the component
                i2 = bisect_left(values, prefix | nxt, lo, hi)
                if i2 < hi:
                    eq = values[i2] & cmask
                    yield (vq ^ eq).bit_length()
            base = prefix | vq
            l2 = bisect_left(values, base, lo, hi)
            l3 = bisect_left(values, base + (1 << ctail), l2, hi)
            if l2 >= l3:
                return  # walk diverged here; deeper levels are unreachable
            lo, hi, prefix = l2, l3, base


class _Trivial(Enum):
    MATCH = "match"
    MISMATCH = "mismatch"


TRIVIAL_MATCH = _Trivial.MATCH
TRIVIAL_MISMATCH = _Trivial.MISMATCH


class Matcher:
    """Compiled evaluator for a reduced conjunction of restrictions."""

    __slots__ = ("width", "reduced", "parts", "union_mask", "_comask", "_full", "_unsatisfiable")

    def __init__(self, reduced: ReducedProblem):
        self.width = reduced.width
        self.reduced = reduced
        self._unsatisfiable = reduced.trivial == "false"
        parts = []
        for f in reduced.parts:
            if isinstance(f, PointFilter):
                parts.append(_PointPart(f))
            elif isinstance(f, RangeFilter):
                parts.append(_RangePart(f))
            else:
                parts.append(_SetPart(f))
        self.parts = tuple(parts)
        self.union_mask = 0
        for p in parts:
            self.union_mask |= p.mask
        self._full = (1 << self.width) - 1
        self._comask = self._full ^ self.union_mask

    # -- predicates ---------------------------------------------------

    @property
    def trivially_true(self) -> bool:
        return self.reduced.trivial == "true"

    @property
    def trivially_false(self) -> bool:
        return self.reduced.trivial == "false"

    def match(self, x: int) -> bool:
        if self.trivially_false:
            return False
        xi = int(x)
        for part in self.parts:
            if not part.member(xi):
                return False
        return True

    def mismatch(self, x: int) -> int:
        """0 if ``x`` matches, else the signed most senior decisive bit."""
        if self._unsatisfiable:
            raise ContractError("mismatch is undefined for an unsatisfiable conjunction")
        xi = int(x)
        best = 0
        best_abs = 0
        for part in self.parts:
            mm = part.mismatch(xi)
            if mm:
                a = mm if mm > 0 else -mm
                if a > best_abs:
                    best, best_abs = mm, a
        return best

    def hint(self, x: int, mm: int) -> int | None:
        """Next key above ``x`` that can satisfy everything, or ``None``."""
        if mm == 0:
            raise ContractError("hint requires a nonzero mismatch")
        xi = int(x)
        if mm < 0:
            flip = -mm
        else:
            j = mm
            above = ~((1 << j) - 1)
            free = ~xi & self._comask & above
            flip = (free & -free).bit_length() if free else 0
            for part in self.parts:
                for s in part.raise_candidates(xi, j):
                    if not flip or s < flip:
                        flip = s
            if not flip:
                return None
        below = (1 << (flip - 1)) - 1
        h_base = (xi & ~below) | (1 << (flip - 1))
        h = h_base
        for part in self.parts:
            if part.mask & below:
                h |= part.fill_below(h_base, flip)
        return h

    # -- geometry -----------------------------------------------------

    def bounding_interval(self) -> tuple[BitKey, BitKey] | None:
        """Smallest/largest keys that can satisfy the restrictions."""
        if self.trivially_false:
            return None
        lo = 0
        hi = self._comask
        for part in self.parts:
            lo |= part.min_v
            hi |= part.max_v
        return BitKey(lo, self.width), BitKey(hi, self.width)

    # -- partition specialization --------------------------------------

    def specialize(self, prefix_mask: Mask, prefix: int) -> "Matcher | _Trivial":
        """Restrict to keys whose senior bits under ``prefix_mask`` equal
        ``prefix``: returns TRIVIAL_MATCH / TRIVIAL_MISMATCH, or a matcher
        on the remaining mask bits with restrictions re-reduced."""
        if prefix_mask.width != self.width:
            raise ContractError("prefix mask width differs")
        pm = prefix_mask.bits
        if pm and pm != ((1 << self.width) - 1) ^ ((1 << prefix_mask.tail) - 1):
            raise ContractError("prefix mask must be one senior contiguous run")
        if int(prefix) & ~pm:
            raise ContractError("prefix has bits outside its mask")
        if self.trivially_false:
            return TRIVIAL_MISMATCH
        pv = int(prefix)
        new_filters: list[Filter] = []
        for part in self.parts:
            f = part.source
            overlap = f.mask.bits & pm
            rem_bits = f.mask.bits & ~pm
            if not overlap:
                new_filters.append(f)
                continue
            fixed = pv & overlap
            if isinstance(f, PointFilter):
                if fixed != (f.pattern & overlap):
                    return TRIVIAL_MISMATCH
                if rem_bits:
                    new_filters.append(PointFilter(Mask(self.width, rem_bits), f.pattern & rem_bits))
            elif isinstance(f, RangeFilter):
                lo_s = f.lo & overlap
                hi_s = f.hi & overlap
                if fixed < lo_s or fixed > hi_s:
                    return TRIVIAL_MISMATCH
                if rem_bits:
                    new_lo = f.lo & rem_bits if fixed == lo_s else 0
                    new_hi = f.hi & rem_bits if fixed == hi_s else rem_bits
                    if not (new_lo == 0 and new_hi == rem_bits):
                        new_filters.append(RangeFilter(Mask(self.width, rem_bits), new_lo, new_hi))
            else:
                keep = [v & rem_bits for v in f.values if (v & overlap) == fixed]
                if not keep:
                    return TRIVIAL_MISMATCH
                if rem_bits:
                    new_filters.append(SetFilter(Mask(self.width, rem_bits), tuple(sorted(keep))))
        reduced = reduce_filters(new_filters, width=self.width)
        if reduced.trivial == "false":
            return TRIVIAL_MISMATCH
        if reduced.trivial == "true":
            return TRIVIAL_MATCH
        return Matcher(reduced)

    def clone(self) -> "Matcher":
        """Matchers are stateless; safe to share, returned as-is."""
        return self

    def __repr__(self) -> str:
        kinds = ",".join(type(p).__name__.strip("_") for p in self.parts)
        return f"Matcher(width={self.width}, parts=[{kinds}], trivial={self.reduced.trivial})"


def build_matcher(reduced: ReducedProblem) -> Matcher:
    return Matcher(reduced)


def compile_filters(filters: Sequence[Filter], width: int | None = None) -> Matcher:
    """Reduce and compile a conjunction in one step."""
    return Matcher(reduce_filters(filters, width))
