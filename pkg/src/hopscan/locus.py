"""Geometry of restriction loci and the jump/crawl decision analytics.

The keys matching a restriction form clusters along the key line,
separated by gaps ("lacunae").  For a fixed pattern on a mask the
cluster sizes and the gap lengths have closed forms driven by the
mask's canonical partition; for a residual range the same partial-sum
structure holds with per-component interval widths.  These quantities
feed two decisions made before a scan starts:

* the *frog gate*: whether jumping on every mismatch already beats a
  plain scan on average (dense case via the lacuna count, sparse case
  via the distribution of stored keys over aligned regions);
* the *threshold*: the mismatch seniority above which a jump is
  expected to clear enough stored keys to repay a seek.

All counts are exact integers; only ratios and deviations are floats.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Protocol

from .bitkey import Mask, mask_profile
from .errors import ContractError
from .matcher import Filter, PointFilter, RangeFilter, ReducedProblem, SetFilter, _compact


@dataclass(frozen=True, slots=True)
class PointLocusStats:
    """Cluster/gap structure of a fixed-pattern locus (pattern independent)."""

    cluster_count: int
    cluster_len: int
    spread: int
    total_lacunae: int
    sigmas: tuple[int, ...]          # gap length at each partition level, senior first
    component_tails: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class RangeLocusStats:
    """Cluster/gap structure of a non-factorizable incomplete range locus."""

    spread: int
    r: int                            # admissible projection count
    total_lacunae: int
    sigmas: tuple[int, ...]           # combined edge-gap length per level
    component_tails: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class StoreStats:
    """Store-side facts the planner needs: size, key range, scan/seek ratio."""

    card: int
    min_key: int | None = None
    max_key: int | None = None
    r: float = 1.0

    def __post_init__(self) -> None:
        if self.card < 0:
            raise ContractError("cardinality cannot be negative")
        if self.r <= 0:
            raise ContractError("scan/seek ratio must be positive")
        if self.r > 1:
            warnings.warn(f"scan/seek ratio {self.r} > 1; seeks cheaper than scans is unusual")


@dataclass(frozen=True, slots=True)
class RegionDistribution:
    """How stored keys spread over the aligned regions of order ``tail_bit``.

    ``counts``/``p``/``cofreq`` are keyed by region index (key >> tail_bit)
    and carry entries only for occupied regions; empty regions contribute
    through ``mean`` and ``sigma``.  ``cofreq[i]`` counts, over all fixed
    patterns on the mask, how many pattern loci leave region ``i`` strictly
    inside one of their gaps.
    """

    width: int
    mask: Mask
    tail_bit: int
    counts: Mapping[int, int]
    p: Mapping[int, float]
    mean: float
    sigma: float
    cofreq: Mapping[int, int]
    exact: bool = True


@dataclass(frozen=True, slots=True)
class FrogGate:
    """Outcome of the always-jump-vs-always-scan comparison."""

    r1: float
    r2: float
    r2_prime: float
    sigma: float
    sigma0: float
    frog_wins: bool
    frog_wins_sufficient: bool
    vacuous: bool = False


def point_locus_stats(m: Mask) -> PointLocusStats:
    """Exact locus structure for ``x & m == p`` (any pattern ``p``)."""
    profile = mask_profile(m)
    n, d, tail = m.width, m.d, m.tail
    comps = profile.components
    terms = [(1 << c.head) - (1 << c.tail) for c in comps]
    sigmas = []
    acc = 0
    for t in reversed(terms):
        acc += t
        sigmas.append(acc)
    sigmas.reverse()
    spread = (1 << n) - m.bits
    return PointLocusStats(
        cluster_count=1 << (n - d - tail),
        cluster_len=1 << tail,
        spread=spread,
        total_lacunae=spread - (1 << (n - d)),
        sigmas=tuple(sigmas),
        component_tails=tuple(c.tail for c in comps),
    )


def range_locus_stats(m: Mask, lo: int, hi: int) -> RangeLocusStats:
    """Exact locus structure for a reduced range ``lo <= x & m <= hi``.

    The caller must reduce first: the range must be non-factorizable
    (bounds differing at the mask's head) and incomplete.
    """
    if lo & ~m.bits or hi & ~m.bits:
        raise ContractError("range bounds have bits outside the mask")
    if lo >= hi:
        raise ContractError("degenerate range; reduce to a point first")
    if (lo ^ hi).bit_length() != m.head:
        raise ContractError("factorizable range; run it through reduce_filters first")
    if lo == 0 and hi == m.bits:
        raise ContractError("complete range; reduce_filters eliminates it")
    n, d = m.width, m.d
    comask_value = ((1 << n) - 1) ^ m.bits
    spread = (hi | comask_value) - lo + 1
    r = _compact(hi, m.bits) - _compact(lo, m.bits) + 1
    comps = mask_profile(m).components
    terms = []
    for c in comps:
        ri = (((hi & c.bits) - (lo & c.bits)) >> c.tail) + 1  # may be <= 0
        terms.append((1 << c.head) - ri * (1 << c.tail))
    sigmas = []
    acc = 0
    for t in reversed(terms):
        acc += t
        sigmas.append(acc)
    sigmas.reverse()
    return RangeLocusStats(
        spread=spread,
        r=r,
        total_lacunae=spread - r * (1 << (n - d)),
        sigmas=tuple(sigmas),
        component_tails=tuple(c.tail for c in comps),
    )


def count_projections_below(x: int, mask_bits: int) -> int:
    """Number of values confined to ``mask_bits`` that are < ``x``."""
    if x <= 0:
        return 0
    count = 0
    bits = x
    while bits:
        top = 1 << (bits.bit_length() - 1)
        count += 1 << (mask_bits & (top - 1)).bit_count()
        if not mask_bits & top:
            return count
        bits ^= top
    return count


def region_cofrequency(region_index: int, tail_bit: int, m: Mask) -> int:
    """Exact count of fixed patterns whose locus gaps swallow this region."""
    base = region_index << tail_bit
    slot = base & m.bits
    c_hi = (((1 << m.width) - 1) ^ m.bits) & ~((1 << tail_bit) - 1)
    lo = base - c_hi  # patterns in [lo, base) leave the region inside a gap
    k = count_projections_below(base, m.bits) - count_projections_below(lo, m.bits)
    if lo <= slot < base:
        k -= 1
    return k


class _KeySource(Protocol):
    def iter_keys(self): ...


def region_distribution(store: _KeySource, tail_bit: int, m: Mask) -> RegionDistribution:
    """One read-only pass over the store, bucketed by aligned region."""
    n = m.width
    if not 0 <= tail_bit <= n:
        raise ContractError("region order outside 0..width")
    counts: dict[int, int] = {}
    card = 0
    for key in store.iter_keys():
        counts[key >> tail_bit] = counts.get(key >> tail_bit, 0) + 1
        card += 1
    regions = 1 << (n - tail_bit)
    mean = 1.0 / regions
    if card:
        p = {i: c / card for i, c in counts.items()}
        var = sum((pi - mean) ** 2 for pi in p.values())
        var += (regions - len(p)) * mean * mean
        sigma = math.sqrt(var / regions)
    else:
        p = {}
        sigma = 0.0
    cofreq = {i: region_cofrequency(i, tail_bit, m) for i in counts}
    return RegionDistribution(
        width=n, mask=m, tail_bit=tail_bit, counts=counts, p=p,
        mean=mean, sigma=sigma, cofreq=cofreq,
    )


def _pow2(exponent: float) -> float:
    try:
        return math.pow(2.0, exponent)
    except OverflowError:
        return math.inf


def frog_gate(m: Mask, stats: StoreStats, dist: RegionDistribution) -> FrogGate:
    """Decide whether always-jumping beats always-scanning on average.

    Dense test: the gap count per pattern against the store size.
    Sparse test: expected gap coverage from the region distribution,
    either exact (r2) or through the deviation-only sufficient bound
    (r2_prime, valid when sigma < sigma0).
    """
    n, d, tail = m.width, m.d, m.tail
    if dist.tail_bit != tail:
        raise ContractError("distribution computed at a different region order")
    if stats.card == 0:
        return FrogGate(0.0, 0.0, 0.0, 0.0, math.inf, True, True, vacuous=True)
    r1 = ((1 << (n - d - tail)) - 1) / (stats.card * (1.0 - 2.0 ** (-d)))
    r2 = sum(dist.cofreq[i] * dist.p[i] for i in dist.p) / ((1 << d) - 1) if d else 0.0
    if d < n:
        a = 1.0 - _pow2(d - n)
        sigma0 = _pow2(1 - 3 * n + 1.5 * tail + 1.5 * d) / (math.sqrt(27.0) * a)
        r2_prime = a + 1.5 * (_pow2(3 * (n - tail) + 1) * a * a * dist.sigma * dist.sigma) ** (1.0 / 3.0)
    else:
        sigma0 = math.inf
        r2_prime = 0.0
    return FrogGate(
        r1=r1,
        r2=r2,
        r2_prime=r2_prime,
        sigma=dist.sigma,
        sigma0=sigma0,
        frog_wins=stats.r > min(r1, r2),
        frog_wins_sufficient=dist.sigma < sigma0 and stats.r > min(r1, r2_prime),
    )


def _part_sigmas(f: Filter) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(partial gap sums, component tails) for one reduced restriction."""
    if isinstance(f, PointFilter):
        s = point_locus_stats(f.mask)
        return s.sigmas, s.component_tails
    if isinstance(f, RangeFilter):
        s = range_locus_stats(f.mask, f.lo, f.hi)
        return s.sigmas, s.component_tails
    assert isinstance(f, SetFilter)
    # Edge gaps of a set locus follow its bounding range.
    s = _bounding_range_sigmas(f.mask, f.values[0], f.values[-1])
    return s


def _bounding_range_sigmas(m: Mask, lo: int, hi: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    comps = mask_profile(m).components
    sigmas = []
    acc = 0
    terms = []
    for c in comps:
        ri = (((hi & c.bits) - (lo & c.bits)) >> c.tail) + 1
        terms.append((1 << c.head) - ri * (1 << c.tail))
    for t in reversed(terms):
        acc += t
        sigmas.append(acc)
    sigmas.reverse()
    return tuple(sigmas), tuple(c.tail for c in comps)


def threshold(reduced: ReducedProblem, stats: StoreStats, span: int | None = None) -> int:
    """Jump threshold from the gap partial sums.

    Per restriction, find the most junior partition level whose combined
    gap still exceeds span/(card*R) keys -- a gap that long holds about
    1/R stored keys on average, enough to repay one seek -- and take the
    tail of that level's component.  No such level means never jump
    (threshold = width).  A conjunction takes the minimum over its
    restrictions.  ``span`` defaults to the whole key space and can be
    narrowed for a partition.
    """
    width = reduced.width
    if stats.card == 0:
        return width
    if span is None:
        span = 1 << width
    cut = span / (stats.card * stats.r)
    best = width
    for f in reduced.parts:
        sigmas, tails = _part_sigmas(f)
        t_part = width
        for idx in range(len(sigmas) - 1, -1, -1):  # most junior level first
            if sigmas[idx] > cut:
                t_part = tails[idx]
                break
        if t_part < best:
            best = t_part
    return best


def threshold_analytic(width: int, card: int, r: float) -> int:
    """Closed-form alternative: width - log2(card * R), clamped to [0, width]."""
    if card <= 0 or r <= 0:
        return width
    t = math.ceil(width - math.log2(card * r))
    return max(0, min(width, t))


def modeled_cost(counters: Mapping[str, int], r: float) -> dict[str, float]:
    """Per-strategy cost in seek units from instrumented op counts."""
    return {
        "crawler": counters.get("n0", 0) * r,
        "frog": float(counters.get("n1", 0)),
        "grasshopper": counters.get("n2", 0) + counters.get("n3", 0) * r,
    }
