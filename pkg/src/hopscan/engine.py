"""Scan strategies over (store, matcher) and partitioned execution.

One loop drives all three strategies.  Every visited key gets one
matcher evaluation; on a mismatch the runner either steps to the next
stored key or seeks to the matcher's hint, depending on whether the
mismatch seniority clears the threshold.  Threshold ``width`` never
jumps (crawler), threshold ``0`` always jumps (frog); anything between
is the mixed strategy.  Identical thresholds therefore produce
identical op counts by construction.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from weakref import WeakKeyDictionary

from .errors import ContractError
from .locus import RegionDistribution, StoreStats, frog_gate, region_distribution, threshold
from .matcher import TRIVIAL_MATCH, TRIVIAL_MISMATCH, Matcher
from .store import InstrumentedStore, OpCounters, PartitionedStore


@dataclass(frozen=True, slots=True)
class Strategy:
    kind: str                    # crawler | frog | grasshopper | auto
    threshold: int | None = None

    @classmethod
    def crawler(cls) -> "Strategy":
        return cls("crawler")

    @classmethod
    def frog(cls) -> "Strategy":
        return cls("frog")

    @classmethod
    def grasshopper(cls, t: int) -> "Strategy":
        if t < 0:
            raise ContractError("threshold cannot be negative")
        return cls("grasshopper", t)

    @classmethod
    def auto(cls) -> "Strategy":
        return cls("auto")


@dataclass(slots=True)
class ScanOptions:
    count_only: bool = False
    r: float = 1.0
    # Reserved: a separate (lower) threshold for mismatches that overshoot,
    # which indicate wider gaps than undershoots of equal seniority.  Not
    # acted on by the runner.
    eager_positive_threshold: int | None = None


@dataclass
class PartitionOutcome:
    index: int
    lo: int
    hi: int
    outcome: str                 # scanned | skipped | trivial
    result_count: int
    counters: OpCounters


@dataclass
class ScanReport:
    """Result bag plus the op counts the cost model consumes."""

    strategy: str
    threshold: int | None
    result_count: int
    result_keys: list[int] | None
    counters: OpCounters
    n0: int = 0                  # keys visited that failed the match
    n1: int = 0                  # jumps, when every mismatch jumps
    n2: int = 0                  # jumps taken
    n3: int = 0                  # mismatches crawled over
    wall_ns: int = 0
    partitions_visited: int = 0
    partitions_skipped: int = 0
    partitions_trivial: int = 0
    partition_outcomes: list[PartitionOutcome] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "threshold": self.threshold,
            "result_count": self.result_count,
            "n_scan": self.counters.n_scan,
            "n_seek": self.counters.n_seek,
            "n_get": self.counters.n_get,
            "n_match": self.counters.n_match,
            "wall_ns": self.wall_ns,
            "partitions_skipped": self.partitions_skipped,
            "partitions_trivial": self.partitions_trivial,
        }

    def model_counters(self) -> dict[str, int]:
        return {"n0": self.n0, "n1": self.n1, "n2": self.n2, "n3": self.n3}


_dist_cache: "WeakKeyDictionary" = WeakKeyDictionary()


def cached_region_distribution(store, tail_bit: int, mask) -> RegionDistribution:
    """Distribution passes are O(card); reuse them per (store, order, mask)."""
    try:
        per_store = _dist_cache.setdefault(store, {})
    except TypeError:  # store not weak-referenceable
        return region_distribution(store, tail_bit, mask)
    key = (tail_bit, mask.bits)
    if key not in per_store:
        per_store[key] = region_distribution(store, tail_bit, mask)
    return per_store[key]


def choose_strategy(matcher: Matcher, stats: StoreStats,
                    dist: RegionDistribution | None = None) -> Strategy:
    """Pick a threshold before the scan.

    A pure fixed-pattern problem goes through the frog gate first (a win
    there means threshold 0); everything else, and gate losses, use the
    gap-partial-sum threshold.  ``width`` disables jumping entirely.
    """
    reduced = matcher.reduced
    if reduced.trivial is not None:
        return Strategy.grasshopper(matcher.width)
    if reduced.fixed is not None and not reduced.residual and dist is not None:
        gate = frog_gate(reduced.fixed.mask, stats, dist)
        if gate.frog_wins:
            return Strategy.grasshopper(0)
    return Strategy.grasshopper(threshold(reduced, stats))


def _resolve(strategy: Strategy, matcher: Matcher, store, r: float) -> tuple[str, int]:
    width = matcher.width
    if strategy.kind == "crawler":
        return "crawler", width
    if strategy.kind == "frog":
        return "frog", 0
    if strategy.kind == "grasshopper":
        if strategy.threshold is None:
            raise ContractError("grasshopper strategy needs a threshold")
        return "grasshopper", min(strategy.threshold, width)
    if strategy.kind == "auto":
        st = store.stats()
        stats = StoreStats(st.card, st.min_key, st.max_key, r)
        dist = None
        reduced = matcher.reduced
        if reduced.trivial is None and reduced.fixed is not None and not reduced.residual and st.card:
            fixed_mask = reduced.fixed.mask
            if fixed_mask.bits != (1 << matcher.width) - 1:  # full-width points go through Get
                dist = cached_region_distribution(store, fixed_mask.tail, fixed_mask)
        chosen = choose_strategy(matcher, stats, dist)
        return "auto", chosen.threshold if chosen.threshold is not None else width
    raise ContractError(f"unknown strategy {strategy.kind!r}")


def run_scan(store, matcher: Matcher, strategy: Strategy,
             options: ScanOptions | None = None) -> ScanReport:
    """Collect every stored key satisfying the matcher, per strategy."""
    options = options or ScanOptions()
    if getattr(store, "width", None) is not None and store.width != matcher.width:
        raise ContractError(f"store width {store.width} != matcher width {matcher.width}")
    label, t = _resolve(strategy, matcher, store, options.r)
    counters = OpCounters()
    started = time.perf_counter_ns()

    def report(count: int, keys: list[int] | None, n0=0, n2=0, n3=0) -> ScanReport:
        jumps_all = n2 if t == 0 else 0
        return ScanReport(
            strategy=label, threshold=t, result_count=count, result_keys=keys,
            counters=counters, n0=n0, n1=jumps_all, n2=n2, n3=n3,
            wall_ns=time.perf_counter_ns() - started,
        )

    bag: list[int] | None = None if options.count_only else []
    if matcher.trivially_false:
        return report(0, bag)
    interval = matcher.bounding_interval()
    st = store.stats()
    if st.card == 0 or interval is None:
        return report(0, bag)
    lo = max(int(interval[0]), st.min_key)
    hi = min(int(interval[1]), st.max_key)
    if lo > hi:
        return report(0, bag)

    inst = InstrumentedStore(store, counters)
    reduced = matcher.reduced

    # A full-width fixed pattern pins a single key: one Get answers it.
    if reduced.fixed is not None and not reduced.residual \
            and reduced.fixed.mask.bits == (1 << matcher.width) - 1:
        p = reduced.fixed.pattern
        found = inst.get(p) is not None
        if found and bag is not None:
            bag.append(p)
        return report(1 if found else 0, bag)

    count = 0
    n_mismatch_events = 0
    jumps = 0
    crawl_steps = 0
    mismatch = matcher.mismatch
    hint = matcher.hint
    scan_next = inst.scan_next
    seek = inst.seek
    get = inst.get

    x = seek(lo)
    while x is not None and x <= hi:
        counters.n_match += 1
        mm = mismatch(x)
        if mm == 0:
            count += 1
            if bag is not None:
                bag.append(x)
                get(x)
            x = scan_next(x)
        else:
            counters.n_mismatch += 1
            n_mismatch_events += 1
            if (mm if mm > 0 else -mm) <= t:
                crawl_steps += 1
                x = scan_next(x)
            else:
                counters.n_hint += 1
                h = hint(x, mm)
                if h is None:
                    break
                jumps += 1
                x = seek(h)
    return report(count, bag, n0=n_mismatch_events, n2=jumps, n3=crawl_steps)


def run_partitioned(pstore: PartitionedStore, matcher: Matcher, strategy: Strategy,
                    parallelism: int = 1, options: ScanOptions | None = None) -> ScanReport:
    """Per-partition scans with pruning, merged deterministically.

    Each partition first specializes the matcher to its senior prefix:
    a contradiction skips the partition with zero store work, a
    tautology counts (or enumerates) it without match calls, and
    anything else scans with the reduced matcher.  Auto strategy
    recomputes the threshold per partition from its local cardinality
    and span.
    """
    options = options or ScanOptions()
    parts = pstore.partitions()
    plans: list[tuple] = []
    for p in parts:
        narrowed = matcher.specialize(p.prefix_mask, p.prefix)
        plans.append((p, narrowed))

    def run_one(plan) -> tuple[PartitionOutcome, list[int] | None, ScanReport | None]:
        p, narrowed = plan
        if narrowed is TRIVIAL_MISMATCH:
            return PartitionOutcome(p.index, p.lo, p.hi, "skipped", 0, OpCounters()), None, None
        view = pstore.view(p.index)
        if narrowed is TRIVIAL_MATCH:
            counters = OpCounters()
            if options.count_only:
                return PartitionOutcome(p.index, p.lo, p.hi, "trivial", p.card, counters), None, None
            inst = InstrumentedStore(view, counters)
            keys = []
            k = inst.seek(p.lo)
            while k is not None:
                keys.append(k)
                inst.get(k)
                k = inst.scan_next(k)
            return PartitionOutcome(p.index, p.lo, p.hi, "trivial", len(keys), counters), keys, None
        sub_strategy = strategy
        if strategy.kind == "auto":
            stats = StoreStats(p.card, p.min_key, p.max_key, options.r)
            if p.card and narrowed.reduced.trivial is None:
                t = threshold(narrowed.reduced, stats, span=p.hi - p.lo + 1)
            else:
                t = narrowed.width
            sub_strategy = Strategy.grasshopper(t)
        sub = run_scan(view, narrowed, sub_strategy, options)
        out = PartitionOutcome(p.index, p.lo, p.hi, "scanned", sub.result_count, sub.counters)
        return out, sub.result_keys, sub

    started = time.perf_counter_ns()
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(run_one, plans))
    else:
        results = [run_one(plan) for plan in plans]

    merged_counters = OpCounters()
    bag: list[int] | None = None if options.count_only else []
    total = 0
    n0 = n2 = n3 = 0
    outcomes = []
    visited = skipped = trivial = 0
    threshold_used: int | None = None
    for out, keys, sub in results:
        outcomes.append(out)
        merged_counters.add(out.counters)
        total += out.result_count
        if out.outcome == "skipped":
            skipped += 1
        elif out.outcome == "trivial":
            trivial += 1
            if bag is not None and keys is not None:
                bag.extend(keys)
        else:
            visited += 1
            if bag is not None and keys is not None:
                bag.extend(keys)
            if sub is not None:
                n0 += sub.n0
                n2 += sub.n2
                n3 += sub.n3
                threshold_used = sub.threshold
    label = strategy.kind
    always_jumps = strategy.kind == "frog" or (strategy.kind == "grasshopper" and strategy.threshold == 0)
    return ScanReport(
        strategy=label,
        threshold=strategy.threshold if strategy.kind == "grasshopper" else threshold_used,
        result_count=total, result_keys=bag, counters=merged_counters,
        n0=n0, n1=n2 if always_jumps else 0, n2=n2, n3=n3,
        wall_ns=time.perf_counter_ns() - started,
        partitions_visited=visited, partitions_skipped=skipped, partitions_trivial=trivial,
        partition_outcomes=outcomes,
    )
