"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with  pytest tests/test_acceptance.py -v -s  to see the per-criterion
lines; the whole suite is also part of the default pytest run.
"""

import random
import time

import pytest

from hopscan import (Mask, PointFilter, RangeFilter, SetFilter, PartitionedStore, ScanOptions,
                     SortedArrayStore, StoreStats, Strategy, compile_filters, frog_gate,
                     mask_profile, point_locus_stats, range_locus_stats, reduce_filters,
                     region_distribution, run_partitioned, run_scan, threshold,
                     threshold_analytic)
from hopscan.datasets import measure_r

import oracles
from test_matcher_props import check_matcher_exhaustively, random_case

PASS = "ACCEPTANCE PASS"


# -- A1 ----------------------------------------------------------------------

def test_a01_oracle_equivalence_randomized():
    """500 random stores x filter mixes: every strategy equals brute force."""
    started = time.monotonic()
    rng = random.Random(20240811)
    cases = 0
    runs = 0
    while cases < 500:
        width = rng.randint(8, 24)
        card = rng.randint(0, 5000)
        card = min(card, 1 << width)
        keys = sorted(rng.sample(range(1 << width), card))
        filters, specs = random_case(rng, width)
        matcher = compile_filters(filters, width=width)
        expected = [k for k in keys if oracles.conjunction_matches(k, specs)]
        stats = StoreStats(max(card, 1), None, None, r=0.5)
        computed = threshold(matcher.reduced, stats)
        strategies = [Strategy.crawler(), Strategy.frog(), Strategy.grasshopper(0),
                      Strategy.grasshopper(computed), Strategy.grasshopper(width)]
        for strat in strategies:
            rep = run_scan(SortedArrayStore(keys, width=width), matcher, strat)
            assert rep.result_keys == expected, (width, specs, strat)
            runs += 1
        cases += 1
    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"oracle-equivalence suite took {elapsed:.1f}s"
    print(f"{PASS} A1 oracle equivalence: {cases} cases, {runs} runs, "
          f"0 divergences, {elapsed:.1f}s")


# -- A2 ----------------------------------------------------------------------

def _predicted_gap_multiset(width, m, stats):
    """Gap multiset implied by the partial sums plus carry positions."""
    comps = mask_profile(m).components
    tail = m.tail
    free_bits = ((1 << width) - 1) & ~m.bits & ~((1 << tail) - 1)
    free_positions = []
    b = free_bits
    while b:
        low = b & -b
        free_positions.append(low.bit_length())
        b ^= low
    gaps = []
    for w in range(stats.cluster_count - 1):
        lowest_zero = (~w & (w + 1)).bit_length() - 1
        g = free_positions[lowest_zero]
        level = next(i for i, c in enumerate(comps) if c.head < g)
        gaps.append(stats.sigmas[level])
    return sorted(gaps)


def test_a02_point_locus_exact_all_masks():
    """Every mask, every pattern, width <= 10: formulas match brute force."""
    masks_checked = 0
    for width in range(1, 11):
        for bits in range(1, 1 << width):
            m = Mask(width, bits)
            stats = point_locus_stats(m)
            positions = list(m.positions)
            predicted_gaps = _predicted_gap_multiset(width, m, stats)
            for dense in range(1 << m.d):
                pattern = 0
                for i, p in enumerate(positions):
                    if dense >> i & 1:
                        pattern |= 1 << (p - 1)
                keys = oracles.point_locus(width, positions, pattern)
                clusters, gaps = oracles.clusters_and_gaps(keys)
                assert len(clusters) == stats.cluster_count
                assert all(b - a + 1 == stats.cluster_len for a, b in clusters)
                assert keys[-1] - keys[0] + 1 == stats.spread
                assert sum(gaps) == stats.total_lacunae
                assert sorted(gaps) == predicted_gaps
            masks_checked += 1
    print(f"{PASS} A2 point locus exactness: {masks_checked} masks, all patterns, exact")


# -- A3 ----------------------------------------------------------------------

def test_a03_partial_sum_bounds_all_masks():
    """0 < 2^head_j - sigma_j <= 2^tail_j <= 2^(head_j-1) for every level."""
    checked = 0
    for width in range(1, 17):
        for bits in range(1, 1 << width):
            m = Mask(width, bits)
            stats = point_locus_stats(m)
            for sigma, c in zip(stats.sigmas, mask_profile(m).components):
                assert 0 < (1 << c.head) - sigma <= (1 << c.tail) <= (1 << (c.head - 1))
                checked += 1
    print(f"{PASS} A3 partial-sum bounds: {checked} component levels, exact")


# -- A4 ----------------------------------------------------------------------

def _random_residual_range(rng):
    """Random reduced (non-factorizable, incomplete) range on width <= 10."""
    while True:
        width = rng.randint(3, 10)
        d = rng.randint(2, min(6, width))
        positions = sorted(rng.sample(range(1, width + 1), d))
        m = Mask.from_positions(width, positions)
        space = 1 << d
        a_dense, b_dense = sorted(rng.sample(range(space), 2))
        lo = sum(1 << (p - 1) for i, p in enumerate(positions) if a_dense >> i & 1)
        hi = sum(1 << (p - 1) for i, p in enumerate(positions) if b_dense >> i & 1)
        red = reduce_filters([RangeFilter(m, lo, hi)], width=width)
        if len(red.residual) == 1 and isinstance(red.residual[0], RangeFilter):
            f = red.residual[0]
            return width, f.mask, f.lo, f.hi


def test_a04_range_locus_exact_randomized():
    """200+ reduced ranges: totals and edge gaps match the partial sums."""
    rng = random.Random(77)
    cases = 0
    edge_checks = 0
    while cases < 200:
        width, m, lo, hi = _random_residual_range(rng)
        stats = range_locus_stats(m, lo, hi)
        keys = oracles.solution_set(width, [("range", list(m.positions), (lo, hi))])
        clusters, gaps = oracles.clusters_and_gaps(keys)
        assert keys[-1] - keys[0] + 1 == stats.spread
        assert sum(gaps) == stats.total_lacunae == stats.spread - stats.r * (1 << (width - m.d))
        comps = mask_profile(m).components
        psp_min, psp_max = keys[0], keys[-1]
        for level, c in enumerate(comps):
            size = 1 << c.head
            lo_boundary = (psp_min // size + 1) * size
            hi_boundary = (psp_max // size) * size
            if level == 0:
                if c.head == width:
                    continue  # no boundaries of this order inside the space
                for boundary in (lo_boundary, hi_boundary):
                    gap = oracles.gap_at_boundary(keys, boundary)
                    assert gap == stats.sigmas[0], (width, m.positions, lo, hi)
                    edge_checks += 1
            else:
                gap_lo = oracles.gap_at_boundary(keys, lo_boundary)
                gap_hi = oracles.gap_at_boundary(keys, hi_boundary)
                assert gap_lo is not None and gap_hi is not None
                assert gap_lo + gap_hi == stats.sigmas[level], (width, m.positions, lo, hi)
                edge_checks += 1
        cases += 1
    print(f"{PASS} A4 range locus exactness: {cases} ranges, {edge_checks} edge-gap checks, exact")


# -- A5 ----------------------------------------------------------------------

def test_a05_printed_reduction_fixtures():
    m = Mask.from_positions(6, [1, 2, 3, 4])
    red = reduce_filters([RangeFilter(m, 12, 15)])
    assert red.fixed == PointFilter(Mask.from_positions(6, [3, 4]), 12)
    assert red.residual == ()

    red = reduce_filters([RangeFilter(m, 11, 14)])
    assert red.fixed == PointFilter(Mask.from_positions(6, [4]), 8)
    assert red.residual == (RangeFilter(Mask.from_positions(6, [1, 2, 3]), 3, 6),)
    print(f"{PASS} A5 reduction fixtures: [12,15] -> point 12; [11,14] -> 8 | [3,6]")


# -- A6 ----------------------------------------------------------------------

def test_a06_hint_soundness_exhaustive():
    """Every hint jumps forward without skipping any admissible key."""
    rng = random.Random(4242)
    fixtures = 0
    for _ in range(60):
        width = rng.randint(4, 12)
        filters, specs = random_case(rng, width)
        matcher = compile_filters(filters, width=width)
        check_matcher_exhaustively(matcher, specs, width)
        fixtures += 1
    # deliberately adversarial shapes: deep sets, staggered composites
    extra = [
        (12, [("set", [1, 4, 7, 10], (0, 9, 520, 585, 576))]),
        (12, [("point", [12], 0), ("set", [2, 5], (0, 18)), ("range", [7, 8, 9], (64, 320))]),
        (10, [("range", [2, 3, 8, 9], (4, 390))]),
    ]
    for width, case in extra:
        filters = []
        specs = []
        for kind, positions, payload in case:
            m = Mask.from_positions(width, positions)
            if kind == "point":
                filters.append(PointFilter(m, payload))
                specs.append((kind, positions, payload))
            elif kind == "range":
                filters.append(RangeFilter(m, *payload))
                specs.append((kind, positions, payload))
            else:
                values = tuple(sorted(payload))
                filters.append(SetFilter(m, values))
                specs.append((kind, positions, set(values)))
        check_matcher_exhaustively(compile_filters(filters, width=width), specs, width)
        fixtures += 1
    print(f"{PASS} A6 hint soundness: {fixtures} fixtures exhaustive, 0 violations")


# -- A7 ----------------------------------------------------------------------

def test_a07_threshold_efficiency_large_store():
    """Masks with tails above the threshold basis: the mixed strategy's
    modeled cost never exceeds the crawler's (within 1% per family)."""
    started = time.monotonic()
    width = 24
    card = 100_000
    rng = random.Random(0xBADC0DE)
    keys = sorted(rng.sample(range(1 << width), card))
    store = SortedArrayStore(keys, width=width)
    measured = measure_r(store, ops=4000, trials=3, seed=1)
    r = measured["r"]
    assert r > 0
    basis = threshold_analytic(width, card, r)
    assert basis < width - 1, f"measured r={r:.3f} leaves no senior positions to test"
    stats = StoreStats(card, keys[0], keys[-1], r=r)

    families = 0
    family_ratios = []
    crawler_means = []
    hopper_means = []
    while families < 50:
        d = rng.randint(1, min(6, width - basis - 1))
        positions = sorted(rng.sample(range(basis + 2, width + 1), d))
        if min(positions) - 1 <= basis:  # tail must sit strictly above the basis
            continue
        m = Mask.from_positions(width, positions)
        crawler_costs = []
        hopper_costs = []
        for _ in range(3):
            dense = rng.randrange(1 << d)
            pattern = sum(1 << (p - 1) for i, p in enumerate(positions) if dense >> i & 1)
            matcher = compile_filters([PointFilter(m, pattern)], width=width)
            t = threshold(matcher.reduced, stats)
            crawl = run_scan(store, matcher, Strategy.crawler(), ScanOptions(count_only=True, r=r))
            hop = run_scan(store, matcher, Strategy.grasshopper(t), ScanOptions(count_only=True, r=r))
            assert hop.result_count == crawl.result_count
            crawler_costs.append(crawl.n0 * r)
            hopper_costs.append(hop.n2 + hop.n3 * r)
        c_mean = sum(crawler_costs) / len(crawler_costs)
        h_mean = sum(hopper_costs) / len(hopper_costs)
        crawler_means.append(c_mean)
        hopper_means.append(h_mean)
        if c_mean > 0:
            assert h_mean <= c_mean * 1.01, (positions, h_mean, c_mean)
            family_ratios.append(h_mean / c_mean)
        families += 1
    assert sum(hopper_means) <= sum(crawler_means)
    elapsed = time.monotonic() - started
    assert elapsed < 300.0, f"efficiency suite took {elapsed:.1f}s"
    print(f"{PASS} A7 threshold efficiency: r={r:.3f}, basis={basis}, {families} mask "
          f"families, mean cost ratio {sum(family_ratios)/len(family_ratios):.3f}, {elapsed:.1f}s")


# -- A8 ----------------------------------------------------------------------

def test_a08_frog_gate_consistency():
    """Wherever the gate predicts a frog win, the summed instrumented jump
    count over all patterns stays below R * card * (2^d - 1)."""
    rng = random.Random(31337)
    fixtures = []
    # dense stores under high-tail masks (few gaps)
    for tail_positions in ([9, 10], [7, 9], [8, 10], [6, 7, 9]):
        keys = sorted(rng.sample(range(1 << 10), 500))
        fixtures.append((10, tail_positions, keys, 0.5))
    # keys packed at the curve ends under a junior mask (low co-frequency mass)
    fixtures.append((10, [1, 2], [0, 1, 2, 1021, 1022, 1023], 0.5))
    fixtures.append((10, [1, 3], [0, 1, 2, 3, 1020, 1021, 1022, 1023], 0.6))
    # a sparse junior-mask fixture where the gate should typically refuse
    fixtures.append((10, [1, 2], sorted(rng.sample(range(1 << 10), 100)), 0.5))

    triggered = 0
    for width, positions, keys, r in fixtures:
        m = Mask.from_positions(width, positions)
        store = SortedArrayStore(keys, width=width)
        dist = region_distribution(store, m.tail, m)
        stats = StoreStats(len(keys), keys[0], keys[-1], r=r)
        gate = frog_gate(m, stats, dist)
        if not gate.frog_wins:
            continue
        triggered += 1
        d = m.d
        total_jumps = 0
        for dense in range(1 << d):
            pattern = sum(1 << (p - 1) for i, p in enumerate(positions) if dense >> i & 1)
            matcher = compile_filters([PointFilter(m, pattern)], width=width)
            rep = run_scan(SortedArrayStore(keys, width=width), matcher, Strategy.frog(),
                           ScanOptions(count_only=True, r=r))
            total_jumps += rep.n1
        bound = r * len(keys) * ((1 << d) - 1)
        assert total_jumps < bound, (positions, total_jumps, bound)
    assert triggered >= 3, "fixture battery must actually trigger the gate"
    print(f"{PASS} A8 frog gate consistency: {triggered} gate wins verified against "
          f"instrumented jump totals")


# -- A9 ----------------------------------------------------------------------

def test_a09_partitioned_correctness_and_pruning():
    rng = random.Random(5150)
    datasets = []
    for width in (10, 12):
        datasets.append((width, sorted(rng.sample(range(1 << width), 400))))
    datasets.append((10, list(range(256))))  # dense corner
    matchers = []
    for width in (10, 12):
        filters, specs = random_case(rng, width)
        matchers.append((width, compile_filters(filters, width=width), specs))
    matchers.append((10, compile_filters([PointFilter(Mask.from_positions(10, [10]), 512)],
                                         width=10), [("point", [10], 512)]))
    checked = trivial_seen = skipped_seen = 0
    for width, keys in datasets:
        store = SortedArrayStore(keys, width=width)
        for m_width, matcher, specs in matchers:
            if m_width != width:
                continue
            flat = run_scan(SortedArrayStore(keys, width=width), matcher, Strategy.frog())
            for parts in (2, 4, 8, 16):
                ps = PartitionedStore.equal_ranges(SortedArrayStore(keys, width=width), parts)
                rep = run_partitioned(ps, matcher, Strategy.frog())
                assert rep.result_keys == flat.result_keys
                for outcome in rep.partition_outcomes:
                    if outcome.outcome == "skipped":
                        skipped_seen += 1
                        assert all(v == 0 for v in outcome.counters.as_dict().values())
                        for k in range(outcome.lo, outcome.hi + 1):
                            if k in set(keys):
                                assert not oracles.conjunction_matches(k, specs)
                    elif outcome.outcome == "trivial":
                        trivial_seen += 1
                        assert outcome.counters.n_match == 0
                checked += 1
    assert skipped_seen > 0 and trivial_seen > 0
    print(f"{PASS} A9 partitioned pruning: {checked} runs identical to flat scans, "
          f"{skipped_seen} zero-op skips, {trivial_seen} zero-match trivial counts")


# -- A10 ---------------------------------------------------------------------

def test_a10_strategy_boundary_identities():
    rng = random.Random(8080)
    fixtures = 0
    for _ in range(20):
        width = rng.randint(6, 14)
        card = rng.randint(0, min(600, 1 << width))
        keys = sorted(rng.sample(range(1 << width), card))
        filters, _ = random_case(rng, width)
        matcher = compile_filters(filters, width=width)

        def run(strategy):
            rep = run_scan(SortedArrayStore(keys, width=width), matcher, strategy)
            return rep.counters.as_dict(), rep.result_keys, (rep.n0, rep.n1, rep.n2, rep.n3)

        assert run(Strategy.frog()) == run(Strategy.grasshopper(0))
        assert run(Strategy.crawler()) == run(Strategy.grasshopper(width))
        fixtures += 1
    print(f"{PASS} A10 strategy boundary identities: {fixtures} fixtures, counters exactly equal")
