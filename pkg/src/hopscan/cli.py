"""Command-line surface: dataset management, queries, analysis, benchmarks.

Exit codes: 0 ok, 2 parse/contract errors, 3 correctness divergence
between strategies in a benchmark run.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
from pathlib import Path

from . import datasets
from .dsl import parse_query, render_query
from .engine import ScanOptions, Strategy, cached_region_distribution, run_partitioned, run_scan
from .errors import ContractError
from .layout import Layout
from .locus import (StoreStats, frog_gate, modeled_cost, point_locus_stats,
                    range_locus_stats, threshold, threshold_analytic)
from .matcher import PointFilter, RangeFilter, compile_filters, reduce_filters
from .store import PartitionedStore, SortedArrayStore, read_gzk, write_gzk

EXIT_OK = 0
EXIT_CONTRACT = 2
EXIT_DIVERGENCE = 3


def _load_layout(path: str) -> Layout:
    return Layout.load(path)


def _load_store(data_path: str) -> SortedArrayStore:
    width, keys = read_gzk(data_path)
    return SortedArrayStore(keys, width=width, _presorted=True)


def _sidecar(data_path: str) -> Path:
    return Path(data_path + ".meta.json")


def _load_r(data_path: str, override: float | None) -> float:
    if override is not None:
        return override
    meta = _sidecar(data_path)
    if meta.exists():
        return float(json.loads(meta.read_text()).get("r", 1.0))
    return 1.0


def _strategy_from_args(args) -> Strategy:
    if args.threshold is not None:
        return Strategy.grasshopper(args.threshold)
    name = args.strategy
    if name == "crawler":
        return Strategy.crawler()
    if name == "frog":
        return Strategy.frog()
    if name == "hopper":
        raise ContractError("strategy 'hopper' needs --threshold INT (or use 'auto')")
    return Strategy.auto()


def _emit(payload: dict, json_path: str | None) -> None:
    text = json.dumps(payload, indent=2, default=str)
    if json_path:
        Path(json_path).write_text(text + "\n")
    else:
        print(text)


def cmd_generate(args) -> int:
    layout = _load_layout(args.schema)
    keys = datasets.generate_keys(layout, args.rows, args.distribution, args.seed)
    write_gzk(args.out, keys, layout.width)
    print(f"wrote {len(keys)} keys ({layout.width} bits) to {args.out}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    layout = _load_layout(args.schema)
    keys, dictionaries = datasets.ingest_csv(args.csv, layout)
    write_gzk(args.out, keys, layout.width)
    datasets.save_dictionaries(args.dicts, dictionaries)
    print(f"ingested {len(keys)} distinct keys to {args.out}; dictionaries in {args.dicts}")
    return EXIT_OK


def _run_query(layout, store, args, filters) -> "ScanReport":
    strategy = _strategy_from_args(args)
    matcher = compile_filters(filters, width=layout.width)
    options = ScanOptions(count_only=args.count_only, r=_load_r(args.data, args.r))
    if args.partitions > 1:
        pstore = PartitionedStore.equal_ranges(store, args.partitions)
        return run_partitioned(pstore, matcher, strategy, parallelism=args.parallel, options=options)
    return run_scan(store, matcher, strategy, options)


def cmd_query(args) -> int:
    layout = _load_layout(args.schema)
    store = _load_store(args.data)
    filters = parse_query(args.filter, layout)
    report = _run_query(layout, store, args, filters)
    payload = report.to_dict()
    payload["filter"] = render_query(filters, layout)
    if report.result_keys is not None and args.sample > 0:
        dicts = datasets.load_dictionaries(args.dicts) if args.dicts else {}
        payload["sample_rows"] = [
            datasets.decode_key(k, layout, dicts) for k in report.result_keys[: args.sample]
        ]
    _emit(payload, args.json)
    return EXIT_OK


def cmd_analyze(args) -> int:
    layout = _load_layout(args.schema)
    store = _load_store(args.data)
    filters = parse_query(args.filter, layout)
    reduced = reduce_filters(filters, width=layout.width)
    r = _load_r(args.data, args.r)
    st = store.stats()
    stats = StoreStats(st.card, st.min_key, st.max_key, r)
    payload: dict = {"filter": render_query(filters, layout), "card": st.card, "r": r,
                     "trivial": reduced.trivial, "parts": []}
    for f in reduced.parts:
        entry: dict = {"mask_positions": list(f.mask.positions)}
        if isinstance(f, PointFilter):
            s = point_locus_stats(f.mask)
            entry.update(kind="point", cluster_count=s.cluster_count, cluster_len=s.cluster_len,
                         spread=s.spread, total_lacunae=s.total_lacunae, sigmas=list(s.sigmas))
            if st.card:
                dist = cached_region_distribution(store, f.mask.tail, f.mask)
                gate = frog_gate(f.mask, stats, dist)
                entry.update(r1=gate.r1, r2=gate.r2, r2_prime=gate.r2_prime,
                             sigma=gate.sigma, sigma0=gate.sigma0, frog_wins=gate.frog_wins)
        elif isinstance(f, RangeFilter):
            s = range_locus_stats(f.mask, f.lo, f.hi)
            entry.update(kind="range", spread=s.spread, r_cardinality=s.r,
                         total_lacunae=s.total_lacunae, sigmas=list(s.sigmas))
        else:
            entry.update(kind="set", set_size=len(f.values))
        payload["parts"].append(entry)
    if reduced.trivial is None and st.card:
        t = threshold(reduced, stats)
        payload["threshold"] = t
        payload["threshold_analytic"] = threshold_analytic(layout.width, st.card, r)
        gate_zero = any(p.get("frog_wins") for p in payload["parts"])
        chosen = 0 if (gate_zero and len(payload["parts"]) == 1) else t
        payload["chosen_strategy"] = "frog" if chosen == 0 else (
            "crawler" if chosen >= layout.width else f"hopper(t={chosen})")
        payload["rationale"] = (
            "jump on every mismatch: average jump cost beats scanning" if chosen == 0 else
            "no gap level repays a seek; scan sequentially" if chosen >= layout.width else
            f"jump only on mismatches above bit {chosen}: coarser gaps hold "
            f"enough keys to repay a seek")
    _emit(payload, args.json)
    return EXIT_OK


def cmd_measure_r(args) -> int:
    store = _load_store(args.data)
    result = datasets.measure_r(store, ops=args.ops, trials=args.trials, seed=args.seed)
    if args.save:
        meta = _sidecar(args.data)
        payload = json.loads(meta.read_text()) if meta.exists() else {}
        payload["r"] = result["r"]
        meta.write_text(json.dumps(payload, indent=2) + "\n")
    _emit(result, args.json)
    return EXIT_OK


def cmd_bench(args) -> int:
    layout = _load_layout(args.schema)
    store = _load_store(args.data)
    matrix = json.loads(Path(args.matrix).read_text())
    aggregation = matrix.get("aggregation", "drop-minmax-mean")
    cells = matrix.get("cells", [])
    if not cells:
        raise ContractError("benchmark matrix has no cells")
    r = _load_r(args.data, args.r)
    rows = []
    diverged = False
    for cell in cells:
        reps = int(cell.get("repetitions", 5))
        if aggregation == "drop-minmax-mean" and reps < 3:
            raise ContractError("drop-min/max aggregation needs at least 3 repetitions")
        filters = parse_query(cell["filter"], layout)
        matcher = compile_filters(filters, width=layout.width)
        counts = {}
        sampled_bags = {}
        for name in cell.get("strategies", ["crawler", "auto"]):
            strategy = {"crawler": Strategy.crawler(), "frog": Strategy.frog(),
                        "auto": Strategy.auto()}.get(name)
            if strategy is None:
                if not name.startswith("hopper:"):
                    raise ContractError(f"unknown strategy {name!r} in matrix")
                strategy = Strategy.grasshopper(int(name.split(":", 1)[1]))
            walls = []
            last = None
            for _ in range(reps):
                last = run_scan(store, matcher, strategy, ScanOptions(count_only=True, r=r))
                walls.append(last.wall_ns)
            if aggregation == "drop-minmax-mean":
                kept = sorted(walls)[1:-1]
            else:
                kept = walls
            counts[name] = last.result_count
            check = run_scan(store, matcher, strategy, ScanOptions(count_only=False, r=r))
            sampled_bags[name] = check.result_keys[:256]
            rows.append({
                "filter": cell["filter"], "strategy": name,
                "result_count": last.result_count,
                "wall_ns_mean": statistics.mean(kept),
                "repetitions": reps,
                **last.counters.as_dict(),
                "n0": last.n0, "n2": last.n2, "n3": last.n3,
                "modeled_cost": modeled_cost(last.model_counters(), r)[
                    "crawler" if name == "crawler" else "frog" if name == "frog" else "grasshopper"],
            })
        if len(set(counts.values())) > 1 or len({tuple(b) for b in sampled_bags.values()}) > 1:
            diverged = True
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    if args.json:
        _emit({"rows": rows, "diverged": diverged}, args.json)
    if not args.csv and not args.json:
        _emit({"rows": rows, "diverged": diverged}, None)
    if diverged:
        print("strategy result divergence detected", file=sys.stderr)
        return EXIT_DIVERGENCE
    return EXIT_OK


def cmd_schema(args) -> int:
    from .layout import Dimension, build_layout

    spec = json.loads(Path(args.spec).read_text())
    dims = [Dimension(d["name"], int(d["bits"])) for d in spec["dimensions"]]
    placement = spec.get("placement")
    strategy = spec.get("strategy", "interleave_by_cardinality")
    layout = build_layout(dims, strategy if not placement else "explicit",
                          placement=placement)
    layout.save(args.out)
    print(f"schema written to {args.out} (width {layout.width})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hopscan",
                                     description="Composite-key filter scans that jump over provably irrelevant key ranges.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--schema", required=True, help="schema JSON produced by 'schema'")
        if data:
            p.add_argument("--data", required=True, help="key dump (GZK1)")
        p.add_argument("--json", default=None, help="write the report to this path")

    p = sub.add_parser("schema", help="compile a dimension spec into a self-describing schema file")
    p.add_argument("--spec", required=True, help="JSON with dimensions (+ optional strategy/placement)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_schema)

    p = sub.add_parser("generate", help="generate a synthetic dataset")
    common(p, data=False)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--distribution", default="uniform", help="uniform | zipf:S | clustered:K")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="encode a CSV into keys + dictionaries")
    common(p, data=False)
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dicts", required=True, help="where to persist encoding dictionaries")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("query", help="run one filter query")
    common(p)
    p.add_argument("--filter", required=True, help="e.g. \"x=5 AND y IN [1,3]\"")
    p.add_argument("--strategy", default="auto", choices=["crawler", "frog", "hopper", "auto"])
    p.add_argument("--threshold", type=int, default=None, help="explicit jump threshold")
    p.add_argument("--partitions", type=int, default=1)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--r", type=float, default=None, help="override the scan/seek cost ratio")
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--sample", type=int, default=5, help="decoded sample rows in the report")
    p.add_argument("--dicts", default=None, help="dictionaries for decoding sample rows")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("analyze", help="locus and threshold report for a filter")
    common(p)
    p.add_argument("--filter", required=True)
    p.add_argument("--r", type=float, default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("measure-r", help="estimate the scan/seek cost ratio")
    p.add_argument("--data", required=True)
    p.add_argument("--ops", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--save", action="store_true", help="persist into the dataset sidecar")
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_measure_r)

    p = sub.add_parser("bench", help="strategy comparison matrix")
    common(p)
    p.add_argument("--matrix", required=True, help="JSON benchmark matrix")
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
