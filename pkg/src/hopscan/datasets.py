"""Dataset generation, CSV ingestion and scan/seek ratio measurement."""

from __future__ import annotations

import csv
import json
import random
import statistics
import time
from pathlib import Path

from .errors import ContractError
from .layout import Layout
from .store import SortedArrayStore


def _parse_distribution(spec: str) -> tuple[str, float]:
    if spec == "uniform":
        return "uniform", 0.0
    if spec.startswith("zipf:"):
        s = float(spec.split(":", 1)[1])
        if s <= 0:
            raise ContractError("zipf exponent must be positive")
        return "zipf", s
    if spec.startswith("clustered:"):
        k = int(spec.split(":", 1)[1])
        if k < 1:
            raise ContractError("cluster count must be positive")
        return "clustered", float(k)
    raise ContractError(f"unknown distribution {spec!r} (uniform | zipf:S | clustered:K)")


def generate_keys(layout: Layout, rows: int, distribution: str = "uniform",
                  seed: int = 0) -> list[int]:
    """Deterministic synthetic keys; duplicates collapse, output sorted."""
    kind, param = _parse_distribution(distribution)
    rng = random.Random(seed)
    samplers = {}
    for dim in layout.dimensions:
        card = dim.cardinality
        if kind == "uniform":
            samplers[dim.name] = lambda c=card: rng.randrange(c)
        elif kind == "zipf":
            weights = [1.0 / (v + 1) ** param for v in range(card)]
            cum = []
            acc = 0.0
            for w in weights:
                acc += w
                cum.append(acc)
            total = cum[-1]

            def pick(cum=cum, total=total):
                target = rng.random() * total
                lo, hi = 0, len(cum) - 1
                while lo < hi:
                    mid = (lo + hi) // 2
                    if cum[mid] < target:
                        lo = mid + 1
                    else:
                        hi = mid
                return lo

            samplers[dim.name] = pick
        else:  # clustered
            k = int(param)
            centers = [rng.randrange(card) for _ in range(k)]
            spread = max(1.0, card / (4.0 * k))

            def pick(centers=centers, spread=spread, c=card):
                center = rng.choice(centers)
                return min(c - 1, max(0, int(round(rng.gauss(center, spread)))))

            samplers[dim.name] = pick
    keys = set()
    for _ in range(rows):
        values = {name: sampler() for name, sampler in samplers.items()}
        keys.add(int(layout.compose(values)))
    return sorted(keys)


def ingest_csv(csv_path: str | Path, layout: Layout) -> tuple[list[int], dict[str, list[str] | None]]:
    """Encode CSV rows into composite keys.

    Integer-valued columns pass through unencoded (range-checked);
    everything else gets dense first-seen codes.  Returns the keys and a
    per-dimension dictionary (None for passthrough columns) for decoding.
    """
    rows = list(csv.DictReader(open(csv_path, newline="")))
    if not rows:
        return [], {d.name: None for d in layout.dimensions}
    header = rows[0].keys()
    for dim in layout.dimensions:
        if dim.name not in header:
            raise ContractError(f"CSV is missing column {dim.name!r}")
    passthrough = {}
    for dim in layout.dimensions:
        passthrough[dim.name] = all(_is_int(row[dim.name]) for row in rows)
    dictionaries: dict[str, dict[str, int]] = {d.name: {} for d in layout.dimensions}
    keys = set()
    for row in rows:
        values = {}
        for dim in layout.dimensions:
            raw = row[dim.name]
            if passthrough[dim.name]:
                code = int(raw)
                if not 0 <= code < dim.cardinality:
                    raise ContractError(
                        f"value {code} of integer dimension {dim.name!r} exceeds "
                        f"cardinality {dim.cardinality}")
            else:
                d = dictionaries[dim.name]
                if raw not in d:
                    if len(d) >= dim.cardinality:
                        raise ContractError(
                            f"dimension {dim.name!r} overflows its {dim.bits}-bit "
                            f"dictionary ({dim.cardinality} distinct values max)")
                    d[raw] = len(d)
                code = d[raw]
            values[dim.name] = code
        keys.add(int(layout.compose(values)))
    out_dicts: dict[str, list[str] | None] = {}
    for dim in layout.dimensions:
        if passthrough[dim.name]:
            out_dicts[dim.name] = None
        else:
            d = dictionaries[dim.name]
            out_dicts[dim.name] = [t for t, _ in sorted(d.items(), key=lambda kv: kv[1])]
    return sorted(keys), out_dicts


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


def decode_key(key: int, layout: Layout, dictionaries: dict[str, list[str] | None]) -> dict[str, object]:
    values = layout.decompose(key)
    out: dict[str, object] = {}
    for name, code in values.items():
        d = dictionaries.get(name)
        if d is None:
            out[name] = code
        elif code < len(d):
            out[name] = d[code]
        else:
            out[name] = f"<code {code}>"
    return out


def save_dictionaries(path: str | Path, dictionaries: dict[str, list[str] | None]) -> None:
    Path(path).write_text(json.dumps(dictionaries, indent=2) + "\n")


def load_dictionaries(path: str | Path) -> dict[str, list[str] | None]:
    return json.loads(Path(path).read_text())


def measure_r(store: SortedArrayStore, *, ops: int = 10_000, trials: int = 5,
              seed: int = 0) -> dict[str, float]:
    """Time long scan chains against random seeks; R = scan cost / seek cost.

    The measurement is noisy by nature; the report carries per-trial
    dispersion so callers can judge it.
    """
    st = store.stats()
    if st.card < 2:
        raise ContractError("need at least two keys to measure the scan/seek ratio")
    rng = random.Random(seed)
    keys = list(store.iter_keys())
    ratios = []
    scan_costs = []
    seek_costs = []
    for _ in range(trials):
        start_key = keys[rng.randrange(len(keys) // 2 or 1)]
        t0 = time.perf_counter()
        k = start_key
        done = 0
        while done < ops:
            k = store.scan_next(k)
            if k is None:
                k = st.min_key
            done += 1
        scan_cost = (time.perf_counter() - t0) / ops

        probes = [rng.randrange(st.max_key + 1) for _ in range(ops)]
        t1 = time.perf_counter()
        for p in probes:
            store.seek(p)
        seek_cost = (time.perf_counter() - t1) / ops
        scan_costs.append(scan_cost)
        seek_costs.append(seek_cost)
        ratios.append(scan_cost / seek_cost if seek_cost > 0 else 1.0)
    return {
        "r": statistics.mean(ratios),
        "r_stdev": statistics.stdev(ratios) if len(ratios) > 1 else 0.0,
        "scan_ns": statistics.mean(scan_costs) * 1e9,
        "seek_ns": statistics.mean(seek_costs) * 1e9,
        "ops": float(ops),
        "trials": float(trials),
    }
