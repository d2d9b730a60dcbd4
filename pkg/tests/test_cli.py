import json

import pytest

from hopscan import Dimension, build_layout, read_gzk
from hopscan.cli import main
from hopscan.datasets import generate_keys, ingest_csv, measure_r
from hopscan.dsl import parse_query, render_query
from hopscan import PointFilter, RangeFilter, SetFilter, SortedArrayStore, ContractError
from hopscan import Mask, region_distribution

import oracles


@pytest.fixture
def schema_path(tmp_path, f1_layout):
    path = tmp_path / "schema.json"
    f1_layout.save(path)
    return str(path)


@pytest.fixture
def dataset_path(tmp_path, schema_path):
    out = str(tmp_path / "data.gzk")
    assert main(["generate", "--schema", schema_path, "--rows", "200",
                 "--seed", "1", "--out", out]) == 0
    return out


class TestDsl:
    def test_parse_kinds(self, f1_layout):
        fs = parse_query("x=5 AND y IN [1,3] AND x2 IN {0,2}", build_layout(
            [Dimension("y", 3), Dimension("x", 3), Dimension("x2", 2)], "odometer"))
        assert isinstance(fs[0], PointFilter)
        assert isinstance(fs[1], RangeFilter)
        assert isinstance(fs[2], SetFilter)

    def test_point_scatter(self, f1_layout):
        (f,) = parse_query("x=5", f1_layout)
        assert f == PointFilter(Mask.from_positions(6, [1, 3, 5]), 17)

    def test_unknown_dimension(self, f1_layout):
        with pytest.raises(ContractError):
            parse_query("z=1", f1_layout)

    def test_value_out_of_range(self, f1_layout):
        with pytest.raises(ContractError):
            parse_query("x=8", f1_layout)

    def test_garbage_rejected(self, f1_layout):
        with pytest.raises(ContractError):
            parse_query("x==5", f1_layout)

    def test_render_parse_fixpoint(self, f1_layout):
        text = "x=5 AND y IN [1,3]"
        fs = parse_query(text, f1_layout)
        rendered = render_query(fs, f1_layout)
        assert parse_query(rendered, f1_layout) == fs
        assert render_query(parse_query(rendered, f1_layout), f1_layout) == rendered


class TestGenerate:
    def test_deterministic_bytes(self, tmp_path, schema_path, f1_layout):
        a, b = str(tmp_path / "a.gzk"), str(tmp_path / "b.gzk")
        for out in (a, b):
            assert main(["generate", "--schema", schema_path, "--rows", "100",
                         "--seed", "7", "--out", out]) == 0
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_zero_rows(self, tmp_path, schema_path):
        out = str(tmp_path / "empty.gzk")
        assert main(["generate", "--schema", schema_path, "--rows", "0", "--out", out]) == 0
        width, keys = read_gzk(out)
        assert width == 6 and keys == []

    def test_zipf_more_skewed_than_uniform(self, f1_layout):
        uniform = generate_keys(f1_layout, 400, "uniform", seed=3)
        zipf = generate_keys(f1_layout, 400, "zipf:1.5", seed=3)
        m = Mask.from_positions(6, [1, 3, 5])
        du = region_distribution(SortedArrayStore(uniform, width=6), 0, m)
        dz = region_distribution(SortedArrayStore(zipf, width=6), 0, m)
        assert dz.sigma > du.sigma


class TestIngest:
    def write_csv(self, tmp_path, rows, header):
        path = tmp_path / "rows.csv"
        path.write_text("\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n")
        return path

    def test_dictionary_encoding(self, tmp_path):
        lay = build_layout([Dimension("city", 1), Dimension("n", 2)], "odometer")
        csv_path = self.write_csv(tmp_path, [("oslo", 1), ("bergen", 2), ("oslo", 3)], ["city", "n"])
        keys, dicts = ingest_csv(csv_path, lay)
        assert dicts["city"] == ["oslo", "bergen"]
        assert dicts["n"] is None  # integer passthrough
        assert len(keys) == 3

    def test_dictionary_overflow_names_dimension(self, tmp_path):
        lay = build_layout([Dimension("city", 1), Dimension("n", 2)], "odometer")
        csv_path = self.write_csv(tmp_path, [("a", 0), ("b", 0), ("c", 0)], ["city", "n"])
        with pytest.raises(ContractError, match="city"):
            ingest_csv(csv_path, lay)

    def test_integer_column_range_checked(self, tmp_path):
        lay = build_layout([Dimension("n", 2)], "odometer")
        csv_path = self.write_csv(tmp_path, [(5,)], ["n"])
        with pytest.raises(ContractError, match="n"):
            ingest_csv(csv_path, lay)

    def test_missing_column(self, tmp_path):
        lay = build_layout([Dimension("n", 2)], "odometer")
        csv_path = self.write_csv(tmp_path, [(1,)], ["m"])
        with pytest.raises(ContractError, match="n"):
            ingest_csv(csv_path, lay)

    def test_dictionary_round_trip(self, tmp_path):
        from hopscan.datasets import decode_key
        lay = build_layout([Dimension("city", 2), Dimension("n", 2)], "odometer")
        rows = [("oslo", 1), ("bergen", 2), ("tromso", 3), ("oslo", 0)]
        csv_path = self.write_csv(tmp_path, rows, ["city", "n"])
        keys, dicts = ingest_csv(csv_path, lay)
        decoded = {tuple(decode_key(k, lay, dicts).values()) for k in keys}
        assert decoded == set(rows)


class TestQueryCommand:
    def test_point_count(self, tmp_path, schema_path, dataset_path, f1_layout):
        out = tmp_path / "report.json"
        code = main(["query", "--schema", schema_path, "--data", dataset_path,
                     "--filter", "x=5", "--count-only", "--json", str(out)])
        assert code == 0
        report = json.loads(out.read_text())
        width, keys = read_gzk(dataset_path)
        expected = sum(1 for k in keys if oracles.project(k, [1, 3, 5]) == 17)
        assert report["result_count"] == expected

    def test_conjunction_count(self, tmp_path, schema_path, f1_layout):
        data = str(tmp_path / "full.gzk")
        from hopscan import write_gzk
        write_gzk(data, range(64), width=6)
        out = tmp_path / "r.json"
        assert main(["query", "--schema", schema_path, "--data", data,
                     "--filter", "x=5 AND y=3", "--count-only", "--json", str(out)]) == 0
        assert json.loads(out.read_text())["result_count"] == 1

    def test_complete_range_matches_everything(self, tmp_path, schema_path, dataset_path):
        out = tmp_path / "r.json"
        assert main(["query", "--schema", schema_path, "--data", dataset_path,
                     "--filter", "x IN [0,7]", "--count-only", "--json", str(out)]) == 0
        width, keys = read_gzk(dataset_path)
        assert json.loads(out.read_text())["result_count"] == len(keys)

    def test_strategies_agree(self, tmp_path, schema_path, dataset_path):
        counts = {}
        for strat in ("crawler", "frog", "auto"):
            out = tmp_path / f"{strat}.json"
            assert main(["query", "--schema", schema_path, "--data", dataset_path,
                         "--filter", "y IN [2,5]", "--strategy", strat,
                         "--count-only", "--json", str(out)]) == 0
            counts[strat] = json.loads(out.read_text())["result_count"]
        assert len(set(counts.values())) == 1

    def test_partitioned_query(self, tmp_path, schema_path, dataset_path):
        out = tmp_path / "r.json"
        assert main(["query", "--schema", schema_path, "--data", dataset_path,
                     "--filter", "x=5", "--partitions", "4", "--parallel", "2",
                     "--count-only", "--json", str(out)]) == 0
        flat = tmp_path / "flat.json"
        main(["query", "--schema", schema_path, "--data", dataset_path,
              "--filter", "x=5", "--count-only", "--json", str(flat)])
        assert json.loads(out.read_text())["result_count"] == json.loads(flat.read_text())["result_count"]

    def test_sample_rows_decoded(self, tmp_path, schema_path, dataset_path):
        out = tmp_path / "r.json"
        assert main(["query", "--schema", schema_path, "--data", dataset_path,
                     "--filter", "x=5", "--sample", "3", "--json", str(out)]) == 0
        rows = json.loads(out.read_text())["sample_rows"]
        assert all(row["x"] == 5 for row in rows)

    def test_parse_error_exit_code(self, schema_path, dataset_path):
        assert main(["query", "--schema", schema_path, "--data", dataset_path,
                     "--filter", "nope=1"]) == 2

    def test_counters_deterministic_across_runs(self, tmp_path, schema_path, dataset_path):
        reports = []
        for i in range(2):
            out = tmp_path / f"det{i}.json"
            assert main(["query", "--schema", schema_path, "--data", dataset_path,
                         "--filter", "x IN {1,4,6}", "--strategy", "auto", "--r", "0.5",
                         "--count-only", "--json", str(out)]) == 0
            report = json.loads(out.read_text())
            report.pop("wall_ns")
            reports.append(report)
        assert reports[0] == reports[1]


class TestAnalyzeCommand:
    def test_report_fields(self, tmp_path, schema_path, dataset_path):
        out = tmp_path / "a.json"
        assert main(["analyze", "--schema", schema_path, "--data", dataset_path,
                     "--filter", "x=5", "--r", "0.5", "--json", str(out)]) == 0
        report = json.loads(out.read_text())
        part = report["parts"][0]
        assert part["cluster_count"] == 8
        assert part["sigmas"] == [21, 5, 1]
        assert "r1" in part and "sigma0" in part
        assert "threshold" in report and "chosen_strategy" in report and "rationale" in report


class TestMeasureR:
    def test_measures_and_persists(self, tmp_path, schema_path):
        data = str(tmp_path / "big.gzk")
        assert main(["generate", "--schema", schema_path, "--rows", "4000",
                     "--seed", "2", "--out", data]) == 0
        out = tmp_path / "r.json"
        assert main(["measure-r", "--data", data, "--ops", "2000", "--trials", "3",
                     "--save", "--json", str(out)]) == 0
        result = json.loads(out.read_text())
        assert result["r"] > 0
        meta = json.loads((tmp_path / "big.gzk.meta.json").read_text())
        assert meta["r"] == result["r"]

    def test_requires_data(self):
        store = SortedArrayStore([1], width=6)
        with pytest.raises(ContractError):
            measure_r(store)


class TestBenchCommand:
    def test_matrix_run(self, tmp_path, schema_path, dataset_path):
        matrix = tmp_path / "matrix.json"
        matrix.write_text(json.dumps({
            "aggregation": "drop-minmax-mean",
            "cells": [
                {"filter": "x=5", "strategies": ["crawler", "frog", "auto"], "repetitions": 4},
                {"filter": "y IN [1,6]", "strategies": ["crawler", "hopper:3"], "repetitions": 3},
            ],
        }))
        csv_out = tmp_path / "bench.csv"
        json_out = tmp_path / "bench.json"
        code = main(["bench", "--schema", schema_path, "--data", dataset_path,
                     "--matrix", str(matrix), "--csv", str(csv_out), "--json", str(json_out)])
        assert code == 0
        rows = json.loads(json_out.read_text())["rows"]
        assert len(rows) == 5
        by_cell = {}
        for row in rows:
            by_cell.setdefault(row["filter"], set()).add(row["result_count"])
        assert all(len(v) == 1 for v in by_cell.values())
        assert csv_out.read_text().startswith("filter,strategy")

    def test_too_few_repetitions_rejected(self, tmp_path, schema_path, dataset_path):
        matrix = tmp_path / "matrix.json"
        matrix.write_text(json.dumps({"cells": [{"filter": "x=1", "repetitions": 2}]}))
        assert main(["bench", "--schema", schema_path, "--data", dataset_path,
                     "--matrix", str(matrix)]) == 2


class TestSchemaCommand:
    def test_compile_schema(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "dimensions": [{"name": "y", "bits": 3}, {"name": "x", "bits": 3}],
            "strategy": "interleave_by_cardinality",
        }))
        out = tmp_path / "schema.json"
        assert main(["schema", "--spec", str(spec), "--out", str(out)]) == 0
        from hopscan import Layout
        lay = Layout.load(out)
        assert lay.placement["x"] == (5, 3, 1)
