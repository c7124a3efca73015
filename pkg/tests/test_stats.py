import numpy as np
import pytest

import hsicube as hc
from hsicube.stats import load_table_csv
from conftest import (V20_COUNTS, V20_PCT, V20_TOTAL, V21_COUNTS, V21_PCT,
                      V21_TOTAL)


class TestPublishedTables:
    def test_v21_percentages(self):
        table = hc.ClassFrequencyTable.from_counts(V21_COUNTS)
        assert table.total == V21_TOTAL
        assert table.percentages().tolist() == list(V21_PCT)

    def test_v20_percentages(self):
        table = hc.ClassFrequencyTable.from_counts(V20_COUNTS)
        assert table.total == V20_TOTAL
        assert table.percentages().tolist() == list(V20_PCT)

    def test_version_delta(self):
        old = hc.ClassFrequencyTable.from_counts(V20_COUNTS)
        new = hc.ClassFrequencyTable.from_counts(V21_COUNTS)
        delta = hc.diff_tables(old, new)
        assert delta.total_absolute == 1_108_009
        assert delta.total_relative_pct == 2.52
        unpainted = hc.CLASS_NAMES.index("Unpainted Metal")
        assert delta.absolute[unpainted] == 119_347
        assert delta.relative_pct[unpainted] == 34.26


class TestClassFrequencies:
    def test_single_map_hand_count(self):
        table = hc.class_frequencies([np.array([[1, 1], [2, 0]])])
        assert table.counts[0] == 2
        assert table.counts[1] == 1
        assert table.total == 3
        pct = table.percentages()
        assert pct[0] == 66.67
        assert pct[1] == 33.33

    def test_empty_collection_gives_zero_table(self):
        table = hc.class_frequencies([])
        assert table.total == 0
        assert np.all(table.counts == 0)

    def test_additivity_over_concatenation(self):
        rng = np.random.default_rng(0)
        maps = [rng.integers(0, 11, size=(8, 8)) for _ in range(5)]
        combined = hc.class_frequencies(maps)
        summed = sum(hc.class_frequencies([m]).counts for m in maps)
        assert np.array_equal(combined.counts, summed)

    def test_percentages_sum_near_100(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            counts = rng.integers(0, 10_000, size=10)
            if counts.sum() == 0:
                continue
            total_pct = hc.ClassFrequencyTable.from_counts(counts).percentages().sum()
            assert abs(total_pct - 100.0) <= 0.05

    def test_half_up_rounding(self):
        # 1/800 of the total is exactly 0.125%, which must round to 0.13
        counts = [1, 799] + [0] * 8
        pct = hc.ClassFrequencyTable.from_counts(counts).percentages()
        assert pct[0] == 0.13


class TestDiff:
    def test_identical_tables_zero_delta(self):
        table = hc.ClassFrequencyTable.from_counts(V21_COUNTS)
        delta = hc.diff_tables(table, table)
        assert delta.total_absolute == 0
        assert np.all(delta.absolute == 0)
        assert np.all(delta.relative_pct == 0)

    def test_mismatched_class_sets(self):
        a = hc.ClassFrequencyTable.from_counts([1, 2], names=("x", "y"))
        b = hc.ClassFrequencyTable.from_counts(V21_COUNTS)
        with pytest.raises(hc.SchemaError):
            hc.diff_tables(a, b)


class TestFormats:
    def test_csv_roundtrip(self, tmp_path):
        table = hc.ClassFrequencyTable.from_counts(V21_COUNTS)
        path = tmp_path / "table.csv"
        path.write_text(table.to_csv())
        loaded = load_table_csv(path)
        assert np.array_equal(loaded.counts, table.counts)
        assert loaded.names == table.names

    def test_csv_column_order(self):
        table = hc.ClassFrequencyTable.from_counts(V21_COUNTS)
        header = table.to_csv().split("\n")[0].split(",")
        assert header[1] == "Total"
        assert header[2:] == list(hc.CLASS_NAMES)

    def test_text_has_all_rows(self):
        text = hc.ClassFrequencyTable.from_counts(V21_COUNTS).to_text()
        assert "Pixels" in text and "%" in text and "59.38" in text

    def test_delta_csv(self):
        old = hc.ClassFrequencyTable.from_counts(V20_COUNTS)
        new = hc.ClassFrequencyTable.from_counts(V21_COUNTS)
        lines = hc.diff_tables(old, new).to_csv().strip().split("\n")
        assert lines[1].startswith("Delta,1108009,")
        assert lines[2].startswith("Delta%,+2.52,")
