"""Loading, saving, filtering, grading, and splitting survey data."""

import io

import numpy as np
import pytest

from catpca import (DataError, Dataset, MeasurementLevel, ObesityClass, Schema,
                    VariableSpec, derive_obesity_class, filter_obese, load_dataset,
                    save_dataset, split_dataset, summarize_classes)


def two_column_schema():
    return Schema([
        VariableSpec("bmi", MeasurementLevel.NUMERIC),
        VariableSpec("sev", MeasurementLevel.ORDINAL, categories=[1, 2, 3]),
    ])


def test_load_dataset_basic():
    text = "# survey extract\nbmi,sev\n31.5,1\n36.2,3\n41.0,2\n"
    ds = load_dataset(io.StringIO(text), two_column_schema())
    assert ds.n == 3 and ds.m == 2
    assert np.allclose(ds.column("bmi"), [31.5, 36.2, 41.0])
    assert ds.row_ids.tolist() == [0, 1, 2]


def test_load_dataset_with_row_id_column():
    text = "row_id,bmi,sev\n10,31.5,1\n11,36.2,3\n"
    ds = load_dataset(io.StringIO(text), two_column_schema())
    assert ds.row_ids.tolist() == [10, 11]


def test_load_dataset_header_mismatch():
    with pytest.raises(DataError, match="sev"):
        load_dataset(io.StringIO("bmi,other\n31.5,1\n"), two_column_schema())


def test_load_dataset_bad_cell_names_row_and_column():
    text = "bmi,sev\n31.5,1\noops,2\n"
    with pytest.raises(DataError, match=r"row 2.*'bmi'"):
        load_dataset(io.StringIO(text), two_column_schema())


def test_load_dataset_rejects_unknown_category_code():
    text = "bmi,sev\n31.5,7\n"
    with pytest.raises(DataError, match="sev"):
        load_dataset(io.StringIO(text), two_column_schema())


def test_missing_code_kept_as_category():
    schema = Schema([
        VariableSpec("sev", MeasurementLevel.ORDINAL, categories=[1, 2], missing_codes=[9]),
        VariableSpec("x", MeasurementLevel.NUMERIC),
    ])
    ds = load_dataset(io.StringIO("sev,x\n1,0.5\n9,0.7\n2,0.9\n"), schema)
    assert ds.n == 3


def test_missing_code_drops_rows_with_warning():
    schema = Schema([
        VariableSpec("sev", MeasurementLevel.ORDINAL, categories=[1, 2],
                     missing_codes=[9], missing_as_category=False),
        VariableSpec("x", MeasurementLevel.NUMERIC),
    ])
    with pytest.warns(UserWarning, match="dropped"):
        ds = load_dataset(io.StringIO("sev,x\n1,0.5\n9,0.7\n2,0.9\n"), schema)
    assert ds.n == 2
    assert ds.row_ids.tolist() == [0, 2]


def test_load_dataset_empty_rows():
    with pytest.raises(DataError):
        load_dataset(io.StringIO("bmi,sev\n"), two_column_schema())


def test_save_and_reload_round_trip(tmp_path):
    schema = two_column_schema()
    ds = load_dataset(io.StringIO("bmi,sev\n31.25,1\n36.125,3\n"), schema)
    path = tmp_path / "out.csv"
    save_dataset(ds, path, comment="round trip")
    again = load_dataset(path, schema)
    assert np.array_equal(again.values, ds.values)
    assert again.row_ids.tolist() == ds.row_ids.tolist()


def test_derive_obesity_class_boundaries():
    assert derive_obesity_class(29.999) is None
    assert derive_obesity_class(30.0) is ObesityClass.CLASS_I
    assert derive_obesity_class(34.999) is ObesityClass.CLASS_I
    assert derive_obesity_class(35.0) is ObesityClass.CLASS_II
    assert derive_obesity_class(39.999) is ObesityClass.CLASS_II
    assert derive_obesity_class(40.0) is ObesityClass.CLASS_III
    assert derive_obesity_class(75.0) is ObesityClass.CLASS_III


def test_derive_obesity_class_rejects_bad_input():
    for bad in (0.0, -3.0, float("nan"), float("inf")):
        with pytest.raises(DataError):
            derive_obesity_class(bad)


def test_filter_obese():
    ds = load_dataset(io.StringIO("bmi,sev\n25.0,1\n30.0,2\n41.0,3\n"), two_column_schema())
    kept = filter_obese(ds, "bmi")
    assert kept.n == 2
    assert np.allclose(kept.column("bmi"), [30.0, 41.0])
    assert kept.row_ids.tolist() == [1, 2]


def test_filter_obese_warns_when_empty():
    ds = load_dataset(io.StringIO("bmi,sev\n25.0,1\n26.0,2\n"), two_column_schema())
    with pytest.warns(UserWarning):
        kept = filter_obese(ds, "bmi")
    assert kept.n == 0


def test_summarize_classes_counts_percents_and_mode():
    rows = ["31,1"] * 3 + ["36,2"] * 2 + ["41,3"]
    ds = load_dataset(io.StringIO("bmi,sev\n" + "\n".join(rows) + "\n"), two_column_schema())
    summary = summarize_classes(ds, "bmi")
    by_class = {s.obesity_class: s for s in summary}
    assert by_class[ObesityClass.CLASS_I].count == 3
    assert by_class[ObesityClass.CLASS_II].count == 2
    assert by_class[ObesityClass.CLASS_III].count == 1
    assert abs(by_class[ObesityClass.CLASS_I].percent - 50.0) < 1e-12
    assert by_class[ObesityClass.CLASS_I].is_mode
    assert not by_class[ObesityClass.CLASS_II].is_mode


def test_summarize_classes_mode_tie_prefers_lower_grade():
    ds = load_dataset(io.StringIO("bmi,sev\n31,1\n36,2\n"), two_column_schema())
    summary = summarize_classes(ds, "bmi")
    modes = [s.obesity_class for s in summary if s.is_mode]
    assert modes == [ObesityClass.CLASS_I]


def test_summarize_classes_rejects_non_obese_rows():
    ds = load_dataset(io.StringIO("bmi,sev\n25,1\n36,2\n"), two_column_schema())
    with pytest.raises(DataError):
        summarize_classes(ds, "bmi")


def test_split_sizes_and_partition():
    rng = np.random.default_rng(3)
    schema = Schema([VariableSpec("x", MeasurementLevel.NUMERIC)])
    ds = Dataset(schema, rng.standard_normal((449, 1)))
    pair = split_dataset(ds, 0.7, seed=20)
    assert pair.train.n == 314 and pair.test.n == 135
    merged = sorted(pair.train.row_ids.tolist() + pair.test.row_ids.tolist())
    assert merged == list(range(449))
    # row order inside each part follows the source
    assert pair.train.row_ids.tolist() == sorted(pair.train.row_ids.tolist())


def test_split_deterministic_and_seed_sensitive():
    schema = Schema([VariableSpec("x", MeasurementLevel.NUMERIC)])
    ds = Dataset(schema, np.arange(100, dtype=float).reshape(-1, 1))
    first = split_dataset(ds, 0.7, seed=5)
    second = split_dataset(ds, 0.7, seed=5)
    assert first.train.row_ids.tolist() == second.train.row_ids.tolist()
    other = split_dataset(ds, 0.7, seed=6)
    assert first.train.row_ids.tolist() != other.train.row_ids.tolist()


def test_split_ratio_validation():
    schema = Schema([VariableSpec("x", MeasurementLevel.NUMERIC)])
    ds = Dataset(schema, np.arange(10, dtype=float).reshape(-1, 1))
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(DataError):
            split_dataset(ds, bad, seed=0)


def test_split_keeps_both_sides_non_empty():
    schema = Schema([VariableSpec("x", MeasurementLevel.NUMERIC)])
    ds = Dataset(schema, np.arange(3, dtype=float).reshape(-1, 1))
    pair = split_dataset(ds, 0.99, seed=0)
    assert pair.train.n == 2 and pair.test.n == 1
