"""Shared test helpers: reference-table loaders and synthetic data builders."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from catpca import Dataset, MeasurementLevel, Schema, VariableSpec

FIXTURE_DIR = Path(__file__).parent / "fixtures"


def read_fixture(name):
    """Rows of a fixture CSV as dicts, comment lines skipped."""
    with open(FIXTURE_DIR / name, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(line for line in handle if not line.startswith("#"))
        return list(reader)


@pytest.fixture(scope="session")
def train_summary_rows():
    """Reference training-split model summary keyed by dimension."""
    return {
        int(row["dimension"]): {
            "alpha": float(row["cronbach_alpha"]),
            "eigenvalue": float(row["eigenvalue"]),
            "percent": float(row["percent_of_variance"]),
            "cumulative": float(row["cumulative_percent"]),
        }
        for row in read_fixture("train_model_summary.csv")
    }


@pytest.fixture(scope="session")
def train_eigenvalues(train_summary_rows):
    """Contiguous descending prefix (dimensions 1..46) of the training spectrum."""
    dims = sorted(d for d in train_summary_rows if d <= 46)
    assert dims == list(range(1, 47))
    return np.array([train_summary_rows[d]["eigenvalue"] for d in dims])


@pytest.fixture(scope="session")
def test_summary_rows():
    return {
        int(row["dimension"]): {
            "alpha": float(row["cronbach_alpha"]),
            "eigenvalue": float(row["eigenvalue"]),
            "percent": float(row["percent_of_variance"]),
            "cumulative": float(row["cumulative_percent"]),
        }
        for row in read_fixture("test_model_summary.csv")
    }


@pytest.fixture(scope="session")
def test_eigenvalues(test_summary_rows):
    """Contiguous descending prefix (dimensions 1..38) of the held-out spectrum."""
    dims = sorted(d for d in test_summary_rows if d <= 38)
    assert dims == list(range(1, 39))
    return np.array([test_summary_rows[d]["eigenvalue"] for d in dims])


@pytest.fixture(scope="session")
def reference_loadings():
    """(variables, component labels, loadings matrix) of the loading table."""
    rows = read_fixture("train_loadings.csv")
    components = [int(key.split("_")[1]) for key in rows[0] if key != "variable"]
    variables = [row["variable"] for row in rows]
    matrix = np.array([[float(row[f"component_{c}"]) for c in components] for row in rows])
    return variables, components, matrix


@pytest.fixture(scope="session")
def reference_communalities():
    return {row["variable"]: float(row["communality"])
            for row in read_fixture("train_communalities.csv")}


@pytest.fixture(scope="session")
def reference_assignments():
    return {row["variable"]: (int(row["component"]), float(row["weight"]))
            for row in read_fixture("train_assignments.csv")}


# ---- synthetic data ------------------------------------------------------


def quantile_codes(x, k):
    """Bin a continuous column into codes 1..k at its own quantiles."""
    edges = np.quantile(x, np.linspace(0.0, 1.0, k + 1)[1:-1])
    return (np.digitize(x, edges) + 1).astype(float)


def make_mixed_dataset(seed, n=80, n_numeric=2, n_ordinal=3, n_nominal=2,
                       n_multi=1, n_factors=2, noise=0.8, max_categories=4):
    """Random mixed-level Dataset driven by a low-rank factor structure.

    Every column is a noisy linear combination of ``n_factors`` latent
    Gaussians; categorical columns are quantile-binned so each category
    is populated. Deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    factors = rng.standard_normal((n, n_factors))

    def latent():
        return factors @ rng.standard_normal(n_factors) + noise * rng.standard_normal(n)

    specs = []
    columns = []
    for j in range(n_numeric):
        specs.append(VariableSpec(f"num{j}", MeasurementLevel.NUMERIC))
        columns.append(latent())
    for j in range(n_ordinal):
        k = int(rng.integers(3, max_categories + 1))
        specs.append(VariableSpec(f"ord{j}", MeasurementLevel.ORDINAL,
                                  categories=list(range(1, k + 1))))
        columns.append(quantile_codes(latent(), k))
    for j in range(n_nominal):
        k = int(rng.integers(2, max_categories + 1))
        specs.append(VariableSpec(f"nom{j}", MeasurementLevel.SINGLE_NOMINAL,
                                  categories=list(range(1, k + 1))))
        columns.append(quantile_codes(latent(), k))
    for j in range(n_multi):
        k = int(rng.integers(3, max_categories + 1))
        specs.append(VariableSpec(f"mn{j}", MeasurementLevel.MULTIPLE_NOMINAL,
                                  categories=list(range(1, k + 1))))
        columns.append(quantile_codes(latent(), k))
    return Dataset(Schema(specs), np.column_stack(columns))


def write_dataset_csv(path, dataset, include_row_ids=False):
    """Plain CSV dump of a Dataset for feeding the command line.

    Categorical cells are written as bare integer codes, the shape the
    loader requires.
    """
    names = dataset.schema.names
    numeric = [spec.level is MeasurementLevel.NUMERIC for spec in dataset.schema]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow((["row_id"] if include_row_ids else []) + list(names))
        for i in range(dataset.n):
            cells = [repr(float(v)) if is_num else str(int(v))
                     for v, is_num in zip(dataset.values[i], numeric)]
            if include_row_ids:
                cells.insert(0, str(int(dataset.row_ids[i])))
            writer.writerow(cells)
