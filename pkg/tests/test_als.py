"""Alternating least squares engine: oracles, invariants, and the model object."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from catpca import (CATPCA, CatpcaModel, DataError, Dataset, MeasurementLevel,
                    Schema, VariableSpec, cronbach_alpha, variance_percent)
from catpca.als import orthonormalize_scores

from conftest import make_mixed_dataset, quantile_codes
from oracles import column_sign_distance, correlation_eigensystem, mca_solution


def fitted_loss(model, dataset):
    """Recompute the final loss directly from the stored model state.

    For every variable the modeled score matrix is rebuilt from its
    quantification and loading (or centroid coordinates) and compared
    against the object scores, independently of the solver's running
    bookkeeping.
    """
    X = model.object_scores
    n = model.n
    total = 0.0
    for j, name in enumerate(model.variable_names):
        column = dataset.column(name)
        if model.levels[j] is MeasurementLevel.MULTIPLE_NOMINAL:
            stored = model.centroid_sets[name]
            lookup = {code: stored["coordinates"][i]
                      for i, code in enumerate(stored["codes"])}
            modeled = np.vstack([lookup[int(c)] for c in column])
        else:
            if name in model.numeric_affine:
                shift, scale = model.numeric_affine[name]
                quantified = (column - shift) / scale
            else:
                mapping = model.quantifications[name].mapping
                quantified = np.array([mapping[int(c)] for c in column])
            modeled = np.outer(quantified, model.loadings[j])
        total += float(np.sum((X - modeled) ** 2)) / n
    return total


# ---- small pieces --------------------------------------------------------


def test_orthonormalize_scores_moments():
    rng = np.random.default_rng(0)
    raw = rng.standard_normal((40, 4)) + 3.0
    X, notes = orthonormalize_scores(raw)
    assert notes == []
    assert np.allclose(X.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(X.T @ X / 40, np.eye(4), atol=1e-12)


def test_orthonormalize_scores_rank_deficient():
    rng = np.random.default_rng(1)
    base = rng.standard_normal((30, 2))
    raw = np.column_stack([base, base[:, 0] + base[:, 1]])
    X, notes = orthonormalize_scores(raw)
    assert len(notes) == 1 and "rank" in notes[0]
    assert np.allclose(X.T @ X / 30, np.eye(3), atol=1e-8)


def test_orthonormalize_scores_too_many_columns():
    with pytest.raises(ValueError):
        orthonormalize_scores(np.ones((4, 4)))


def test_cronbach_alpha_values():
    # m/(m-1) * (1 - 1/eigenvalue)
    assert abs(cronbach_alpha(2.0, 5) - 0.625) < 1e-12
    assert cronbach_alpha(1.0, 10) == 0.0
    assert cronbach_alpha(0.5, 10) < 0.0


def test_cronbach_alpha_validation():
    with pytest.raises(ValueError):
        cronbach_alpha(2.0, 1)
    with pytest.raises(ValueError):
        cronbach_alpha(0.0, 10)


def test_variance_percent():
    assert abs(variance_percent(4.901, 10) - 49.01) < 1e-9
    assert abs(variance_percent(8.372, 86) - 100.0 * 8.372 / 86) < 1e-12


# ---- oracle equivalences -------------------------------------------------


def test_numeric_data_matches_correlation_pca():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(30, 120))
        m = int(rng.integers(3, 10))
        p = min(3, m - 1) or 1
        data = rng.standard_normal((n, m)) @ rng.standard_normal((m, m))
        est = CATPCA(n_components=p).fit(data)
        lam, loadings = correlation_eigensystem(data, p)
        assert np.allclose(est.eigenvalues_, lam, atol=1e-8), f"seed {seed}"
        assert column_sign_distance(est.loadings_, loadings) < 1e-6, f"seed {seed}"


def test_random_init_reaches_the_same_numeric_solution():
    rng = np.random.default_rng(7)
    scores = rng.standard_normal((80, 2))
    data = scores @ rng.standard_normal((2, 6)) + 0.3 * rng.standard_normal((80, 6))
    lam, loadings = correlation_eigensystem(data, 2)
    est = CATPCA(n_components=2, init="random", random_state=11,
                 max_iter=2000, tol=0.0).fit(data)
    assert np.allclose(est.eigenvalues_, lam, atol=1e-7)
    assert column_sign_distance(est.loadings_, loadings) < 1e-5


def test_multiple_nominal_matches_indicator_mca():
    for seed in range(4):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(22, 31))
        m = int(rng.integers(3, 5))
        codes = np.column_stack([rng.integers(1, rng.integers(3, 5), size=n)
                                 for _ in range(m)]).astype(float)
        for j in range(m):
            if len(np.unique(codes[:, j])) < 2:
                codes[0, j] += 1
        specs = [VariableSpec(f"v{j}", MeasurementLevel.MULTIPLE_NOMINAL,
                              categories=sorted({int(c) for c in codes[:, j]}))
                 for j in range(m)]
        est = CATPCA(n_components=2, max_iter=3000, tol=0.0).fit(Dataset(Schema(specs), codes))
        oracle_scores, oracle_lam = mca_solution(codes, 2)
        assert column_sign_distance(est.object_scores_, oracle_scores) < 1e-6, f"seed {seed}"
        assert np.allclose(est.eigenvalues_, oracle_lam, atol=1e-8), f"seed {seed}"


def test_iteration_zero_equals_linear_pca_fit():
    # with every variable numeric the starting configuration is already
    # the linear solution, so the iteration-0 record must match it
    rng = np.random.default_rng(3)
    data = rng.standard_normal((60, 5)) @ rng.standard_normal((5, 5))
    est = CATPCA(n_components=3).fit(data)
    lam, _ = correlation_eigensystem(data, 3)
    record = est.history_[0]
    assert record.iteration == 0
    assert record.vaf_increase == 0.0
    assert abs(record.vaf_total - lam.sum()) < 1e-8


# ---- fit invariants --------------------------------------------------------


def test_mixed_fit_invariants():
    for seed in range(10):
        ds = make_mixed_dataset(seed, n=70)
        p = 3
        est = CATPCA(n_components=p, max_iter=300, tol=1e-10).fit(ds)
        m = ds.schema.active.__len__()
        X = est.object_scores_

        assert np.allclose(X.mean(axis=0), 0.0, atol=1e-9), f"seed {seed}"
        assert np.allclose(X.T @ X / ds.n, np.eye(p), atol=1e-8), f"seed {seed}"

        vafs = [h.vaf_total for h in est.history_]
        assert all(b >= a - 1e-9 for a, b in zip(vafs, vafs[1:])), f"seed {seed}"
        for record in est.history_:
            assert abs(record.vaf_total + record.loss_total - m * p) < 1e-6, f"seed {seed}"
            assert abs(record.loss_total
                       - record.loss_centroid - record.loss_restriction) < 1e-9

        lam = est.eigenvalues_
        assert np.all(np.diff(lam) <= 1e-9), f"seed {seed}"
        assert abs(lam.sum() - est.history_[-1].vaf_total) < 1e-8, f"seed {seed}"

        for j, spec in enumerate(ds.schema.active):
            row = est.loadings_[j]
            if spec.level is MeasurementLevel.MULTIPLE_NOMINAL:
                assert np.all(np.isnan(row))
            else:
                assert np.all(np.isfinite(row))
        for name, quant in est.quantifications_.items():
            if quant.level is MeasurementLevel.ORDINAL:
                assert np.all(np.diff(quant.values_vector()) >= -1e-10), name
            assert abs(quant.weighted_mean()) < 1e-9
            assert abs(quant.weighted_variance() - 1.0) < 1e-8


def test_final_loss_matches_brute_force_recomputation():
    ds = make_mixed_dataset(11, n=90)
    est = CATPCA(n_components=3, max_iter=200, tol=1e-9).fit(ds)
    recomputed = fitted_loss(est.model_, ds)
    assert abs(recomputed - est.history_[-1].loss_total) < 1e-8


def test_fit_is_deterministic():
    ds = make_mixed_dataset(4, n=60)
    a = CATPCA(n_components=2, max_iter=100).fit(ds)
    b = CATPCA(n_components=2, max_iter=100).fit(ds)
    assert np.array_equal(a.object_scores_, b.object_scores_)
    assert np.array_equal(np.nan_to_num(a.loadings_), np.nan_to_num(b.loadings_))
    assert a.history_[-1].vaf_total == b.history_[-1].vaf_total


def test_row_permutation_permutes_scores():
    ds = make_mixed_dataset(5, n=60)
    rng = np.random.default_rng(0)
    perm = rng.permutation(ds.n)
    shuffled = Dataset(ds.schema, ds.values[perm])
    a = CATPCA(n_components=2, max_iter=500, tol=1e-12).fit(ds)
    b = CATPCA(n_components=2, max_iter=500, tol=1e-12).fit(shuffled)
    assert np.allclose(a.eigenvalues_, b.eigenvalues_, atol=1e-8)
    assert column_sign_distance(a.object_scores_[perm], b.object_scores_) < 1e-6


def test_row_duplication_keeps_the_solution():
    ds = make_mixed_dataset(6, n=50)
    doubled = Dataset(ds.schema, np.vstack([ds.values, ds.values]))
    a = CATPCA(n_components=2, max_iter=400, tol=1e-12).fit(ds)
    b = CATPCA(n_components=2, max_iter=400, tol=1e-12).fit(doubled)
    assert np.allclose(a.eigenvalues_, b.eigenvalues_, atol=1e-9)
    assert column_sign_distance(np.nan_to_num(a.loadings_),
                                np.nan_to_num(b.loadings_)) < 1e-7
    assert np.allclose(b.object_scores_[:ds.n], b.object_scores_[ds.n:], atol=1e-9)


def test_ordinal_equals_nominal_when_the_free_fit_is_monotone():
    rng = np.random.default_rng(9)
    n = 150
    latent = rng.standard_normal(n)
    columns = np.column_stack([
        quantile_codes(latent + 0.3 * rng.standard_normal(n), 3),
        quantile_codes(latent + 0.3 * rng.standard_normal(n), 4),
        latent + 0.2 * rng.standard_normal(n),
    ])
    as_nominal = Schema([
        VariableSpec("a", MeasurementLevel.SINGLE_NOMINAL, categories=[1, 2, 3]),
        VariableSpec("b", MeasurementLevel.SINGLE_NOMINAL, categories=[1, 2, 3, 4]),
        VariableSpec("z", MeasurementLevel.NUMERIC),
    ])
    as_ordinal = Schema([
        VariableSpec("a", MeasurementLevel.ORDINAL, categories=[1, 2, 3]),
        VariableSpec("b", MeasurementLevel.ORDINAL, categories=[1, 2, 3, 4]),
        VariableSpec("z", MeasurementLevel.NUMERIC),
    ])
    nominal = CATPCA(n_components=1, max_iter=500, tol=1e-13).fit(Dataset(as_nominal, columns))
    for quant in nominal.quantifications_.values():
        assert np.all(np.diff(quant.values_vector()) >= -1e-8)  # precondition
    ordinal = CATPCA(n_components=1, max_iter=500, tol=1e-13).fit(Dataset(as_ordinal, columns))
    assert np.allclose(nominal.eigenvalues_, ordinal.eigenvalues_, atol=1e-7)
    assert column_sign_distance(nominal.object_scores_, ordinal.object_scores_) < 1e-5


def test_iteration_cap_reported():
    ds = make_mixed_dataset(8, n=60)
    est = CATPCA(n_components=2, max_iter=2, tol=1e-14).fit(ds)
    assert est.n_iter_ == 2
    assert not est.converged_
    assert est.model_.convergence_reason == "max_iterations"
    assert len(est.history_) == 3  # iteration 0 plus two sweeps


def test_convergence_reported():
    ds = make_mixed_dataset(8, n=60)
    est = CATPCA(n_components=2, max_iter=500, tol=1e-8).fit(ds)
    assert est.converged_
    assert est.model_.convergence_reason == "vaf_increase_below_tol"
    assert est.history_[-1].vaf_increase < 1e-8


# ---- estimator surface -----------------------------------------------------


def test_requires_minimum_rows():
    data = np.array([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises((DataError, ValueError)):
        CATPCA(n_components=1).fit(data)


def test_component_count_validation():
    data = np.random.default_rng(0).standard_normal((20, 4))
    with pytest.raises(ValueError):
        CATPCA(n_components=5).fit(data)
    with pytest.raises(ValueError):
        CATPCA(n_components=0).fit(data)


def test_transform_returns_quantified_columns():
    ds = make_mixed_dataset(12, n=60, n_multi=0)
    est = CATPCA(n_components=2).fit(ds)
    quantified = est.transform(ds)
    assert quantified.shape == (ds.n, len(ds.schema.active))
    for j, spec in enumerate(ds.schema.active):
        column = quantified[:, j]
        assert abs(column.mean()) < 1e-9
        assert abs(column.std() - 1.0) < 1e-8
        if spec.level is not MeasurementLevel.NUMERIC:
            mapping = est.quantifications_[spec.name].mapping
            raw = ds.column(spec.name)
            assert np.allclose(column, [mapping[int(v)] for v in raw])


def test_transform_rejects_unseen_code():
    ds = make_mixed_dataset(12, n=60, n_multi=0)
    est = CATPCA(n_components=2).fit(ds)
    altered = ds.values.copy()
    ord0 = ds.schema.index_of("ord0")
    altered[0, ord0] = 99.0
    schema = Schema([
        VariableSpec(s.name, s.level,
                     categories=(s.categories + [99] if s.name == "ord0" else s.categories))
        for s in ds.schema.variables
    ])
    with pytest.raises(DataError, match="ord0"):
        est.transform(Dataset(schema, altered))


def test_transform_undefined_with_multiple_nominal():
    ds = make_mixed_dataset(13, n=60, n_multi=2)
    est = CATPCA(n_components=2).fit(ds)
    with pytest.raises(DataError, match="multiple-nominal"):
        est.transform(ds)


def test_not_fitted_error():
    with pytest.raises(NotFittedError):
        CATPCA().transform(np.zeros((4, 2)))


def test_project_matches_composed_scores():
    ds = make_mixed_dataset(14, n=80, n_multi=0)
    est = CATPCA(n_components=2, max_iter=400, tol=1e-12).fit(ds)
    projected = est.project(ds)
    m = len(ds.schema.active)
    expected = est.transform(ds) @ est.loadings_ / m
    assert np.allclose(projected, expected, atol=1e-12)
    # projection correlates strongly with the fitted scores dimension-wise
    for s in range(2):
        r = np.corrcoef(projected[:, s], est.object_scores_[:, s])[0, 1]
        assert r > 0.95


def test_sklearn_params_contract():
    est = CATPCA(n_components=3, max_iter=50, tol=1e-4, init="random", random_state=5)
    params = est.get_params()
    assert params["n_components"] == 3 and params["init"] == "random"
    cloned = clone(est)
    assert cloned.get_params() == params
    est.set_params(max_iter=10)
    assert est.max_iter == 10


def test_model_round_trip(tmp_path):
    ds = make_mixed_dataset(15, n=60)
    est = CATPCA(n_components=2).fit(ds)
    path = tmp_path / "model.json"
    est.model_.save(path)
    loaded = CatpcaModel.load(path)
    assert loaded.variable_names == est.model_.variable_names
    assert loaded.levels == est.model_.levels
    assert np.allclose(loaded.object_scores, est.model_.object_scores)
    assert np.allclose(np.nan_to_num(loaded.loadings), np.nan_to_num(est.model_.loadings))
    assert np.allclose(loaded.eigenvalues, est.model_.eigenvalues)
    assert loaded.converged == est.model_.converged
    for name, quant in est.model_.quantifications.items():
        assert loaded.quantifications[name].mapping == quant.mapping


def test_model_load_rejects_wrong_format(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format": "something-else", "format_version": 1}', encoding="utf-8")
    with pytest.raises(DataError):
        CatpcaModel.load(path)


def test_variance_summary_shape():
    ds = make_mixed_dataset(16, n=60)
    est = CATPCA(n_components=3).fit(ds)
    rows = est.model_.variance_summary()
    assert len(rows) == 3
    dims = [row[0] for row in rows]
    assert dims == [1, 2, 3]
    cumulative = [row[4] for row in rows]
    assert all(b >= a for a, b in zip(cumulative, cumulative[1:]))
