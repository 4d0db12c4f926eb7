"""Alternating least squares for categorical principal component analysis.

The fit alternates three conditional least-squares updates until the
variance accounted for (VAF) stops improving:

1. object scores from the current quantified variables, re-centered and
   orthonormalized so that X'X = n * I;
2. category quantifications from per-category centroids of the scores,
   restricted by each variable's measurement level (monotone for
   ordinal, linear for numeric, free for nominal) and renormalized to
   weighted mean 0 / variance 1;
3. loadings as correlations between each quantified column and each
   score dimension.

Every iteration appends a record with the VAF, its increase, and the
loss split into a centroid part (scores vs. category centroids) and a
restriction part (centroids vs. their rank-1, level-restricted fit).
The identity vaf + loss == m * p holds at every record.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_array

from .data import Dataset
from .errors import DataError, DegenerateColumnError
from .scaling import CategoryQuantification, pava
from .schema import MeasurementLevel, Schema, VariableSpec

MODEL_FORMAT = "catpca-model"
MODEL_FORMAT_VERSION = 1

#: squared norms at or below this are treated as numerical zero
_TINY = 1e-12


def cronbach_alpha(eigenvalue, m):
    """Internal-consistency coefficient of a component.

    alpha = (m / (m - 1)) * (1 - 1 / eigenvalue) for m variables. Always
    below 1; increases with the eigenvalue.
    """
    m = int(m)
    if m < 2:
        raise ValueError("Cronbach's alpha needs at least 2 variables")
    eigenvalue = float(eigenvalue)
    if eigenvalue <= 0:
        raise ValueError("Cronbach's alpha is undefined for a non-positive eigenvalue")
    return (m / (m - 1.0)) * (1.0 - 1.0 / eigenvalue)


def variance_percent(eigenvalue, m):
    """Percent of total variance carried by one component (eigenvalue / m)."""
    if m <= 0:
        raise ValueError("m must be positive")
    return 100.0 * float(eigenvalue) / float(m)


def orthonormalize_scores(Z):
    """Center columns and orthonormalize so that X'X = n * I.

    Uses modified Gram-Schmidt with one re-orthogonalization pass and
    falls back to an SVD basis when a pivot column collapses.

    Returns
    -------
    X : ndarray, same shape as Z
    notes : list of str
        One message per dimension whose direction was not supported by
        the input (rank collapse).
    """
    Z = np.asarray(Z, dtype=float)
    n, p = Z.shape
    if p > n - 1:
        raise ValueError(f"cannot orthonormalize {p} centered dimensions from {n} rows")
    work = Z - Z.mean(axis=0)
    scale = np.sqrt(float(n))
    notes = []

    Q = np.empty_like(work)
    ok = True
    for s in range(p):
        v = work[:, s].copy()
        for _ in range(2):  # one re-orthogonalization pass
            for t in range(s):
                v -= (Q[:, t] @ v) * Q[:, t]
        norm = np.linalg.norm(v)
        if norm * norm <= _TINY * max(1.0, float(n)):
            ok = False
            break
        Q[:, s] = v / norm
    if not ok:
        # rank-deficient input: take an SVD basis of the centered block
        U, sing, _ = np.linalg.svd(work, full_matrices=False)
        rank = int(np.sum(sing > sing[0] * 1e-12)) if sing.size and sing[0] > 0 else 0
        for s in range(rank, p):
            notes.append(f"dimension {s + 1} exceeds the effective rank of the data")
        Q = U[:, :p]
        # columns past the rank may be uncentered; re-center and refine
        Q -= Q.mean(axis=0)
        for s in range(p):
            v = Q[:, s].copy()
            for _ in range(2):
                for t in range(s):
                    v -= (Q[:, t] @ v) * Q[:, t]
            norm = np.linalg.norm(v)
            if norm * norm <= _TINY:
                raise DataError("cannot build an orthonormal score basis: too few independent rows")
            Q[:, s] = v / norm
    return scale * Q, notes


@dataclass
class IterationRecord:
    """Fit statistics after one pass of the alternating updates."""

    iteration: int
    vaf_total: float
    vaf_increase: float
    loss_total: float
    loss_centroid: float
    loss_restriction: float

    def as_row(self):
        return [self.iteration, self.vaf_total, self.vaf_increase,
                self.loss_total, self.loss_centroid, self.loss_restriction]


HISTORY_COLUMNS = ["iteration", "vaf_total", "vaf_increase",
                   "loss_total", "loss_centroid", "loss_restriction"]


class _Variable:
    """Per-variable working state for the alternating updates."""

    __slots__ = ("spec", "name", "level", "idx", "counts", "codes", "order",
                 "starts", "q", "a", "fixed_q", "Y", "unobserved", "shift", "scale")

    def __init__(self, spec, column):
        self.spec = spec
        self.name = spec.name
        self.level = spec.level
        if spec.level is MeasurementLevel.NUMERIC:
            distinct, self.idx = np.unique(column, return_inverse=True)
            if distinct.size < 2:
                raise DegenerateColumnError(spec.name)
            self.codes = [float(v) for v in distinct]
            self.unobserved = []
            mean = column.mean()
            std = column.std()
            if std * std <= _TINY:
                raise DegenerateColumnError(spec.name)
            self.shift, self.scale = float(mean), float(std)
            self.fixed_q = (distinct - mean) / std
        else:
            declared = spec.effective_categories
            present = set(np.unique(column).astype(int).tolist())
            observed = [c for c in declared if c in present]
            if len(observed) < 2:
                raise DegenerateColumnError(spec.name)
            self.codes = observed
            self.unobserved = [c for c in declared if c not in present]
            lookup = {c: i for i, c in enumerate(observed)}
            self.idx = np.array([lookup[int(v)] for v in column])
            self.shift = self.scale = None
            self.fixed_q = None
        self.counts = np.bincount(self.idx, minlength=len(self.codes)).astype(float)
        # stable gather order for fast per-category sums via reduceat
        self.order = np.argsort(self.idx, kind="stable")
        sorted_idx = self.idx[self.order]
        self.starts = np.concatenate(([0], np.flatnonzero(np.diff(sorted_idx)) + 1))
        self.q = None          # (k,) current quantification, weighted mean 0 / var 1
        self.a = None          # (p,) loadings for single variables
        self.Y = None          # (k, p) centroid coordinates for multiple nominal

    @property
    def is_single(self):
        return self.level.is_single

    def initial_quantification(self):
        """Standardized starting values: numeric uses the data, codes use rank order."""
        if self.fixed_q is not None:
            return self.fixed_q.copy()
        ranks = np.arange(1.0, len(self.codes) + 1.0)
        n = self.counts.sum()
        mean = ranks @ self.counts / n
        var = ((ranks - mean) ** 2) @ self.counts / n
        if var <= _TINY:
            raise DegenerateColumnError(self.name)
        return (ranks - mean) / np.sqrt(var)

    def centroids(self, X):
        """Per-category means of the score rows, shape (k, p)."""
        sums = np.add.reduceat(X[self.order], self.starts, axis=0)
        return sums / self.counts[:, None]

    def gather(self):
        """Quantified column, shape (n,)."""
        return self.q[self.idx]


def restricted_quantification(centroids, counts, previous_q, level, fixed_values=None):
    """Level-restricted rank-1 update of one variable's quantification.

    Given fresh category centroids, re-estimates the loading direction
    from the previous quantification, projects the centroids onto it,
    applies the measurement-level restriction, renormalizes to weighted
    mean 0 / variance 1, and refits the loadings.

    Returns
    -------
    q : ndarray, shape (k,)
    a : ndarray, shape (p,)
    """
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    direction = (counts * previous_q) @ centroids / n
    if fixed_values is not None:
        q = fixed_values
    elif direction @ direction <= _TINY:
        q = previous_q  # variable is orthogonal to every dimension; keep its scale
    else:
        projected = centroids @ direction / (direction @ direction)
        if level is MeasurementLevel.ORDINAL:
            projected = pava(projected, counts)
        projected = projected - (counts @ projected) / n
        variance = (counts @ (projected * projected)) / n
        if variance <= _TINY:
            # restriction pooled everything; representable as a zero loading
            return previous_q, np.zeros(centroids.shape[1])
        q = projected / np.sqrt(variance)
    a = (counts * q) @ centroids / n
    return q, a


class CatpcaModel:
    """Everything a fit produces, detached from the estimator object.

    Attributes
    ----------
    object_scores : ndarray, shape (n, p)
        Row scores; centered, with X'X = n * I.
    loadings : ndarray, shape (m, p)
        Correlations between quantified columns and score dimensions.
        Rows for multiple-nominal variables are NaN (those variables
        carry per-dimension centroid coordinates instead).
    eigenvalues : ndarray, shape (p,)
        Per-dimension VAF: column sums of squared loadings plus the
        multiple-nominal discrimination measures.
    quantifications : dict of name -> CategoryQuantification
    centroid_sets : dict of name -> {"codes": list, "coordinates": ndarray}
        Multiple-nominal category coordinates.
    history : list of IterationRecord
    """

    def __init__(self, variable_names, levels, n, row_ids, object_scores, loadings,
                 eigenvalues, quantifications, centroid_sets, numeric_affine,
                 history, converged, convergence_reason, rank_warnings, params):
        self.variable_names = list(variable_names)
        self.levels = list(levels)
        self.n = int(n)
        self.row_ids = np.asarray(row_ids, dtype=int)
        self.object_scores = object_scores
        self.loadings = loadings
        self.eigenvalues = eigenvalues
        self.quantifications = quantifications
        self.centroid_sets = centroid_sets
        self.numeric_affine = numeric_affine
        self.history = history
        self.converged = bool(converged)
        self.convergence_reason = convergence_reason
        self.rank_warnings = list(rank_warnings)
        self.params = dict(params)

    @property
    def m(self):
        return len(self.variable_names)

    @property
    def p(self):
        return self.object_scores.shape[1]

    def variance_summary(self):
        """Per-dimension rows: (dimension, cronbach_alpha, eigenvalue, percent, cumulative).

        Alpha is NaN where the eigenvalue is not positive.
        """
        rows = []
        cumulative = 0.0
        for s, lam in enumerate(self.eigenvalues, start=1):
            lam = float(lam)
            pct = variance_percent(lam, self.m)
            cumulative += pct
            alpha = cronbach_alpha(lam, self.m) if lam > 0 and self.m >= 2 else float("nan")
            rows.append((s, alpha, lam, pct, cumulative))
        return rows

    def to_dict(self):
        quants = {}
        for name, cq in self.quantifications.items():
            quants[name] = {
                "level": cq.level.value,
                "codes": list(cq.mapping),
                "values": [cq.mapping[c] for c in cq.mapping],
                "frequencies": [cq.frequencies[c] for c in cq.mapping],
                "unobserved": list(cq.unobserved),
            }
            if name in self.numeric_affine:
                shift, scale = self.numeric_affine[name]
                quants[name]["shift"] = shift
                quants[name]["scale"] = scale
        centroids = {
            name: {"codes": list(entry["codes"]),
                   "coordinates": np.asarray(entry["coordinates"]).tolist()}
            for name, entry in self.centroid_sets.items()
        }
        return {
            "format": MODEL_FORMAT,
            "format_version": MODEL_FORMAT_VERSION,
            "n": self.n,
            "variables": [{"name": name, "level": level.value}
                          for name, level in zip(self.variable_names, self.levels)],
            "row_ids": self.row_ids.tolist(),
            "object_scores": self.object_scores.tolist(),
            "loadings": [[None if np.isnan(x) else x for x in row] for row in self.loadings],
            "eigenvalues": self.eigenvalues.tolist(),
            "quantifications": quants,
            "centroid_sets": centroids,
            "history": [rec.as_row() for rec in self.history],
            "converged": self.converged,
            "convergence_reason": self.convergence_reason,
            "rank_warnings": self.rank_warnings,
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, payload):
        if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
            raise DataError("not a model file (missing format tag)")
        if payload.get("format_version") != MODEL_FORMAT_VERSION:
            raise DataError(
                f"model file has format version {payload.get('format_version')!r}, "
                f"this build reads version {MODEL_FORMAT_VERSION}"
            )
        levels = [MeasurementLevel(v["level"]) for v in payload["variables"]]
        names = [v["name"] for v in payload["variables"]]
        loadings = np.array([[np.nan if x is None else x for x in row]
                             for row in payload["loadings"]], dtype=float)
        quants = {}
        affine = {}
        for name, entry in payload["quantifications"].items():
            level = MeasurementLevel(entry["level"])
            codes = entry["codes"]
            keys = [int(c) if level.is_categorical else float(c) for c in codes]
            quants[name] = CategoryQuantification(
                variable=name,
                level=level,
                mapping=dict(zip(keys, map(float, entry["values"]))),
                frequencies=dict(zip(keys, map(int, entry["frequencies"]))),
                unobserved=list(entry.get("unobserved", [])),
            )
            if "shift" in entry:
                affine[name] = (float(entry["shift"]), float(entry["scale"]))
        centroid_sets = {
            name: {"codes": [int(c) for c in entry["codes"]],
                   "coordinates": np.asarray(entry["coordinates"], dtype=float)}
            for name, entry in payload.get("centroid_sets", {}).items()
        }
        history = [IterationRecord(int(r[0]), *map(float, r[1:])) for r in payload["history"]]
        return cls(
            variable_names=names,
            levels=levels,
            n=int(payload["n"]),
            row_ids=np.asarray(payload["row_ids"], dtype=int),
            object_scores=np.asarray(payload["object_scores"], dtype=float),
            loadings=loadings,
            eigenvalues=np.asarray(payload["eigenvalues"], dtype=float),
            quantifications=quants,
            centroid_sets=centroid_sets,
            numeric_affine=affine,
            history=history,
            converged=payload["converged"],
            convergence_reason=payload["convergence_reason"],
            rank_warnings=payload.get("rank_warnings", []),
            params=payload.get("params", {}),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle)
            handle.write("\n")

    @classmethod
    def load(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as handle:
                payload = json.load(handle)
        except FileNotFoundError:
            raise DataError(f"model file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"model file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(payload)


class CATPCA(BaseEstimator, TransformerMixin):
    """Principal components of mixed-level data via optimal scaling.

    Categorical variables are assigned numeric category quantifications
    (monotone for ordinal, free for nominal) chosen together with the
    component space so that the variance accounted for is maximized.
    With all-numeric input the solution coincides with linear principal
    component analysis of the correlation matrix.

    Parameters
    ----------
    n_components : int or None
        Number of dimensions to extract. None fits the maximum,
        min(number of active variables, n - 1).
    max_iter : int, default 100
        Iteration budget for the alternating updates.
    tol : float, default 1e-5
        Stop once the VAF increase falls below this. Zero keeps the
        loop running until the VAF stops improving in float precision
        (or max_iter is reached).
    init : {"numeric", "random"}, default "numeric"
        Starting configuration: "numeric" seeds scores with the linear
        principal components of the data with every variable treated as
        numeric (category codes replaced by their rank order);
        "random" draws seeded Gaussian scores.
    random_state : int or None
        Seed for the "random" init. None is treated as 0 so repeated
        fits are always reproducible.

    Attributes
    ----------
    model_ : CatpcaModel
    object_scores_ : ndarray, shape (n, p)
    loadings_ : ndarray, shape (m_active, p)
    eigenvalues_ : ndarray, shape (p,)
    quantifications_ : dict of variable name -> CategoryQuantification
    history_ : list of IterationRecord
    converged_ : bool
    n_iter_ : int

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(7)
    >>> x = rng.normal(size=(50, 3))
    >>> scores = CATPCA(n_components=2).fit(x).object_scores_
    >>> scores.shape
    (50, 2)
    """

    def __init__(self, n_components=None, max_iter=100, tol=1e-5,
                 init="numeric", random_state=None):
        self.n_components = n_components
        self.max_iter = max_iter
        self.tol = tol
        self.init = init
        self.random_state = random_state

    # ---- fitting -------------------------------------------------------

    def fit(self, X, y=None):
        """Fit the model to a Dataset or an all-numeric array."""
        dataset = self._as_dataset(X)
        self._fit_dataset(dataset)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)

    def transform(self, X):
        """Apply the fitted quantifications, returning standardized columns.

        Output column j holds the quantified value of active variable j
        for every row: the fitted category quantification for ordinal
        and nominal variables, the fit-time standardization for numeric
        ones. Models containing multiple-nominal variables have no
        single quantified column per variable and cannot be transformed.
        """
        if not hasattr(self, "model_"):
            raise NotFittedError("this CATPCA instance is not fitted yet")
        dataset = self._as_dataset(X)
        model = self.model_
        mn = [name for name, level in zip(model.variable_names, model.levels)
              if level is MeasurementLevel.MULTIPLE_NOMINAL]
        if mn:
            raise DataError(
                f"transform is undefined for multiple-nominal variables: {mn}"
            )
        out = np.empty((dataset.n, len(model.variable_names)))
        for j, name in enumerate(model.variable_names):
            if name not in dataset.schema:
                raise DataError(f"dataset lacks fitted variable {name!r}")
            column = dataset.column(name)
            if name in model.numeric_affine:
                shift, scale = model.numeric_affine[name]
                out[:, j] = (column - shift) / scale
            else:
                mapping = model.quantifications[name].mapping
                try:
                    out[:, j] = [mapping[int(v)] for v in column]
                except KeyError as exc:
                    raise DataError(
                        f"variable {name!r}: code {exc.args[0]} was not seen during fit"
                    ) from None
        return out

    def project(self, X):
        """Estimate component scores for new rows.

        Quantifies the rows with the fitted scalings and averages the
        loading-weighted contributions, the same composition the solver
        uses before orthonormalization. In-sample fitted scores live in
        ``object_scores_`` and are the orthonormalized version.
        """
        quantified = self.transform(X)
        return quantified @ np.nan_to_num(self.model_.loadings) / self.model_.m

    # ---- helpers -------------------------------------------------------

    def _as_dataset(self, X):
        if isinstance(X, Dataset):
            return X
        array = check_array(X, dtype=float, ensure_min_samples=2)
        specs = [VariableSpec(name=f"x{j}", level=MeasurementLevel.NUMERIC)
                 for j in range(array.shape[1])]
        return Dataset(Schema(specs), array)

    def _resolve_params(self, n, m_active):
        max_p = min(m_active, n - 1)
        p = max_p if self.n_components is None else int(self.n_components)
        if not 1 <= p <= max_p:
            raise ValueError(
                f"n_components must lie in [1, {max_p}] for {m_active} active variables "
                f"and {n} rows, got {p}"
            )
        max_iter = int(self.max_iter)
        if max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        tol = float(self.tol)
        if tol < 0 or not math.isfinite(tol):
            raise ValueError("tol must be non-negative and finite")
        if self.init not in ("numeric", "random"):
            raise ValueError(f"init must be 'numeric' or 'random', got {self.init!r}")
        seed = 0 if self.random_state is None else int(self.random_state)
        return p, max_iter, tol, seed

    def _fit_dataset(self, dataset):
        active = dataset.schema.active
        if not active:
            raise DataError("schema has no active variables")
        if dataset.n < 3:
            raise DataError("need at least 3 rows to fit")
        p, max_iter, tol, seed = self._resolve_params(dataset.n, len(active))
        n = dataset.n
        m = len(active)

        variables = [_Variable(spec, dataset.values[:, dataset.schema.index_of(spec.name)])
                     for spec in active]
        singles = [v for v in variables if v.is_single]
        multiples = [v for v in variables if not v.is_single]

        rank_notes = []
        if self.init == "random":
            rng = np.random.default_rng(seed)
            X, notes = orthonormalize_scores(rng.standard_normal((n, p)))
            rank_notes.extend(notes)
        else:
            S = np.column_stack([v.initial_quantification()[v.idx] for v in variables])
            U, sing, _ = np.linalg.svd(S, full_matrices=False)
            if U.shape[1] < p:
                U = np.column_stack([U, np.zeros((n, p - U.shape[1]))])
            X, notes = orthonormalize_scores(U[:, :p])
            rank_notes.extend(notes)

        for v in variables:
            if v.is_single:
                v.q = v.initial_quantification()

        # iteration 0 records the starting configuration itself: loadings are
        # refit against the initial scores but quantifications stay untouched
        history = []
        metrics = self._update_and_measure(X, variables, m, p, update=False)
        history.append(IterationRecord(0, metrics[0], 0.0, *metrics[1:]))

        converged = False
        reason = "max_iterations"
        iteration = 0
        for iteration in range(1, max_iter + 1):
            Z = self._compose_scores(variables, n, p, m)
            X, notes = orthonormalize_scores(Z)
            for note in notes:
                if note not in rank_notes:
                    rank_notes.append(note)
            metrics = self._update_and_measure(X, variables, m, p)
            increase = metrics[0] - history[-1].vaf_total
            history.append(IterationRecord(iteration, metrics[0], increase, *metrics[1:]))
            if increase < tol:
                converged = True
                reason = "vaf_increase_below_tol"
                break

        self._rotate_principal_axes(X, variables, n, p)
        self._flip_signs(X, variables, singles, multiples)
        lambdas = self._eigenvalues(variables, singles, multiples, n, p)

        loadings = np.full((m, p), np.nan)
        for j, v in enumerate(variables):
            if v.is_single:
                loadings[j] = v.a
        quantifications = {}
        affine = {}
        centroid_sets = {}
        for v in variables:
            if v.is_single:
                quantifications[v.name] = CategoryQuantification(
                    variable=v.name,
                    level=v.level,
                    mapping={c: float(q) for c, q in zip(v.codes, v.q)},
                    frequencies={c: int(cnt) for c, cnt in zip(v.codes, v.counts)},
                    unobserved=list(v.unobserved),
                )
                if v.level is MeasurementLevel.NUMERIC:
                    affine[v.name] = (v.shift, v.scale)
            else:
                centroid_sets[v.name] = {"codes": list(v.codes), "coordinates": v.Y.copy()}

        for note in rank_notes:
            warnings.warn(note, stacklevel=3)

        self.model_ = CatpcaModel(
            variable_names=[v.name for v in variables],
            levels=[v.level for v in variables],
            n=n,
            row_ids=dataset.row_ids,
            object_scores=X,
            loadings=loadings,
            eigenvalues=lambdas,
            quantifications=quantifications,
            centroid_sets=centroid_sets,
            numeric_affine=affine,
            history=history,
            converged=converged,
            convergence_reason=reason,
            rank_warnings=rank_notes,
            params={"n_components": p, "max_iter": max_iter, "tol": tol,
                    "init": self.init, "random_state": seed, "m_active": m},
        )
        self.object_scores_ = X
        self.loadings_ = loadings
        self.eigenvalues_ = lambdas
        self.quantifications_ = quantifications
        self.history_ = history
        self.converged_ = converged
        self.n_iter_ = iteration
        return self

    @staticmethod
    def _compose_scores(variables, n, p, m):
        """Average of every variable's current model for the scores."""
        Z = np.zeros((n, p))
        for v in variables:
            if v.is_single:
                Z += np.outer(v.gather(), v.a)
            else:
                Z += v.Y[v.idx]
        return Z / m

    @staticmethod
    def _update_and_measure(X, variables, m, p, update=True):
        """Quantification + loading updates, then the loss bookkeeping.

        With ``update=False`` quantifications are left alone and only the
        loadings are refit (used for the iteration-0 record).

        Returns (vaf_total, loss_total, loss_centroid, loss_restriction).
        """
        n = X.shape[0]
        vaf = 0.0
        loss_centroid = 0.0
        loss_restriction = 0.0
        for v in variables:
            centroids = v.centroids(X)
            ssq = float(np.sum(v.counts[:, None] * centroids * centroids))
            loss_centroid += p - ssq / n
            if v.is_single:
                if update:
                    v.q, v.a = restricted_quantification(
                        centroids, v.counts, v.q, v.level, fixed_values=v.fixed_q,
                    )
                else:
                    v.a = (v.counts * v.q) @ centroids / n
                refit = (v.counts * v.q) @ centroids / n
                loss_restriction += ssq / n - 2.0 * float(v.a @ refit) + float(v.a @ v.a)
                vaf += float(v.a @ v.a)
            else:
                v.Y = centroids
                vaf += ssq / n
        loss_total = loss_centroid + loss_restriction
        return vaf, loss_total, loss_centroid, loss_restriction

    @staticmethod
    def _rotate_principal_axes(X, variables, n, p):
        """Rotate the solution so per-dimension contributions are diagonal.

        The total fit is invariant under rotations of the score columns,
        so the iterate the loop stops at carries an arbitrary residual
        rotation (the variance-increase stopping rule cannot see it).
        Diagonalizing the fitted cross-product matrix removes it: the
        reported dimensions come out with descending eigenvalues and the
        loadings and centroid coordinates ride along. Category
        quantifications are direction-free and need no update.
        """
        B = np.zeros((p, p))
        for v in variables:
            if v.is_single:
                B += np.outer(v.a, v.a)
            else:
                B += (v.Y.T * v.counts) @ v.Y / n
        spectrum, R = np.linalg.eigh(B)
        R = R[:, np.argsort(spectrum)[::-1]]
        X[:] = X @ R
        for v in variables:
            if v.is_single:
                v.a = R.T @ v.a
            else:
                v.Y = v.Y @ R

    @staticmethod
    def _flip_signs(X, variables, singles, multiples):
        """Make the largest-magnitude loading in each column positive."""
        if not singles:
            return
        A = np.vstack([v.a for v in singles])
        for s in range(A.shape[1]):
            column = A[:, s]
            peak = int(np.argmax(np.abs(column)))
            if column[peak] < 0:
                X[:, s] *= -1.0
                for v in singles:
                    v.a[s] *= -1.0
                for v in multiples:
                    v.Y[:, s] *= -1.0

    @staticmethod
    def _eigenvalues(variables, singles, multiples, n, p):
        lam = np.zeros(p)
        for v in singles:
            lam += v.a * v.a
        for v in multiples:
            lam += (v.counts @ (v.Y * v.Y)) / n
        return lam
