"""Component retention criteria, loading filters, and communalities.

Four ways to decide how many components to keep from an eigenvalue
spectrum, plus the variable-level follow-up: keep variables whose
largest absolute loading clears a threshold, keep components that
still own at least one such variable, and keep variables whose
communality (sum of squared loadings over the kept components)
clears a second threshold.

Spectra handed to the criteria must be sorted in descending order;
``retained_dimensions`` in the results is always the prefix 1..k.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

#: loadings or communalities this close to a threshold still count
DEFAULT_TOLERANCE = 0.04

DEFAULT_LOADING_THRESHOLD = 0.50
DEFAULT_COMMUNALITY_THRESHOLD = 0.50
DEFAULT_EIGENVALUE_THRESHOLD = 1.0
DEFAULT_NEAR_THRESHOLD = 0.85
DEFAULT_VARIANCE_TARGET = 0.85


@dataclass
class CriterionResult:
    """Outcome of one retention criterion on a sorted spectrum."""

    criterion: str
    retained_dimensions: list[int]
    cumulative_vaf_percent: float
    parameters: dict = field(default_factory=dict)

    @property
    def count(self):
        return len(self.retained_dimensions)


def _check_spectrum(spectrum):
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.ndim != 1 or spectrum.size == 0:
        raise ValueError("spectrum must be a non-empty 1-d array")
    if np.any(np.diff(spectrum) > 1e-9):
        raise ValueError("spectrum must be sorted in descending order")
    if np.any(spectrum < -1e-9):
        raise ValueError("spectrum must be non-negative")
    return spectrum


def _cumulative_percent(spectrum, k, m):
    return 100.0 * float(spectrum[:k].sum()) / float(m)


def eigenvalue_criterion(spectrum, m=None, threshold=DEFAULT_EIGENVALUE_THRESHOLD,
                         near_threshold=DEFAULT_NEAR_THRESHOLD):
    """Keep dimensions with eigenvalue >= threshold, extended by near misses.

    After the strict prefix, consecutive dimensions whose eigenvalue is
    still >= ``near_threshold`` are pulled in as well. Setting
    ``near_threshold`` >= ``threshold`` disables the extension.

    Parameters
    ----------
    spectrum : descending eigenvalues
    m : total number of variables for the percent denominator
        (defaults to the spectrum length)
    """
    spectrum = _check_spectrum(spectrum)
    m = len(spectrum) if m is None else int(m)
    k = int(np.sum(spectrum >= threshold))
    while k < len(spectrum) and spectrum[k] >= near_threshold:
        k += 1
    return CriterionResult(
        criterion="eigenvalue",
        retained_dimensions=list(range(1, k + 1)),
        cumulative_vaf_percent=_cumulative_percent(spectrum, k, m),
        parameters={"threshold": float(threshold), "near_threshold": float(near_threshold)},
    )


def variance_explained_criterion(spectrum, m=None, target=DEFAULT_VARIANCE_TARGET):
    """Smallest prefix whose cumulative share of total variance reaches target.

    ``target`` is a fraction of m (the total variance of m standardized
    variables). Raises ValueError when even the full spectrum falls
    short, reporting the maximum attainable share.
    """
    spectrum = _check_spectrum(spectrum)
    m = len(spectrum) if m is None else int(m)
    target = float(target)
    if not 0.0 < target <= 1.0:
        raise ValueError(f"target must lie in (0, 1], got {target}")
    shares = np.cumsum(spectrum) / m
    reached = np.flatnonzero(shares >= target)
    if reached.size == 0:
        raise ValueError(
            f"variance target {target:.4f} is unreachable; "
            f"maximum attainable is {shares[-1]:.4f}"
        )
    k = int(reached[0]) + 1
    return CriterionResult(
        criterion="variance_explained",
        retained_dimensions=list(range(1, k + 1)),
        cumulative_vaf_percent=_cumulative_percent(spectrum, k, m),
        parameters={"target": target},
    )


def scree_knee(spectrum, m=None):
    """Knee of the scree curve: the dimension of sharpest drop-off.

    The knee is the interior dimension with the largest second
    difference of the eigenvalue sequence (the point where the steep
    initial descent gives way to the flat tail). Ties break toward
    the smallest dimension; a spectrum with no curvature at all is
    flagged with a warning and ``parameters["flat"] = True``.
    """
    spectrum = _check_spectrum(spectrum)
    if len(spectrum) < 3:
        raise ValueError("scree knee needs at least 3 dimensions")
    m = len(spectrum) if m is None else int(m)
    acceleration = (spectrum[:-2] - spectrum[1:-1]) - (spectrum[1:-1] - spectrum[2:])
    knee = int(np.argmax(acceleration)) + 2
    flat = bool(np.max(np.abs(acceleration)) <= 1e-12)
    if flat:
        warnings.warn("spectrum has no curvature; scree knee is arbitrary", stacklevel=2)
    return CriterionResult(
        criterion="scree_knee",
        retained_dimensions=list(range(1, knee + 1)),
        cumulative_vaf_percent=_cumulative_percent(spectrum, knee, m),
        parameters={"knee": knee, "flat": flat},
    )


@dataclass
class LoadingFilterResult:
    """Variables and components that survive the loading threshold."""

    threshold: float
    tolerance: float
    dimensions: list[int]
    retained_variables: list[str]
    dropped_variables: list[str]
    retained_components: list[int]
    passing_cells: dict[str, list[int]]
    max_loadings: dict[str, tuple[int, float]]


def loading_filter(loadings, dimensions, variables, threshold=DEFAULT_LOADING_THRESHOLD,
                   tolerance=DEFAULT_TOLERANCE):
    """Keep variables with at least one sizeable loading, then the
    components those variables actually load on.

    A cell passes when abs(loading) >= threshold - tolerance. A variable
    is retained when any of its cells pass; a component is retained when
    at least one variable passes on it. Rows that are entirely NaN
    (variables without loadings) are dropped without passing anything.

    Parameters
    ----------
    loadings : ndarray, shape (len(variables), len(dimensions))
        Loadings restricted to the candidate dimensions.
    dimensions : component labels for the columns
    variables : row names
    """
    loadings = np.asarray(loadings, dtype=float)
    dimensions = [int(d) for d in dimensions]
    variables = list(variables)
    if loadings.shape != (len(variables), len(dimensions)):
        raise ValueError(
            f"loadings shape {loadings.shape} does not match "
            f"{len(variables)} variables x {len(dimensions)} dimensions"
        )
    cut = float(threshold) - float(tolerance)
    retained = []
    dropped = []
    passing_cells = {}
    max_loadings = {}
    component_hits = set()
    for i, name in enumerate(variables):
        row = loadings[i]
        finite = np.isfinite(row)
        if not finite.any():
            dropped.append(name)
            continue
        magnitudes = np.where(finite, np.abs(row), -np.inf)
        peak = int(np.argmax(magnitudes))
        max_loadings[name] = (dimensions[peak], float(row[peak]))
        passes = [dimensions[j] for j in np.flatnonzero(magnitudes >= cut)]
        if passes:
            retained.append(name)
            passing_cells[name] = passes
            component_hits.update(passes)
        else:
            dropped.append(name)
    retained_components = [d for d in dimensions if d in component_hits]
    return LoadingFilterResult(
        threshold=float(threshold),
        tolerance=float(tolerance),
        dimensions=dimensions,
        retained_variables=retained,
        dropped_variables=dropped,
        retained_components=retained_components,
        passing_cells=passing_cells,
        max_loadings=max_loadings,
    )


@dataclass
class CommunalityTable:
    """Squared loadings over the retained components, with row sums."""

    variables: list[str]
    dimensions: list[int]
    squared: np.ndarray
    totals: np.ndarray
    passed: np.ndarray
    threshold: float
    tolerance: float

    def row(self, name):
        i = self.variables.index(name)
        return self.squared[i], float(self.totals[i]), bool(self.passed[i])

    @property
    def passing_variables(self):
        return [v for v, ok in zip(self.variables, self.passed) if ok]


def communalities(loadings, dimensions, variables,
                  threshold=DEFAULT_COMMUNALITY_THRESHOLD, tolerance=DEFAULT_TOLERANCE):
    """Per-variable sums of squared loadings over the given components.

    The pass flag marks communalities >= threshold - tolerance, the same
    near-threshold convention the loading filter uses.
    """
    loadings = np.asarray(loadings, dtype=float)
    variables = list(variables)
    dimensions = [int(d) for d in dimensions]
    if loadings.shape != (len(variables), len(dimensions)):
        raise ValueError("loadings shape does not match variables x dimensions")
    squared = loadings * loadings
    totals = squared.sum(axis=1)
    cut = float(threshold) - float(tolerance)
    return CommunalityTable(
        variables=variables,
        dimensions=dimensions,
        squared=squared,
        totals=totals,
        passed=totals >= cut,
        threshold=float(threshold),
        tolerance=float(tolerance),
    )


def minimum_communality_criterion(table, threshold=None, tolerance=None):
    """Variables whose communality clears the threshold, in table order."""
    threshold = table.threshold if threshold is None else float(threshold)
    tolerance = table.tolerance if tolerance is None else float(tolerance)
    cut = threshold - tolerance
    return [v for v, total in zip(table.variables, table.totals) if total >= cut]


@dataclass
class ExtractionStrategy:
    """Knobs for the full retention pipeline."""

    criterion: str = "eigenvalue"  # eigenvalue | variance_explained | scree_knee
    eigenvalue_threshold: float = DEFAULT_EIGENVALUE_THRESHOLD
    near_threshold: float = DEFAULT_NEAR_THRESHOLD
    variance_target: float = DEFAULT_VARIANCE_TARGET
    loading_threshold: float = DEFAULT_LOADING_THRESHOLD
    loading_tolerance: float = DEFAULT_TOLERANCE
    communality_threshold: float = DEFAULT_COMMUNALITY_THRESHOLD
    communality_tolerance: float = DEFAULT_TOLERANCE


@dataclass
class ExtractionResult:
    """Full retention pipeline outcome for one fitted model."""

    criterion: CriterionResult
    loading_result: LoadingFilterResult
    communality_table: CommunalityTable
    retained_components: list[int]
    retained_variables: list[str]
    final_variables: list[str]
    log: list[str]


def apply_criterion(spectrum, m, strategy):
    """Run the strategy's chosen retention criterion on a sorted spectrum."""
    if strategy.criterion == "eigenvalue":
        return eigenvalue_criterion(spectrum, m, threshold=strategy.eigenvalue_threshold,
                                    near_threshold=strategy.near_threshold)
    if strategy.criterion == "variance_explained":
        return variance_explained_criterion(spectrum, m, target=strategy.variance_target)
    if strategy.criterion == "scree_knee":
        return scree_knee(spectrum, m)
    raise ValueError(f"unknown criterion {strategy.criterion!r}")


def select_components(model, strategy=None):
    """Run retention criterion, loading filter, and communality check on a model.

    Dimensions are ranked by eigenvalue before the criterion prefix is
    taken, so the retained component labels refer to the model's
    original dimension numbers (1-based).
    """
    strategy = strategy or ExtractionStrategy()
    eigenvalues = np.asarray(model.eigenvalues, dtype=float)
    order = np.argsort(-eigenvalues, kind="stable")
    spectrum = eigenvalues[order]
    criterion = apply_criterion(spectrum, model.m, strategy)
    kept_dims = [int(order[i - 1]) + 1 for i in criterion.retained_dimensions]

    columns = [d - 1 for d in kept_dims]
    filt = loading_filter(
        model.loadings[:, columns], kept_dims, model.variable_names,
        threshold=strategy.loading_threshold, tolerance=strategy.loading_tolerance,
    )
    keep_rows = [model.variable_names.index(name) for name in filt.retained_variables]
    comp_columns = [d - 1 for d in filt.retained_components]
    table = communalities(
        model.loadings[np.ix_(keep_rows, comp_columns)], filt.retained_components,
        filt.retained_variables,
        threshold=strategy.communality_threshold, tolerance=strategy.communality_tolerance,
    )
    final = minimum_communality_criterion(table)
    log = [
        f"criterion {criterion.criterion}: kept {criterion.count} of {len(spectrum)} dimensions "
        f"({criterion.cumulative_vaf_percent:.2f}% of variance)",
        f"loading filter at {strategy.loading_threshold} - {strategy.loading_tolerance}: "
        f"kept {len(filt.retained_variables)} variables on {len(filt.retained_components)} components",
        f"communality check at {strategy.communality_threshold} - {strategy.communality_tolerance}: "
        f"kept {len(final)} of {len(filt.retained_variables)} variables",
    ]
    return ExtractionResult(
        criterion=criterion,
        loading_result=filt,
        communality_table=table,
        retained_components=filt.retained_components,
        retained_variables=filt.retained_variables,
        final_variables=final,
        log=log,
    )
