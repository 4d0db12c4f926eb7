"""Split-sample validation: does the retention outcome replicate?

Two models fitted on complementary partitions are compared on the
number of dimensions their retention criterion keeps and on the
cumulative variance those dimensions account for. Small deltas mean
the component structure is stable; the verdict is Valid when both
deltas sit within tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .extraction import ExtractionStrategy, apply_criterion

DEFAULT_DIM_TOLERANCE = 5
DEFAULT_VAF_TOLERANCE = 5.0


@dataclass
class ModelSummary:
    """Criterion outcomes for one fitted model."""

    label: str
    n: int
    m: int
    criterion_counts: dict[str, int]
    criterion_percents: dict[str, float]
    leading_eigenvalues: list[float] = field(default_factory=list)


def summarize_model(model, strategy=None, label=""):
    """Dimension counts and cumulative percents under every criterion."""
    strategy = strategy or ExtractionStrategy()
    eigenvalues = np.sort(np.asarray(model.eigenvalues, dtype=float))[::-1]
    counts = {}
    percents = {}
    for name in ("eigenvalue", "variance_explained", "scree_knee"):
        probe = ExtractionStrategy(**{**strategy.__dict__, "criterion": name})
        try:
            outcome = apply_criterion(eigenvalues, model.m, probe)
        except ValueError:
            continue  # e.g. variance target unreachable on this spectrum
        counts[name] = outcome.count
        percents[name] = outcome.cumulative_vaf_percent
    return ModelSummary(
        label=label,
        n=model.n,
        m=model.m,
        criterion_counts=counts,
        criterion_percents=percents,
        leading_eigenvalues=[float(v) for v in eigenvalues[:5]],
    )


@dataclass
class ValidationReport:
    """Outcome of comparing a train fit against a test fit."""

    criterion: str
    train: ModelSummary
    test: ModelSummary
    dimension_delta: int
    vaf_percent_delta: float
    dim_tolerance: int
    vaf_tolerance: float
    verdict: str

    @property
    def valid(self):
        return self.verdict == "Valid"


def compare_outcomes(train_outcome, test_outcome, criterion="eigenvalue",
                     dim_tolerance=DEFAULT_DIM_TOLERANCE,
                     vaf_tolerance=DEFAULT_VAF_TOLERANCE,
                     train_summary=None, test_summary=None):
    """Build a report from two (dimension count, cumulative percent) pairs.

    Deltas are signed train minus test; the verdict tests their absolute
    values, so swapping the partitions never changes it.
    """
    train_dims, train_vaf = train_outcome
    test_dims, test_vaf = test_outcome
    dim_delta = int(train_dims) - int(test_dims)
    vaf_delta = float(train_vaf) - float(test_vaf)
    verdict = "Valid" if (abs(dim_delta) <= dim_tolerance
                          and abs(vaf_delta) <= vaf_tolerance) else "Invalid"
    placeholder = ModelSummary(label="", n=0, m=0, criterion_counts={}, criterion_percents={})
    return ValidationReport(
        criterion=criterion,
        train=train_summary or placeholder,
        test=test_summary or placeholder,
        dimension_delta=dim_delta,
        vaf_percent_delta=vaf_delta,
        dim_tolerance=int(dim_tolerance),
        vaf_tolerance=float(vaf_tolerance),
        verdict=verdict,
    )


def validate_split(train_model, test_model, strategy=None,
                   dim_tolerance=DEFAULT_DIM_TOLERANCE,
                   vaf_tolerance=DEFAULT_VAF_TOLERANCE):
    """Compare two fitted models under one retention strategy.

    Raises DataError when the models were not fit on the same variables
    with the same measurement levels.
    """
    strategy = strategy or ExtractionStrategy()
    if train_model.variable_names != test_model.variable_names or \
            train_model.levels != test_model.levels:
        raise DataError("train and test models disagree on variables or levels")
    train_summary = summarize_model(train_model, strategy, label="train")
    test_summary = summarize_model(test_model, strategy, label="test")
    name = strategy.criterion
    if name not in train_summary.criterion_counts or name not in test_summary.criterion_counts:
        raise DataError(f"criterion {name!r} could not be evaluated on both partitions")
    return compare_outcomes(
        (train_summary.criterion_counts[name], train_summary.criterion_percents[name]),
        (test_summary.criterion_counts[name], test_summary.criterion_percents[name]),
        criterion=name,
        dim_tolerance=dim_tolerance,
        vaf_tolerance=vaf_tolerance,
        train_summary=train_summary,
        test_summary=test_summary,
    )
