"""Categorical principal component analysis with optimal scaling.

The package covers the full workflow for mixed measurement levels:
loading and splitting survey data, fitting the alternating least
squares model, choosing how many components to keep, validating that
choice on a held-out split, and profiling the retained components.
"""

__version__ = "0.1.0"

from .als import CATPCA, CatpcaModel, cronbach_alpha, variance_percent
from .data import (Dataset, ObesityClass, derive_obesity_class, filter_obese,
                   load_dataset, save_dataset, split_dataset, summarize_classes)
from .errors import CatpcaError, ConfigError, DataError, DegenerateColumnError
from .extraction import (CommunalityTable, CriterionResult, ExtractionResult,
                         ExtractionStrategy, LoadingFilterResult, apply_criterion,
                         communalities, eigenvalue_criterion, loading_filter,
                         minimum_communality_criterion, scree_knee,
                         select_components, variance_explained_criterion)
from .profiling import (assign_variables, membership_counts, profile_components,
                        quantification_skew, weighted_skewness)
from .scaling import monotone_quantify, normalize_quantification, pava, standardize_numeric
from .schema import MeasurementLevel, Schema, VariableSpec, load_schema, parse_level
from .validation import (ModelSummary, ValidationReport, compare_outcomes,
                         summarize_model, validate_split)

__all__ = [
    "CATPCA",
    "CatpcaModel",
    "CatpcaError",
    "CommunalityTable",
    "ConfigError",
    "CriterionResult",
    "DataError",
    "Dataset",
    "DegenerateColumnError",
    "ExtractionResult",
    "ExtractionStrategy",
    "LoadingFilterResult",
    "MeasurementLevel",
    "ModelSummary",
    "ObesityClass",
    "Schema",
    "ValidationReport",
    "VariableSpec",
    "__version__",
    "apply_criterion",
    "assign_variables",
    "communalities",
    "compare_outcomes",
    "cronbach_alpha",
    "derive_obesity_class",
    "eigenvalue_criterion",
    "filter_obese",
    "load_dataset",
    "load_schema",
    "loading_filter",
    "membership_counts",
    "minimum_communality_criterion",
    "monotone_quantify",
    "normalize_quantification",
    "parse_level",
    "pava",
    "profile_components",
    "quantification_skew",
    "save_dataset",
    "scree_knee",
    "select_components",
    "split_dataset",
    "standardize_numeric",
    "summarize_classes",
    "summarize_model",
    "validate_split",
    "variance_explained_criterion",
    "variance_percent",
    "weighted_skewness",
]
