"""Component profiles: who belongs where, and what the members look like.

After extraction, each retained variable is assigned to the retained
component where its absolute loading peaks. A profile then describes
every component through its member variables: loading and sign,
category quantifications, response frequencies, and a skew indicator
summarizing how the quantified mass is distributed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .als import variance_percent

#: absolute skewness below this reads as symmetric
SKEW_BAND = 0.1


def assign_variables(loadings, dimensions, variables):
    """Assign each variable to its strongest retained component.

    Ties in absolute loading break toward the lowest component label.

    Parameters
    ----------
    loadings : ndarray, shape (len(variables), len(dimensions))
    dimensions : component labels for the columns
    variables : row names (loading-filter survivors)

    Returns
    -------
    dict of variable -> (component, loading)
    """
    loadings = np.asarray(loadings, dtype=float)
    dimensions = [int(d) for d in dimensions]
    variables = list(variables)
    if loadings.shape != (len(variables), len(dimensions)):
        raise ValueError("loadings shape does not match variables x dimensions")
    if not np.isfinite(loadings).all():
        bad = [variables[i] for i in np.flatnonzero(~np.isfinite(loadings).all(axis=1))]
        raise ValueError(f"variables without loadings cannot be assigned: {bad}")
    column_order = np.argsort(dimensions, kind="stable")
    assignment = {}
    for i, name in enumerate(variables):
        magnitudes = np.abs(loadings[i])
        best = max(column_order, key=lambda j: (magnitudes[j], -dimensions[j]))
        assignment[name] = (dimensions[best], float(loadings[i, best]))
    return assignment


def membership_counts(assignment, components):
    """How many variables landed on each component, in component order."""
    counts = {int(c): 0 for c in components}
    for component, _ in assignment.values():
        if component in counts:
            counts[component] += 1
    return counts


def weighted_skewness(values, weights):
    """Third standardized moment under frequency weights."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    mean = values @ weights / total
    centered = values - mean
    variance = (centered ** 2) @ weights / total
    if variance <= 0:
        return 0.0
    return float(((centered ** 3) @ weights / total) / variance ** 1.5)


def quantification_skew(quantification):
    """Skew indicator for a quantified variable.

    Returns
    -------
    direction : {"left", "right", "symmetric"}
        Right means the quantified mass piles up on the low end with a
        long tail of rare high categories (positive third moment).
    skewness : float

    A variable with fewer than 3 distinct quantified values is reported
    symmetric with a warning, since skewness is not informative there.
    """
    values = quantification.values_vector()
    weights = quantification.weights_vector()
    if np.unique(values).size < 3:
        warnings.warn(
            f"variable {quantification.variable!r} has fewer than 3 distinct "
            "quantified values; skew reported as symmetric",
            stacklevel=2,
        )
        return "symmetric", 0.0
    skewness = weighted_skewness(values, weights)
    if skewness > SKEW_BAND:
        return "right", skewness
    if skewness < -SKEW_BAND:
        return "left", skewness
    return "symmetric", skewness


@dataclass
class MemberProfile:
    """One variable inside a component profile."""

    variable: str
    loading: float
    sign: str                     # "positive" | "negative"
    skew_direction: str
    skewness: float
    quantification: dict[int, float]
    frequencies: dict[int, int]


@dataclass
class ComponentProfile:
    """One retained component and its member variables."""

    component: int
    eigenvalue: float
    vaf_percent: float
    members: list[MemberProfile] = field(default_factory=list)


@dataclass
class ProfileReport:
    """Profiles for every retained component."""

    components: list[ComponentProfile]
    assignment: dict[str, tuple[int, float]]
    warnings: list[str] = field(default_factory=list)

    def component(self, label):
        for profile in self.components:
            if profile.component == label:
                return profile
        raise KeyError(f"no component {label} in profile")


def profile_components(model, assignment, components):
    """Describe each retained component through its assigned variables.

    Parameters
    ----------
    model : CatpcaModel
    assignment : dict variable -> (component, loading), from assign_variables
    components : retained component labels (1-based)

    Returns
    -------
    ProfileReport; components that received no variables stay in the
    report with an empty member list and a warning entry.
    """
    notes = []
    profiles = []
    for label in sorted(int(c) for c in components):
        eigenvalue = float(model.eigenvalues[label - 1])
        members = []
        for variable, (component, loading) in assignment.items():
            if component != label:
                continue
            quantification = model.quantifications.get(variable)
            if quantification is None:
                raise ValueError(f"model has no quantification for {variable!r}")
            direction, skewness = quantification_skew(quantification)
            members.append(MemberProfile(
                variable=variable,
                loading=loading,
                sign="positive" if loading >= 0 else "negative",
                skew_direction=direction,
                skewness=skewness,
                quantification=dict(quantification.mapping),
                frequencies=dict(quantification.frequencies),
            ))
        members.sort(key=lambda member: -abs(member.loading))
        if not members:
            notes.append(f"component {label} retained no variables")
        profiles.append(ComponentProfile(
            component=label,
            eigenvalue=eigenvalue,
            vaf_percent=variance_percent(eigenvalue, model.m),
            members=members,
        ))
    return ProfileReport(components=profiles, assignment=dict(assignment), warnings=notes)
