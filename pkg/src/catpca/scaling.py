"""Optimal scaling primitives: standardization, centroids, monotone fits.

All variance and standardization here uses the population convention
(divide by n, not n - 1). Quantified columns therefore come out with
frequency-weighted mean 0 and variance exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateColumnError
from .schema import MeasurementLevel

#: weighted variances at or below this are treated as zero
_VARIANCE_FLOOR = 1e-12


def standardize_numeric(column):
    """Center and scale a numeric column to mean 0, population variance 1.

    Returns
    -------
    standardized : ndarray
    shift : float
        The mean removed.
    scale : float
        The population standard deviation divided out.

    Raises
    ------
    DegenerateColumnError
        If the column is constant.
    """
    column = np.asarray(column, dtype=float)
    shift = column.mean()
    scale = column.std()  # ddof=0
    if scale * scale <= _VARIANCE_FLOOR:
        raise DegenerateColumnError("<numeric>")
    return (column - shift) / scale, float(shift), float(scale)


def centroid_quantify(codes, targets):
    """Per-category means of target rows.

    Parameters
    ----------
    codes : integer vector, length n
        Category code of each observation.
    targets : ndarray, shape (n, p) or (n,)
        Rows to average within each category.

    Returns
    -------
    dict mapping each observed code to its mean target vector.
    Categories that never occur simply have no entry.
    """
    codes = np.asarray(codes)
    targets = np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        targets = targets[:, None]
    if codes.shape[0] != targets.shape[0]:
        raise ValueError("codes and targets must have the same number of rows")
    uniq, inverse = np.unique(codes, return_inverse=True)
    sums = np.zeros((uniq.size, targets.shape[1]))
    np.add.at(sums, inverse, targets)
    counts = np.bincount(inverse, minlength=uniq.size)
    means = sums / counts[:, None]
    return {int(c) if float(c).is_integer() else float(c): means[i] for i, c in enumerate(uniq)}


def pava(values, weights=None):
    """Weighted least-squares fit of a non-decreasing sequence.

    Pool-adjacent-violators: scan left to right, merging any block whose
    mean drops below its predecessor's into a weighted pool. The result
    minimizes sum(w * (fit - values)**2) over all non-decreasing fits.

    >>> pava([0.0, 2.0, 1.0])
    array([0. , 1.5, 1.5])
    """
    values = np.asarray(values, dtype=float)
    if weights is None:
        weights = np.ones_like(values)
    else:
        weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape or values.ndim != 1:
        raise ValueError("values and weights must be 1-d and the same length")
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")

    # blocks as (mean, weight, count) triples, merged in place
    means = []
    wsum = []
    sizes = []
    for v, w in zip(values, weights):
        means.append(v)
        wsum.append(w)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            w_tot = wsum[-2] + wsum[-1]
            means[-2] = (means[-2] * wsum[-2] + means[-1] * wsum[-1]) / w_tot
            wsum[-2] = w_tot
            sizes[-2] += sizes[-1]
            del means[-1], wsum[-1], sizes[-1]
    return np.repeat(means, sizes)


@dataclass
class CategoryQuantification:
    """Scale values assigned to one variable's categories.

    ``mapping`` pairs each observed category code with its quantified
    value; the values have frequency-weighted mean 0 and variance 1.
    Categories declared in the schema but absent from the data are
    listed in ``unobserved`` and carry no value.
    """

    variable: str
    level: MeasurementLevel
    mapping: dict[int, float]
    frequencies: dict[int, int]
    unobserved: list[int] = field(default_factory=list)

    @property
    def codes(self):
        return list(self.mapping)

    def values_vector(self):
        return np.array([self.mapping[c] for c in self.mapping])

    def weights_vector(self):
        return np.array([self.frequencies[c] for c in self.mapping], dtype=float)

    def weighted_mean(self):
        w = self.weights_vector()
        return float(self.values_vector() @ w / w.sum())

    def weighted_variance(self):
        w = self.weights_vector()
        v = self.values_vector()
        mean = v @ w / w.sum()
        return float(((v - mean) ** 2) @ w / w.sum())


def normalize_quantification(mapping, frequencies, variable="", level=MeasurementLevel.SINGLE_NOMINAL,
                             unobserved=None):
    """Shift and scale category values to weighted mean 0, variance 1.

    Parameters
    ----------
    mapping : dict code -> raw value
    frequencies : dict code -> positive count
        Weights used for the moments; every mapping code needs one.

    Raises
    ------
    DegenerateColumnError
        Fewer than two categories, or zero weighted variance.
    """
    codes = list(mapping)
    if len(codes) < 2:
        raise DegenerateColumnError(variable or "<quantification>",
                                    f"variable {variable!r} has a single effective category")
    values = np.array([float(mapping[c]) for c in codes])
    weights = np.array([float(frequencies[c]) for c in codes])
    if np.any(weights <= 0):
        raise ValueError("frequencies must be positive")
    total = weights.sum()
    mean = values @ weights / total
    var = ((values - mean) ** 2) @ weights / total
    if var <= _VARIANCE_FLOOR:
        raise DegenerateColumnError(variable or "<quantification>",
                                    f"variable {variable!r} quantifies to a constant")
    scaled = (values - mean) / np.sqrt(var)
    return CategoryQuantification(
        variable=variable,
        level=level,
        mapping={c: float(s) for c, s in zip(codes, scaled)},
        frequencies={c: int(frequencies[c]) for c in codes},
        unobserved=list(unobserved or []),
    )


def monotone_quantify(values, frequencies, variable="", unobserved=None):
    """Monotone (ordinal) quantification of per-category values.

    Applies the weighted non-decreasing fit in the order the categories
    are given, then renormalizes to weighted mean 0 / variance 1.

    Parameters
    ----------
    values : dict code -> raw value, in scale order
    frequencies : dict code -> positive count

    Returns
    -------
    CategoryQuantification with non-decreasing values.
    """
    codes = list(values)
    raw = np.array([float(values[c]) for c in codes])
    weights = np.array([float(frequencies[c]) for c in codes])
    fitted = pava(raw, weights)
    return normalize_quantification(
        dict(zip(codes, fitted)), frequencies,
        variable=variable, level=MeasurementLevel.ORDINAL, unobserved=unobserved,
    )
