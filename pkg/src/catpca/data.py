"""Dataset container, CSV loading, obesity grades, and seeded splitting."""

from __future__ import annotations

import csv
import enum
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .schema import MeasurementLevel, Schema

ROW_ID_COLUMN = "row_id"


class ObesityClass(enum.Enum):
    """WHO obesity grade derived from body-mass index."""

    CLASS_I = "I"
    CLASS_II = "II"
    CLASS_III = "III"


def derive_obesity_class(bmi):
    """Grade a body-mass index value.

    Returns None below 30 (not obese); ClassI for [30, 35), ClassII for
    [35, 40), ClassIII from 40 up. Raises DataError for non-positive or
    non-finite input.
    """
    bmi = float(bmi)
    if not math.isfinite(bmi) or bmi <= 0:
        raise DataError(f"body-mass index must be positive and finite, got {bmi!r}")
    if bmi < 30:
        return None
    if bmi < 35:
        return ObesityClass.CLASS_I
    if bmi < 40:
        return ObesityClass.CLASS_II
    return ObesityClass.CLASS_III


class Dataset:
    """A schema plus a rectangular block of parsed values.

    Values are stored as a float64 matrix; categorical cells hold their
    integer codes exactly. ``row_ids`` records each row's ordinal
    position in the source file (0-based), so filtered subsets and
    splits stay auditable against the original.
    """

    def __init__(self, schema, values, row_ids=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise DataError("dataset values must be a 2-d array")
        if values.shape[1] != len(schema):
            raise DataError(
                f"dataset has {values.shape[1]} columns but schema declares {len(schema)}"
            )
        if row_ids is None:
            row_ids = np.arange(values.shape[0])
        row_ids = np.asarray(row_ids, dtype=int)
        if row_ids.shape != (values.shape[0],):
            raise DataError("row_ids must have one entry per row")
        self.schema = schema
        self.values = values
        self.row_ids = row_ids

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def m(self):
        return self.values.shape[1]

    def column(self, name):
        """One column as a 1-d array."""
        return self.values[:, self.schema.index_of(name)]

    def take(self, row_indices):
        """New Dataset holding the given row positions (in the given order)."""
        idx = np.asarray(row_indices, dtype=int)
        return Dataset(self.schema, self.values[idx], self.row_ids[idx])

    def __repr__(self):
        return f"Dataset(n={self.n}, m={self.m})"


def _open_source(csv_source):
    if hasattr(csv_source, "read"):
        raw = csv_source.read()
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8-sig")
        return io.StringIO(raw)
    if isinstance(csv_source, bytes):
        return io.StringIO(csv_source.decode("utf-8-sig"))
    return open(csv_source, "r", encoding="utf-8-sig", newline="")


def load_dataset(csv_source, schema):
    """Parse a CSV file against a schema.

    Parameters
    ----------
    csv_source : path, file-like, or bytes
        CSV text with a header row. Lines starting with ``#`` are
        treated as comments and skipped. An optional ``row_id`` column
        (not part of the schema) is used as row identity when present.
    schema : Schema
        Declares every remaining column.

    Returns
    -------
    Dataset

    Raises
    ------
    DataError
        On a missing column, an unparsable cell, or a category code the
        schema does not allow. Messages name the offending row and column.
    """
    handle = _open_source(csv_source)
    try:
        reader = csv.reader(row for row in handle if not row.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("data file is empty") from None
        header = [h.strip() for h in header]

        id_pos = header.index(ROW_ID_COLUMN) if ROW_ID_COLUMN in header and ROW_ID_COLUMN not in schema else None
        missing_cols = [name for name in schema.names if name not in header]
        if missing_cols:
            raise DataError(f"data file lacks columns declared in schema: {missing_cols}")

        col_pos = [header.index(v.name) for v in schema.variables]
        allowed = []
        droppers = []
        for v in schema.variables:
            if v.level is MeasurementLevel.NUMERIC:
                allowed.append(None)
            else:
                allowed.append(set(v.effective_categories))
            droppers.append(set(v.missing_codes) if not v.missing_as_category else set())

        rows = []
        ids = []
        dropped = 0
        for line_no, record in enumerate(reader):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) < len(header):
                raise DataError(
                    f"row {line_no + 1} has {len(record)} cells, expected {len(header)}"
                )
            parsed = np.empty(len(schema))
            drop = False
            for j, v in enumerate(schema.variables):
                cell = record[col_pos[j]].strip()
                if v.level is MeasurementLevel.NUMERIC:
                    try:
                        value = float(cell)
                    except ValueError:
                        raise DataError(
                            f"row {line_no + 1}, column {v.name!r}: cannot parse {cell!r} as a number"
                        ) from None
                    if not math.isfinite(value):
                        raise DataError(
                            f"row {line_no + 1}, column {v.name!r}: non-finite value {cell!r}"
                        )
                    if v.missing_codes and value in droppers[j]:
                        drop = True
                else:
                    try:
                        value = int(cell)
                    except ValueError:
                        raise DataError(
                            f"row {line_no + 1}, column {v.name!r}: cannot parse {cell!r} as an integer code"
                        ) from None
                    if value in droppers[j]:
                        drop = True
                    elif value not in allowed[j]:
                        raise DataError(
                            f"row {line_no + 1}, column {v.name!r}: code {value} is not in the schema"
                        )
                parsed[j] = value
            if drop:
                dropped += 1
                continue
            rows.append(parsed)
            if id_pos is not None:
                try:
                    ids.append(int(record[id_pos]))
                except ValueError:
                    raise DataError(
                        f"row {line_no + 1}: row_id {record[id_pos]!r} is not an integer"
                    ) from None
            else:
                ids.append(line_no)
    finally:
        handle.close()

    if dropped:
        warnings.warn(f"dropped {dropped} rows containing missing codes", stacklevel=2)
    if not rows:
        raise DataError("data file contains no data rows")
    return Dataset(schema, np.vstack(rows), np.asarray(ids))


def save_dataset(dataset, path, include_row_ids=True, comment=None):
    """Write a Dataset back to CSV.

    Floats are written with repr precision so a round trip reproduces
    every cell bit-for-bit. Categorical cells are written as bare
    integer codes.
    """
    levels = [v.level for v in dataset.schema.variables]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        if comment:
            handle.write(f"# {comment}\n")
        writer = csv.writer(handle)
        header = list(dataset.schema.names)
        if include_row_ids:
            header = [ROW_ID_COLUMN] + header
        writer.writerow(header)
        for i in range(dataset.n):
            cells = []
            for j, level in enumerate(levels):
                value = dataset.values[i, j]
                if level.is_categorical:
                    cells.append(str(int(value)))
                else:
                    cells.append(repr(float(value)))
            if include_row_ids:
                cells = [str(int(dataset.row_ids[i]))] + cells
            writer.writerow(cells)


def filter_obese(dataset, bmi_column):
    """Keep only rows with body-mass index of 30 or more.

    Returns a new Dataset; warns when the result is empty.
    """
    if bmi_column not in dataset.schema:
        raise DataError(f"no column named {bmi_column!r} in dataset")
    spec = dataset.schema[bmi_column]
    if spec.level is not MeasurementLevel.NUMERIC:
        raise DataError(f"column {bmi_column!r} must be numeric to filter on it")
    bmi = dataset.column(bmi_column)
    keep = np.flatnonzero(bmi >= 30.0)
    if keep.size == 0:
        warnings.warn("obesity filter removed every row", stacklevel=2)
    return dataset.take(keep)


@dataclass
class ClassSummary:
    """Count, share of the filtered sample, and mode flag for one grade."""

    obesity_class: ObesityClass
    count: int
    percent: float
    is_mode: bool


def summarize_classes(dataset, bmi_column):
    """Tabulate obesity grades for an already-filtered dataset.

    Returns one ClassSummary per grade, in grade order. Percentages sum
    to 100 up to rounding; the most frequent grade is flagged as the
    mode (ties resolved toward the lower grade).
    """
    if dataset.n == 0:
        raise DataError("cannot summarize an empty dataset")
    if bmi_column not in dataset.schema:
        raise DataError(f"no column named {bmi_column!r} in dataset")
    bmi = dataset.column(bmi_column)
    counts = {cls: 0 for cls in ObesityClass}
    for value in bmi:
        grade = derive_obesity_class(value)
        if grade is None:
            raise DataError(
                f"dataset contains a row with body-mass index {value} below 30; filter first"
            )
        counts[grade] += 1
    total = dataset.n
    mode = max(ObesityClass, key=lambda cls: (counts[cls], -list(ObesityClass).index(cls)))
    return [
        ClassSummary(cls, counts[cls], 100.0 * counts[cls] / total, cls is mode)
        for cls in ObesityClass
    ]


@dataclass
class SplitPair:
    """Train/test partition of a Dataset plus the recipe that made it."""

    train: Dataset
    test: Dataset
    seed: int
    ratio: float


def split_dataset(dataset, ratio, seed):
    """Partition rows into train and test by a seeded uniform shuffle.

    The train partition receives round-half-up(ratio * n) rows, clamped
    so both partitions keep at least one row. Row order within each
    partition follows the source file, so outputs are auditable.
    """
    ratio = float(ratio)
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must lie strictly between 0 and 1, got {ratio}")
    if dataset.n < 2:
        raise DataError("need at least 2 rows to split")
    train_size = int(math.floor(ratio * dataset.n + 0.5))
    train_size = min(max(train_size, 1), dataset.n - 1)
    rng = np.random.default_rng(seed)
    order = rng.permutation(dataset.n)
    train_idx = np.sort(order[:train_size])
    test_idx = np.sort(order[train_size:])
    return SplitPair(dataset.take(train_idx), dataset.take(test_idx), int(seed), ratio)
