"""Variable schemas for mixed measurement-level tabular data.

A schema lists every column of a data file together with its
measurement level. Columns come in four flavours:

* ``numeric`` -- interval-scaled values, used as-is after standardizing.
* ``ordinal`` -- integer category codes whose declared order is
  meaningful; quantification is restricted to be monotone in it.
* ``single_nominal`` -- integer codes with no order; categories are
  quantified freely but share one quantification across dimensions.
* ``multiple_nominal`` -- integer codes quantified separately per
  dimension (centroid coordinates); excluded from rank-1 loadings.

Schemas are read from small YAML files so an analysis is reproducible
from the data file plus one text document.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError


class MeasurementLevel(enum.Enum):
    """Scaling treatment applied to a variable during the analysis."""

    NUMERIC = "numeric"
    ORDINAL = "ordinal"
    SINGLE_NOMINAL = "single_nominal"
    MULTIPLE_NOMINAL = "multiple_nominal"

    @property
    def is_categorical(self):
        return self is not MeasurementLevel.NUMERIC

    @property
    def is_single(self):
        """True when the variable gets one quantification shared across dimensions."""
        return self is not MeasurementLevel.MULTIPLE_NOMINAL


_LEVEL_ALIASES = {
    "numeric": MeasurementLevel.NUMERIC,
    "numerical": MeasurementLevel.NUMERIC,
    "ordinal": MeasurementLevel.ORDINAL,
    "single_nominal": MeasurementLevel.SINGLE_NOMINAL,
    "nominal": MeasurementLevel.SINGLE_NOMINAL,
    "multiple_nominal": MeasurementLevel.MULTIPLE_NOMINAL,
}


@dataclass
class VariableSpec:
    """Declaration of one column.

    Parameters
    ----------
    name : str
        Column name as it appears in the data file header.
    level : MeasurementLevel
        Scaling treatment for the column.
    categories : list of int
        Valid category codes, in scale order for ordinal variables.
        Must be empty for numeric variables.
    missing_codes : list of int
        Codes standing in for "no answer". By default these are kept
        as categories of their own; with ``missing_as_category`` off,
        rows containing them are dropped at load time.
    missing_as_category : bool
        Keep missing codes as extra categories (appended after the
        declared ones, in ascending code order).
    passive : bool
        Carry the column through loading, filtering, and splitting but
        exclude it from model fitting (used for stratification columns
        such as a body-mass index and the class derived from it).
    description : str
        Free-text note, echoed in reports.
    """

    name: str
    level: MeasurementLevel
    categories: list[int] = field(default_factory=list)
    missing_codes: list[int] = field(default_factory=list)
    missing_as_category: bool = True
    passive: bool = False
    description: str = ""

    def __post_init__(self):
        if not self.name:
            raise ConfigError("variable name must be a non-empty string")
        if not isinstance(self.level, MeasurementLevel):
            self.level = parse_level(self.level)
        self.categories = [int(c) for c in self.categories]
        self.missing_codes = [int(c) for c in self.missing_codes]
        if self.level is MeasurementLevel.NUMERIC:
            if self.categories:
                raise ConfigError(f"numeric variable {self.name!r} must not declare categories")
        else:
            if not self.categories:
                raise ConfigError(f"categorical variable {self.name!r} declares no categories")
            if len(set(self.categories)) != len(self.categories):
                raise ConfigError(f"variable {self.name!r} has duplicate category codes")
            overlap = set(self.categories) & set(self.missing_codes)
            if overlap and not self.missing_as_category:
                raise ConfigError(
                    f"variable {self.name!r}: missing codes {sorted(overlap)} collide with categories"
                )

    @property
    def effective_categories(self):
        """Category codes actually analysed, missing codes included when kept."""
        if self.level is MeasurementLevel.NUMERIC or not self.missing_as_category:
            return list(self.categories)
        extra = [c for c in sorted(self.missing_codes) if c not in self.categories]
        return list(self.categories) + extra


def parse_level(text):
    """Translate a level name from a schema file into a MeasurementLevel."""
    try:
        return _LEVEL_ALIASES[str(text).strip().lower()]
    except KeyError:
        valid = ", ".join(sorted(set(_LEVEL_ALIASES)))
        raise ConfigError(f"unknown measurement level {text!r} (expected one of: {valid})") from None


class Schema:
    """Ordered collection of VariableSpec entries with unique names."""

    def __init__(self, variables):
        self.variables = list(variables)
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ConfigError(f"duplicate variable names in schema: {dupes}")
        self._index = {v.name: i for i, v in enumerate(self.variables)}

    def __len__(self):
        return len(self.variables)

    def __iter__(self):
        return iter(self.variables)

    def __getitem__(self, name):
        try:
            return self.variables[self._index[name]]
        except KeyError:
            raise KeyError(f"no variable named {name!r} in schema") from None

    def __contains__(self, name):
        return name in self._index

    def index_of(self, name):
        if name not in self._index:
            raise KeyError(f"no variable named {name!r} in schema")
        return self._index[name]

    @property
    def names(self):
        return [v.name for v in self.variables]

    @property
    def active(self):
        """Variables that participate in model fitting."""
        return [v for v in self.variables if not v.passive]

    @property
    def active_names(self):
        return [v.name for v in self.variables if not v.passive]

    def to_dict(self):
        out = []
        for v in self.variables:
            entry = {"name": v.name, "level": v.level.value}
            if v.categories:
                entry["categories"] = list(v.categories)
            if v.missing_codes:
                entry["missing_codes"] = list(v.missing_codes)
            if not v.missing_as_category:
                entry["missing_as_category"] = False
            if v.passive:
                entry["passive"] = True
            if v.description:
                entry["description"] = v.description
            out.append(entry)
        return {"variables": out}

    @classmethod
    def from_dict(cls, payload):
        if not isinstance(payload, dict) or "variables" not in payload:
            raise ConfigError("schema must be a mapping with a 'variables' list")
        entries = payload["variables"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError("schema 'variables' must be a non-empty list")
        specs = []
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict):
                raise ConfigError(f"schema variable #{i + 1} must be a mapping")
            known = {
                "name", "level", "categories", "missing_codes",
                "missing_as_category", "passive", "description",
            }
            unknown = set(entry) - known
            if unknown:
                raise ConfigError(
                    f"schema variable #{i + 1} has unknown keys: {sorted(unknown)}"
                )
            try:
                specs.append(VariableSpec(
                    name=str(entry.get("name", "")),
                    level=parse_level(entry.get("level", "")),
                    categories=entry.get("categories") or [],
                    missing_codes=entry.get("missing_codes") or [],
                    missing_as_category=bool(entry.get("missing_as_category", True)),
                    passive=bool(entry.get("passive", False)),
                    description=str(entry.get("description", "")),
                ))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"schema variable #{i + 1} is malformed: {exc}") from exc
        return cls(specs)

    @classmethod
    def from_yaml(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as handle:
                payload = yaml.safe_load(handle)
        except FileNotFoundError:
            raise ConfigError(f"schema file not found: {path}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"schema file {path} is not valid YAML: {exc}") from exc
        return cls.from_dict(payload)

    def to_yaml(self, path):
        with open(path, "w", encoding="utf-8") as handle:
            yaml.safe_dump(self.to_dict(), handle, sort_keys=False)


def load_schema(path):
    """Read a schema YAML file. Raises ConfigError on any problem."""
    return Schema.from_yaml(path)
