"""Exception hierarchy shared by the library and the command line tool.

The command line tool maps these onto exit codes: data problems exit
with 1, configuration problems with 2.
"""


class CatpcaError(Exception):
    """Base class for all errors raised by this package."""


class DataError(CatpcaError):
    """The input data violates a documented requirement.

    Examples: a cell that does not parse, a category code missing from
    the schema, a column the schema promises but the file lacks.
    """


class DegenerateColumnError(DataError):
    """A column is constant (or effectively so) and cannot be scaled."""

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"column {column!r} is constant and cannot be standardized")


class ConfigError(CatpcaError):
    """A schema or run-configuration file is missing, malformed, or out of range."""
