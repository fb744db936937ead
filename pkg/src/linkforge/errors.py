"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: config 2, data 3, budget 4,
anything else 5.
"""


class LinkforgeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(LinkforgeError):
    """Invalid pipeline configuration or match-config file."""


class SchemaError(LinkforgeError):
    """Input file does not match the declared column mapping."""


class DataError(LinkforgeError):
    """Input data violates a hard invariant (e.g. duplicate ids)."""


class InsufficientDataError(DataError):
    """Too few observations for the requested statistical fit."""


class UndefinedScoreError(LinkforgeError):
    """Pair has no present field with positive weight; no score exists."""


class BudgetExceededError(LinkforgeError):
    """Candidate-pair budget exceeded on the unblocked stage."""


class SelectionError(LinkforgeError):
    """No tuning configuration has defined metrics to select from."""
