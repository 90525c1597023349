"""
Error hierarchy.

Every error carries the CLI exit code it maps to, so `main.py` never needs a
lookup table.
"""


class SubmaxError(Exception):
    """Root of all library errors."""

    exit_code = 1
    kind = "error"


class ConfigError(SubmaxError):
    """Invalid experiment config or unknown family name."""

    exit_code = 2
    kind = "config_error"


class PreconditionError(SubmaxError, ValueError):
    """An operation was called outside its precondition."""

    exit_code = 3
    kind = "precondition_error"


class DimensionMismatchError(PreconditionError):
    kind = "dimension_mismatch"


class UnsupportedOperationError(SubmaxError):
    """The constraint family does not offer this operation (LMO-only sets)."""

    kind = "unsupported_operation"


class FeedbackBudgetError(SubmaxError):
    """More than one feedback query was issued in a single round."""

    kind = "feedback_budget"


class EnvironmentExhausted(SubmaxError):
    """The adversary has no objective left for the requested round."""

    kind = "environment_exhausted"
