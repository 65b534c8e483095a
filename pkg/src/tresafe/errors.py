"""Exception types shared across the toolkit.

Plain argument mistakes (bad fraction, too few rows, ...) raise the builtin
ValueError; everything that a caller may want to catch selectively gets a
class below.
"""


class TresafeError(Exception):
    """Base class for all toolkit-specific errors."""


class SchemaError(TresafeError):
    """A dictionary or rules file is structurally invalid."""


class DataError(TresafeError):
    """Dataset content violates an encoding, label or class contract."""


class ShapeError(DataError):
    """A matrix has the wrong width for the model or dictionary."""


class SpecError(TresafeError):
    """A model spec carries unknown keys or unusable parameter values."""


class ProvenanceError(TresafeError):
    """Supplied data does not match the recorded fit fingerprint."""


class LeakageError(TresafeError):
    """Member and non-member sides share individuals."""


class UndefinedMetricError(TresafeError):
    """The requested metric has no defined value for these inputs."""


class DegenerateAttributeError(TresafeError):
    """The attacked attribute has no usable value range."""


class FormatError(TresafeError):
    """A file is not in the canonical format the release layer accepts."""
