"""Exception types shared across the package."""


class PolarFaceError(Exception):
    """Base class for errors raised by this package."""


class DomainError(PolarFaceError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(PolarFaceError, ValueError):
    """A configuration value or combination of values is invalid."""


class ParseError(PolarFaceError, ValueError):
    """A file could not be parsed; the message carries position context."""


class DatasetError(PolarFaceError, ValueError):
    """A dataset is structurally unusable (empty, duplicate ids, ...)."""
