"""Exception types shared across the package."""


class AmbitypeError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(AmbitypeError):
    """A rule set, layout, or lexicon violates a structural constraint."""


class ParseError(AmbitypeError):
    """An input file could not be parsed."""


class ModelFormatError(AmbitypeError):
    """A serialized model file is malformed or truncated."""


class InputError(AmbitypeError):
    """A runtime input (key press, token) is outside the accepted domain."""
