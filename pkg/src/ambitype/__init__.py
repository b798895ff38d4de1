"""Ambiguous-keyboard text input and word-variant disambiguation engine."""

__version__ = "0.1.0"
