"""Shared exception hierarchy."""


class XractError(Exception):
    """Base class for all errors raised by this package."""
