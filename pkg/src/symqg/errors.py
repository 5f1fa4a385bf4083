"""Shared exception types."""


class FormatError(Exception):
    """A persistent artifact (index file, fvecs/ivecs file) is malformed."""
