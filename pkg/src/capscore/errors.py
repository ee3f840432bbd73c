"""Shared exception types, kept separate so the CLI can map them to exit codes."""


class FormatError(ValueError):
    """A file does not parse or a record does not match its schema."""


class IntegrityError(ValueError):
    """Parsed data violates a cross-record constraint (missing ids, duplicates...)."""
