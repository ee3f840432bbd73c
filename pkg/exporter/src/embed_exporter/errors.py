class ExportError(Exception):
    """Input data or encoder output violates the export contract."""
