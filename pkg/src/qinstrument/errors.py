"""Exception types raised across the package."""


class QInstrumentError(Exception):
    """Base class for all package errors."""


class ValidationError(QInstrumentError, ValueError):
    """An object failed one of its named invariants.

    ``reason`` is a short machine-readable tag such as ``"not-PSD"`` or
    ``"unity-violation"``; ``label`` names the offending outcome when there
    is one.
    """

    def __init__(self, reason, message, label=None, defect=None):
        super().__init__(f"{reason}: {message}")
        self.reason = reason
        self.label = label
        self.defect = defect


class DimensionMismatch(ValidationError):
    def __init__(self, message):
        super().__init__("dimension-mismatch", message)


class ParseError(QInstrumentError):
    """Input could not be parsed; ``location`` is ``"line:col"`` or a JSON path."""

    def __init__(self, message, location=None):
        where = f" at {location}" if location else ""
        super().__init__(f"parse-error{where}: {message}")
        self.location = location
