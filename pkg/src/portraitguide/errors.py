class ValidationError(ValueError):
    """Input violates a documented precondition."""


class DocumentError(ValidationError):
    """A persisted document is malformed. Carries the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class FormatError(ValueError):
    """A binary artifact has a bad magic string, version, or is truncated."""


class DegenerateGeometryError(ValueError):
    """Not enough non-collinear points to form a polygon."""
