class ValidationError(ValueError):
    """Input data or arguments violate a documented precondition."""


class MissingLabelsError(ValidationError):
    """A labeled operation was requested for a task that carries no labels."""


class FormatError(ValidationError):
    """An on-disk artifact is malformed.

    The message always names the offending file and, where it applies, the
    1-based row.
    """

    def __init__(self, path, message, row=None):
        self.path = str(path)
        self.row = row
        where = self.path if row is None else f"{self.path}:{row}"
        super().__init__(f"{where}: {message}")


class MissingFileError(FormatError):
    """A required input file does not exist."""

    def __init__(self, path, message="file not found"):
        super().__init__(path, message)
