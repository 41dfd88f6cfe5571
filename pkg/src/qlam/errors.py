"""Exception hierarchy shared across the package.

Every error raised on a user-facing path derives from :class:`QlamError`
so the CLI can map failures to categorized exit messages.
"""


class QlamError(Exception):
    """Base class for all package-specific errors."""

    category = "error"


class ConfigError(QlamError, ValueError):
    """Invalid configuration value (qubit counts, shot settings, sizes)."""

    category = "config"


class ShapeError(QlamError, ValueError):
    """Mismatched array lengths or qubit counts."""

    category = "shape"


class NumericError(QlamError, ArithmeticError):
    """Non-finite value where a finite one is required."""

    category = "numeric"


class ValidationError(QlamError, ValueError):
    """Input data outside its documented domain (e.g. tokens not in [0, 1])."""

    category = "validation"


class ParseError(QlamError, ValueError):
    """Malformed dataset file. ``offset`` is the byte position of the defect."""

    category = "parse"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class DataError(QlamError, ValueError):
    """Dataset files missing or inconsistent with each other."""

    category = "data"
