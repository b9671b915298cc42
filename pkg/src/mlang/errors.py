"""Runtime error taxonomy shared by the engine, interpreter, and server.

Every error carries a `kind` tag used in rendered stack traces and in
protocol responses."""

from __future__ import annotations


class MError(Exception):
    kind = "Error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class MTypeError(MError):
    kind = "TypeError"


class MNameError(MError):
    kind = "NameError"


class ArityError(MError):
    kind = "ArityError"


class ShapeMismatch(MError):
    kind = "ShapeMismatch"


class IndexOutOfRange(MError):
    kind = "IndexOutOfRange"


class NotScalar(MError):
    kind = "NotScalar"


class TapeConsumed(MError):
    kind = "TapeConsumed"


class MissingGrad(MError):
    kind = "MissingGrad"


class IoError(MError):
    kind = "IoError"


class SchemaError(MError):
    kind = "SchemaError"


class FormatError(MError):
    kind = "FormatError"


class UnknownModel(MError):
    kind = "UnknownModel"


class UnknownVersion(MError):
    kind = "UnknownVersion"


class UnsupportedScheme(MError):
    kind = "UnsupportedScheme"


class ColumnMismatch(MError):
    kind = "ColumnMismatch"


class UnknownMetric(MError):
    kind = "UnknownMetric"


class EmptySpace(MError):
    kind = "EmptySpace"


class ImportError_(MError):
    kind = "ImportError"
