"""Exception hierarchy shared by the library and the command-line tool."""


class PPForestError(Exception):
    """Base class for all package errors."""

    code = "E_PPF"


class DataError(PPForestError, ValueError):
    """Malformed or unusable input data."""

    code = "E_DATA"


class DegenerateNodeError(PPForestError, ArithmeticError):
    """A node's scatter is zero so no projection can be computed."""

    code = "E_DEGENERATE"


class ModelFormatError(PPForestError, ValueError):
    """A serialized model could not be parsed or has an unsupported schema."""

    code = "E_MODEL"


class DataMismatchError(PPForestError, ValueError):
    """Data does not match the model it is used with."""

    code = "E_MISMATCH"


class TreeFitError(PPForestError):
    """Fitting failed inside one tree of an ensemble."""

    code = "E_FIT"

    def __init__(self, tree_index, cause):
        self.tree_index = tree_index
        self.cause = cause
        super().__init__(f"tree {tree_index}: {cause}")
