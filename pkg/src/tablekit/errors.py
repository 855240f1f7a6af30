"""Exception types shared across the package."""


class TableKitError(Exception):
    """Base class for all tablekit errors."""


class DegenerateBoxPairError(TableKitError):
    """Raised when an operation needs at least one box with positive area."""


class GridError(TableKitError):
    """Grid inference failed (empty input, cell outside the table region, ...)."""


class GridConflictError(GridError):
    """Two detected cells landed on the same lattice slot under strict policy."""


class ShapeMismatchError(TableKitError):
    """Positional comparison requested for grids with different shapes."""


class MatchSizeError(TableKitError):
    """Prediction set smaller than the ground-truth set."""


class DocumentError(TableKitError):
    """A detection/truth/config file failed to parse or validate.

    Carries the offending path plus enough context (line number or field
    path) to locate the problem.
    """

    def __init__(self, path, detail):
        self.path = str(path)
        self.detail = detail
        super().__init__(f"{self.path}: {detail}")
