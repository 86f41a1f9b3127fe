"""Exception types raised by the higt package."""


class HigtError(Exception):
    """Base class for all higt errors."""


class ConstantRow(HigtError):
    """A row of the input or output matrix has (numerically) zero variance."""

    def __init__(self, matrix: str, row: int, variance: float):
        self.matrix = matrix
        self.row = row
        self.variance = variance
        super().__init__(
            f"row {row} of {matrix} has variance {variance:.3e} (< 1e-12); "
            "constant rows cannot be standardized"
        )


class DimensionMismatch(HigtError):
    """Matrix or group dimensions are inconsistent."""


class EmptyGroups(HigtError):
    """A group structure with no input or no output groups was supplied."""


class NotLeaf(HigtError):
    """A leaf-only operation was applied to a non-leaf node."""


class NotInternal(HigtError):
    """An internal-node-only operation was applied to a non-internal node."""


class NonFiniteObjective(HigtError):
    """The solver objective became NaN or Inf (step-size or data problem)."""


class InfeasibleConfig(HigtError):
    """A simulation configuration cannot be realized."""
