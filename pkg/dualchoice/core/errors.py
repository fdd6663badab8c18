"""
Exceptions raised by the evaluation services
"""
from typing import Optional


class DualChoiceError(Exception):
    """Base class for every input or solver error of the package"""


class EmptyInput(DualChoiceError):
    """No rows were supplied"""


class DimensionMismatch(DualChoiceError):
    """Atoms, prospects or schemes live in different dimensions"""


class DimensionError(DimensionMismatch):
    """An operation restricted to one dimension received d != 1"""


class NonFiniteValue(DualChoiceError):
    """A coordinate or weight is NaN or infinite"""


class NegativeWeight(DualChoiceError):
    """A probability weight is negative or all weights vanish"""


class SolverFailure(DualChoiceError):
    """The exact transport solver reported an infeasible or failed problem"""


class NonConvergence(DualChoiceError):
    """Sinkhorn iterations did not reach the marginal tolerance"""


class DomainError(DualChoiceError):
    """An argument lies outside the domain of the operation"""


class AlignmentError(DualChoiceError):
    """Aligned samples do not share one sample index"""


class CountMismatch(DualChoiceError):
    """Measures cannot be brought to a common equal-weight sample size"""


class NonAssignment(DualChoiceError):
    """The optimal plan splits mass where a map is required"""


class PreconditionUnmet(DualChoiceError):
    """A hypothesis of a checked proposition does not hold on the input"""


class NegativeWeightFunction(DualChoiceError):
    """A tabulated distortion derivative is negative"""


class MeanMismatch(DualChoiceError):
    """Prospects compared in the concave order have different means"""


class InvalidTransfer(DualChoiceError):
    """A Pigou-Dalton transfer overshoots the midpoint or has the wrong sign"""


class InvalidScheme(DualChoiceError):
    """A weight scheme violates its sign or parameter constraints"""


class DatasetNotFound(DualChoiceError):
    """A dataset path does not exist"""


class ParseError(DualChoiceError):
    """A CSV cell could not be read as a finite number"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column '{column}'" if column else "") + ")"
        super().__init__(f"{message}{location}")
