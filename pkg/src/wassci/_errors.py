"""Exception hierarchy shared by every module of the package."""


class WassCIError(Exception):
    """Base class for all errors raised by :mod:`wassci`."""


class SingularMatrix(WassCIError, ArithmeticError):
    pass


class SingularBasis(SingularMatrix):
    """The columns of the constraint matrix indexed by a basis are not independent."""


class NumericalFailure(WassCIError, ArithmeticError):
    pass


class InfeasibleProblem(NumericalFailure):
    """A transportation problem reported as infeasible (never expected for valid input)."""


class DegenerateSolution(WassCIError):
    """The optimal basis has a (near-)zero basic variable and degeneracy was not allowed."""

    def __init__(self, message, index=None, value=None):
        super().__init__(message)
        self.index = index
        self.value = value


class DegenerateDirection(WassCIError, ArithmeticError):
    """The direction of interest has (near-)zero variance under the noise covariance."""


class EmptyRegion(WassCIError):
    """A truncation interval does not contain the observed statistic."""


class NumericalUnderflow(WassCIError, ArithmeticError):
    pass


class RootNotBracketed(WassCIError):
    def __init__(self, message, bracket=None, values=None):
        super().__init__(message)
        self.bracket = bracket
        self.values = values


class ParseError(WassCIError, ValueError):
    def __init__(self, message, path=None, line=None, column=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
                if column is not None:
                    loc += f":{column}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line
        self.column = column


class DimensionMismatch(WassCIError, ValueError):
    pass
