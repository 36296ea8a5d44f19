"""Exception hierarchy shared by all modules."""

import numpy as np


class TwinMetricError(Exception):
    """Base class for every error raised by this package."""


class ExprSyntaxError(TwinMetricError):
    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {text}\n  {pointer}")


class UnknownSymbolError(TwinMetricError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown symbol {name!r}")


class EvaluationDomainError(TwinMetricError):
    """Division by zero, sqrt/log outside their domain, or a pole."""

    def __init__(self, message: str, subexpr: str = "", point=None):
        self.subexpr = subexpr
        self.point = point
        where = f" in {subexpr!r}" if subexpr else ""
        at = f" at point {tuple(point)}" if point is not None else ""
        super().__init__(f"{message}{where}{at}")


class NonAnalyticError(TwinMetricError):
    """An expression cannot be evaluated in holomorphic (complex) mode."""


class PreconditionError(TwinMetricError):
    """An input fails an identity the operation requires; carries the residual."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        suffix = f" (residual {residual:.3e})" if residual is not None else ""
        super().__init__(message + suffix)


class NotAKPairError(PreconditionError):
    pass


class ParityError(PreconditionError):
    """Negative epsilon requested in odd dimension."""


class AlmostTangentError(TwinMetricError):
    """epsilon = 0: the almost-tangent case, which is not constructed."""


class SingularMatrixError(TwinMetricError):
    pass


class DegeneracyError(TwinMetricError):
    """Numerical rank loss during a canonical-form construction."""


class DegenerateMetricError(TwinMetricError):
    def __init__(self, det_value: float, point=None):
        self.det_value = det_value
        self.point = point
        at = f" at {tuple(np.round(point, 12))}" if point is not None else ""
        super().__init__(f"degenerate metric{at}: det = {det_value:.3e}")


class ChartMismatchError(TwinMetricError):
    pass


class CompatibilityError(TwinMetricError):
    pass


class HypothesisError(TwinMetricError):
    """A theorem's hypothesis does not hold on the given input."""


class DegenerateRootError(TwinMetricError):
    pass


class ConfigError(TwinMetricError):
    pass

