"""Exception hierarchy shared by all modules."""

from __future__ import annotations

from .expr.core import ConstructionError
from .expr.zerotest import PoleExhaustion


class VarinvError(Exception):
    """Base class of the library's domain errors."""


class OrderOverflow(VarinvError):
    """A derivative would produce a multi-index longer than ``max_order``."""


class AlreadyExtended(VarinvError):
    pass


class OutOfContext(VarinvError):
    """A variable is not legal in the given jet context."""


class NotFirstOrder(VarinvError):
    pass


class NonlinearSecondOrder(VarinvError):
    pass


class AsymmetryUnrepairable(VarinvError):
    pass


class NotNullLagrangian(VarinvError):
    pass


class NotClosedFormIntegrable(VarinvError):
    pass


class MalformedResidual(VarinvError):
    pass


class WrongShape(VarinvError):
    pass


class MissingG(VarinvError):
    pass


class IncompatibleHessian(VarinvError):
    pass


class PotentialVerificationFailed(VarinvError):
    pass


class AnsatzFailed(VarinvError):
    pass


class ConditionsFailed(VarinvError):
    """Solvability conditions do not hold; ``report`` holds the evaluated conditions."""

    def __init__(self, report, message: str | None = None):
        self.report = report
        failing = [c.id for c in report.failing()] if report is not None else []
        super().__init__(message or ("conditions failed: " + ", ".join(failing)))

    @property
    def failing_ids(self) -> list:
        return [c.id for c in self.report.failing()] if self.report is not None else []


__all__ = [
    "VarinvError", "OrderOverflow", "AlreadyExtended", "OutOfContext", "NotFirstOrder",
    "NonlinearSecondOrder", "AsymmetryUnrepairable", "NotNullLagrangian",
    "NotClosedFormIntegrable", "MalformedResidual", "WrongShape", "MissingG",
    "IncompatibleHessian", "PotentialVerificationFailed", "AnsatzFailed", "ConditionsFailed",
    "ConstructionError", "PoleExhaustion",
]
