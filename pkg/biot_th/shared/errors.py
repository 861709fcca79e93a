"""
Exception hierarchy for the Biot solver
"""

from typing import Optional


class BiotError(Exception):
    """Base class for all solver errors"""


class ConfigError(BiotError, ValueError):
    """Invalid run or environment configuration"""

    def __init__(self, message: str, keys: Optional[list[str]] = None):
        super().__init__(message)
        self.keys = keys or []


class MeshError(BiotError, ValueError):
    """Invalid mesh request"""


class QuadratureError(BiotError, ValueError):
    """Quadrature request beyond the implemented table"""


class SingularMatrixError(BiotError):
    """Factorization hit a zero pivot"""

    def __init__(self, message: str, pivot: Optional[int] = None):
        super().__init__(message)
        self.pivot = pivot


class SolverConvergenceError(BiotError):
    """Solve did not reach the residual contract"""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class UndefinedOrderError(BiotError, ValueError):
    """Convergence order requested for non-positive errors"""


class SelfTestError(BiotError):
    """Self-test failed; report holds the full result listing"""

    def __init__(self, message: str, report: str = ""):
        super().__init__(message)
        self.report = report
