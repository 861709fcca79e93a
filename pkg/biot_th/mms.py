"""
Manufactured solutions for the Biot benchmarks

A case supplies its exact displacement and pressure together with their
hand-derived derivatives. Body force, source, total pressure, stress,
traction and flux are then formed in closed form by the base class, and the
finite-difference self-test checks every hand-derived expression against
differences of the plain fields.

All evaluation methods take broadcastable arrays x, y, t; vector results carry
a trailing axis of 2, gradients a trailing (2, 2) with [..., i, j] = d_j v_i.
"""

from abc import ABC, abstractmethod
from typing import Callable, Optional

import numpy as np
import structlog
from pydantic import BaseModel, Field

from biot_th.assembly import PhysicalParams
from biot_th.mesh import BoundaryRoles, SegmentTag
from biot_th.shared.errors import ConfigError

logger = structlog.get_logger(__name__)

FD_STEP = 1e-3
SELFTEST_TOLERANCE = 1e-6

Field3 = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _grid(x, y, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(t, dtype=float)
    )


def _vector(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack(np.broadcast_arrays(a, b), axis=-1)


def _matrix(a11, a12, a21, a22) -> np.ndarray:
    return np.stack([_vector(a11, a12), _vector(a21, a22)], axis=-2)


class ManufacturedCase(ABC):
    """
    Exact solution of the quasi-static Biot system with its derived data

    Attributes:
        name: Case identifier used in reports
        params: Material coefficients the data is derived for
        roles: Boundary segment roles
        T: Final time
    """

    def __init__(self, name: str, params: PhysicalParams, roles: BoundaryRoles, T: float = 1.0):
        self.name = name
        self.params = params
        self.roles = roles
        self.T = T

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r}, T={self.T})"

    @abstractmethod
    def u(self, x, y, t) -> np.ndarray:
        """Displacement, shape (..., 2)"""

    @abstractmethod
    def grad_u(self, x, y, t) -> np.ndarray:
        """[..., i, j] = d_j u_i"""

    @abstractmethod
    def hess_u(self, x, y, t) -> np.ndarray:
        """[..., i, j, k] = d_j d_k u_i"""

    @abstractmethod
    def grad_u_t(self, x, y, t) -> np.ndarray:
        """Time derivative of grad_u"""

    @abstractmethod
    def p(self, x, y, t) -> np.ndarray:
        """Fluid pressure"""

    @abstractmethod
    def grad_p(self, x, y, t) -> np.ndarray:
        ...

    @abstractmethod
    def hess_p(self, x, y, t) -> np.ndarray:
        ...

    @abstractmethod
    def p_t(self, x, y, t) -> np.ndarray:
        ...

    # derived fields

    def div_u(self, x, y, t) -> np.ndarray:
        return np.trace(self.grad_u(x, y, t), axis1=-2, axis2=-1)

    def xi(self, x, y, t) -> np.ndarray:
        """Total pressure alpha p - lambda div u"""
        prm = self.params
        return prm.alpha * self.p(x, y, t) - prm.lam * self.div_u(x, y, t)

    def grad_xi(self, x, y, t) -> np.ndarray:
        prm = self.params
        grad_div = np.einsum("...jji->...i", self.hess_u(x, y, t))
        return prm.alpha * self.grad_p(x, y, t) - prm.lam * grad_div

    def xi_t(self, x, y, t) -> np.ndarray:
        prm = self.params
        div_u_t = np.trace(self.grad_u_t(x, y, t), axis1=-2, axis2=-1)
        return prm.alpha * self.p_t(x, y, t) - prm.lam * div_u_t

    def strain(self, x, y, t) -> np.ndarray:
        g = self.grad_u(x, y, t)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    def stress(self, x, y, t) -> np.ndarray:
        """Effective stress 2 mu eps(u) + lambda div(u) I"""
        prm = self.params
        eps = self.strain(x, y, t)
        div = np.trace(eps, axis1=-2, axis2=-1)
        return 2.0 * prm.mu * eps + prm.lam * div[..., None, None] * np.eye(2)

    def body_force(self, x, y, t) -> np.ndarray:
        """f = -mu lap u - (mu + lambda) grad div u + alpha grad p"""
        prm = self.params
        hess = self.hess_u(x, y, t)
        laplacian = np.einsum("...ijj->...i", hess)
        grad_div = np.einsum("...jji->...i", hess)
        return -prm.mu * laplacian - (prm.mu + prm.lam) * grad_div + prm.alpha * self.grad_p(x, y, t)

    def source(self, x, y, t) -> np.ndarray:
        """Q_s = c0 p_t + alpha div u_t - K lap p"""
        prm = self.params
        div_u_t = np.trace(self.grad_u_t(x, y, t), axis1=-2, axis2=-1)
        laplacian = np.trace(self.hess_p(x, y, t), axis1=-2, axis2=-1)
        return prm.c0 * self.p_t(x, y, t) + prm.alpha * div_u_t - prm.K * laplacian

    def traction(self, x, y, t, normal) -> np.ndarray:
        """(sigma(u) - alpha p I) n"""
        total = self.stress(x, y, t) - self.params.alpha * self.p(x, y, t)[..., None, None] * np.eye(2)
        return np.einsum("...ij,...j->...i", total, normal)

    def flux(self, x, y, t, normal) -> np.ndarray:
        """K grad p . n"""
        return self.params.K * np.einsum("...i,...i->...", self.grad_p(x, y, t), normal)


class Example1(ManufacturedCase):
    """Smooth polynomial-exponential solution, Dirichlet data on the whole boundary"""

    def __init__(self):
        super().__init__(
            name="example1",
            params=PhysicalParams.from_lame(mu=1.0, lam=1.0, c0=1.0, alpha=1.0, K=1.0),
            roles=BoundaryRoles.all_dirichlet(),
        )

    def u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return _vector(0.1 * np.exp(t) * (x + y ** 3), 0.1 * t ** 2 * (x ** 3 + y ** 3))

    def grad_u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        et = np.exp(t)
        return _matrix(0.1 * et, 0.3 * et * y ** 2, 0.3 * t ** 2 * x ** 2, 0.3 * t ** 2 * y ** 2)

    def hess_u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        zero = np.zeros_like(x)
        h1 = _matrix(zero, zero, zero, 0.6 * np.exp(t) * y)
        h2 = _matrix(0.6 * t ** 2 * x, zero, zero, 0.6 * t ** 2 * y)
        return np.stack([h1, h2], axis=-3)

    def grad_u_t(self, x, y, t):
        x, y, t = _grid(x, y, t)
        et = np.exp(t)
        return _matrix(0.1 * et, 0.3 * et * y ** 2, 0.6 * t * x ** 2, 0.6 * t * y ** 2)

    def p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return 10.0 * np.exp((x + y) / 10.0) * (1.0 + t ** 3)

    def grad_p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        g = np.exp((x + y) / 10.0) * (1.0 + t ** 3)
        return _vector(g, g)

    def hess_p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        h = 0.1 * np.exp((x + y) / 10.0) * (1.0 + t ** 3)
        return _matrix(h, h, h, h)

    def p_t(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return 30.0 * t ** 2 * np.exp((x + y) / 10.0)


class Example2(ManufacturedCase):
    """
    Trigonometric solution decaying like exp(-t), traction and flux on the
    vertical sides x = 0 and x = 1

    The 1/(mu + lambda) terms keep div u bounded as the Poisson ratio
    approaches 1/2; the trigonometric parts are divergence free.
    """

    def __init__(self, nu: float = 0.3, K: float = 1.0):
        if not 0.0 < nu < 0.5:
            raise ConfigError(f"Poisson ratio must lie in (0, 0.5), got {nu}", keys=["nu"])
        if K <= 0.0:
            raise ConfigError(f"hydraulic conductivity must be positive, got {K}", keys=["K"])
        super().__init__(
            name="example2",
            params=PhysicalParams.from_young(E=1.0, nu=nu, c0=1.0, alpha=1.0, K=K),
            roles=BoundaryRoles.from_neumann(frozenset({SegmentTag.GAMMA1, SegmentTag.GAMMA3})),
        )
        self.nu = nu
        self.c = 1.0 / (self.params.mu + self.params.lam)

    def __repr__(self) -> str:
        return f"Example2(nu={self.nu}, K={self.params.K})"

    def _trig(self, x, y):
        pi = np.pi
        return (
            np.sin(pi * x), np.cos(pi * x), np.sin(pi * y), np.cos(pi * y),
            np.sin(2 * pi * x), np.cos(2 * pi * x), np.sin(2 * pi * y), np.cos(2 * pi * y),
        )

    def u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        sx, _, sy, _, s2x, c2x, s2y, c2y = self._trig(x, y)
        e, c = np.exp(-t), self.c
        return _vector(
            e * (s2y * (c2x - 1.0) + c * sx * sy),
            e * (s2x * (1.0 - c2y) + c * sx * sy),
        )

    def grad_u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        sx, cx, sy, cy, s2x, c2x, s2y, c2y = self._trig(x, y)
        e, c, pi = np.exp(-t), self.c, np.pi
        return e[..., None, None] * _matrix(
            -2 * pi * s2y * s2x + c * pi * cx * sy,
            2 * pi * c2y * (c2x - 1.0) + c * pi * sx * cy,
            2 * pi * c2x * (1.0 - c2y) + c * pi * cx * sy,
            2 * pi * s2x * s2y + c * pi * sx * cy,
        )

    def hess_u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        sx, cx, sy, cy, s2x, c2x, s2y, c2y = self._trig(x, y)
        e, c, pi2 = np.exp(-t), self.c, np.pi ** 2
        h1 = _matrix(
            -4 * pi2 * s2y * c2x - c * pi2 * sx * sy,
            -4 * pi2 * c2y * s2x + c * pi2 * cx * cy,
            -4 * pi2 * c2y * s2x + c * pi2 * cx * cy,
            -4 * pi2 * s2y * (c2x - 1.0) - c * pi2 * sx * sy,
        )
        h2 = _matrix(
            -4 * pi2 * s2x * (1.0 - c2y) - c * pi2 * sx * sy,
            4 * pi2 * c2x * s2y + c * pi2 * cx * cy,
            4 * pi2 * c2x * s2y + c * pi2 * cx * cy,
            4 * pi2 * s2x * c2y - c * pi2 * sx * sy,
        )
        return e[..., None, None, None] * np.stack([h1, h2], axis=-3)

    def grad_u_t(self, x, y, t):
        return -self.grad_u(x, y, t)

    def p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return np.exp(-t) * np.sin(np.pi * x) * np.sin(np.pi * y)

    def grad_p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        sx, cx, sy, cy = self._trig(x, y)[:4]
        return (np.pi * np.exp(-t))[..., None] * _vector(cx * sy, sx * cy)

    def hess_p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        sx, cx, sy, cy = self._trig(x, y)[:4]
        return (np.pi ** 2 * np.exp(-t))[..., None, None] * _matrix(-sx * sy, cx * cy, cx * cy, -sx * sy)

    def p_t(self, x, y, t):
        return -self.p(x, y, t)


class PolynomialCase(ManufacturedCase):
    """
    Stationary u = (x^2 + y, x y), p = x + 2 y

    div u = 3x, so xi is linear and f is constant: the solution lies in the
    discrete spaces for k >= 2, l >= 1.
    """

    def u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return _vector(x ** 2 + y, x * y)

    def grad_u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return _matrix(2 * x, np.ones_like(x), y, x)

    def hess_u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        zero, one = np.zeros_like(x), np.ones_like(x)
        return np.stack([_matrix(2 * one, zero, zero, zero), _matrix(zero, one, one, zero)], axis=-3)

    def grad_u_t(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return np.zeros(x.shape + (2, 2))

    def p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return x + 2.0 * y

    def grad_p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return _vector(np.ones_like(x), 2.0 * np.ones_like(x))

    def hess_p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return np.zeros(x.shape + (2, 2))

    def p_t(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return np.zeros_like(x)


class ZeroCase(ManufacturedCase):
    """Identically zero fields and data"""

    def u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return np.zeros(x.shape + (2,))

    def grad_u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return np.zeros(x.shape + (2, 2))

    def hess_u(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return np.zeros(x.shape + (2, 2, 2))

    grad_u_t = grad_u
    hess_p = grad_u

    def p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return np.zeros_like(x)

    def grad_p(self, x, y, t):
        x, y, t = _grid(x, y, t)
        return np.zeros(x.shape + (2,))

    p_t = p


def example1() -> ManufacturedCase:
    """Smooth benchmark: mu = lambda = c0 = alpha = K = 1, all-Dirichlet, T = 1"""
    return Example1()


def example2(nu: float = 0.3, K: float = 1.0) -> ManufacturedCase:
    """Trigonometric benchmark with E = 1, c0 = 1, alpha = 1 and the given nu, K"""
    return Example2(nu=nu, K=K)


def polynomial_case(
    params: Optional[PhysicalParams] = None,
    roles: Optional[BoundaryRoles] = None,
    T: float = 1.0,
) -> ManufacturedCase:
    return PolynomialCase(
        name="polynomial",
        params=params or PhysicalParams.from_lame(mu=1.0, lam=1.0),
        roles=roles or BoundaryRoles.all_dirichlet(),
        T=T,
    )


def zero_case(
    params: Optional[PhysicalParams] = None,
    roles: Optional[BoundaryRoles] = None,
    T: float = 1.0,
) -> ManufacturedCase:
    return ZeroCase(
        name="zero",
        params=params or PhysicalParams.from_lame(mu=1.0, lam=1.0),
        roles=roles or BoundaryRoles.all_dirichlet(),
        T=T,
    )


def make_case(name: str, nu: float = 0.3, K: float = 1.0) -> ManufacturedCase:
    """
    Built-in case by name.

    Raises:
        ConfigError: For an unknown case name
    """
    if name == "example1":
        return example1()
    if name == "example2":
        return example2(nu=nu, K=K)
    raise ConfigError(f"unknown case {name!r}, expected example1 or example2", keys=["case"])


# finite-difference oracle

def _derivative(func: Field3, axis: int, step: float) -> Field3:
    """Fourth-order central difference of func along x (0), y (1) or t (2)"""

    def derivative(x, y, t):
        args = _grid(x, y, t)

        def shifted(offset: float) -> np.ndarray:
            moved = list(args)
            moved[axis] = args[axis] + offset
            return np.asarray(func(*moved), dtype=float)

        return (8.0 * (shifted(step) - shifted(-step)) - (shifted(2 * step) - shifted(-2 * step))) / (
            12.0 * step
        )

    return derivative


def _gradient(func: Field3, step: float) -> Field3:
    dx, dy = _derivative(func, 0, step), _derivative(func, 1, step)
    return lambda x, y, t: np.stack([dx(x, y, t), dy(x, y, t)], axis=-1)


class CheckResult(BaseModel):
    """Outcome of one closed-form vs oracle comparison"""
    name: str
    passed: bool
    max_residual: float = Field(description="Largest absolute difference over the samples")
    failing_sample: Optional[tuple[float, float, float]] = Field(
        default=None, description="(x, y, t) of the worst violation"
    )


class SelfTestReport(BaseModel):
    """Finite-difference verification of a manufactured case"""
    case: str
    samples: int
    tolerance: float
    step: float
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def max_residual(self) -> float:
        return max((check.max_residual for check in self.checks), default=0.0)

    @property
    def failures(self) -> list[CheckResult]:
        return [check for check in self.checks if not check.passed]


def _compare(name: str, value, reference, samples, tolerance: float) -> CheckResult:
    value = np.asarray(value, dtype=float)
    reference = np.asarray(reference, dtype=float)
    n = samples[0].shape[0]
    residual = np.abs(value - reference).reshape(n, -1)
    scaled = residual / np.maximum(1.0, np.abs(reference).reshape(n, -1))
    worst = np.max(scaled, axis=1)
    passed = bool(np.all(worst <= tolerance))
    failing = None
    if not passed:
        i = int(np.argmax(worst))
        failing = (float(samples[0][i]), float(samples[1][i]), float(samples[2][i]))
    return CheckResult(name=name, passed=passed, max_residual=float(residual.max()), failing_sample=failing)


def derived_sources_selftest(
    case: ManufacturedCase,
    samples: int = 50,
    seed: int = 0,
    tolerance: float = SELFTEST_TOLERANCE,
    step: float = FD_STEP,
) -> SelfTestReport:
    """
    Check the closed-form derivatives and data of a case against finite
    differences of its plain fields u and p.

    The oracle uses the two-field form (-div sigma(u) + alpha grad p and
    d_t(c0 p + alpha div u) - K lap p); the three-field identities are checked
    on the closed forms.

    Args:
        case: Case under test
        samples: Number of random (x, y, t) points in [0, 1]^2 x [0, T]
        seed: Seed of the sample generator
        tolerance: Pass when |value - oracle| <= tolerance * max(1, |oracle|)
        step: Finite-difference step

    Returns:
        SelfTestReport; it does not raise on failure
    """
    prm = case.params
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, samples)
    y = rng.uniform(0.0, 1.0, samples)
    t = rng.uniform(0.0, case.T, samples)
    angle = rng.uniform(0.0, 2.0 * np.pi, samples)
    normal = np.column_stack([np.cos(angle), np.sin(angle)])
    pts = (x, y, t)

    grad_u = _gradient(case.u, step)
    grad_p = _gradient(case.p, step)

    def div_u(x_, y_, t_):
        return np.trace(grad_u(x_, y_, t_), axis1=-2, axis2=-1)

    def stress(x_, y_, t_):
        g = grad_u(x_, y_, t_)
        div = np.trace(g, axis1=-2, axis2=-1)
        return prm.mu * (g + np.swapaxes(g, -1, -2)) + prm.lam * div[..., None, None] * np.eye(2)

    def storage(x_, y_, t_):
        return prm.c0 * case.p(x_, y_, t_) + prm.alpha * div_u(x_, y_, t_)

    def strain(x_, y_, t_):
        g = grad_u(x_, y_, t_)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    def divergence(tensor: Field3) -> Field3:
        grad = _gradient(tensor, step)
        return lambda x_, y_, t_: np.einsum("...ijj->...i", grad(x_, y_, t_))

    laplacian_p = np.trace(_gradient(grad_p, step)(*pts), axis1=-2, axis2=-1)
    oracle_force = -divergence(stress)(*pts) + prm.alpha * grad_p(*pts)
    oracle_source = _derivative(storage, 2, step)(*pts) - prm.K * laplacian_p
    three_field_force = -2.0 * prm.mu * divergence(strain)(*pts) + _gradient(case.xi, step)(*pts)
    three_field_source = (
        (prm.c0 + prm.alpha ** 2 / prm.lam) * case.p_t(*pts)
        - (prm.alpha / prm.lam) * case.xi_t(*pts)
        - prm.K * np.trace(case.hess_p(*pts), axis1=-2, axis2=-1)
    )
    total_stress = stress(*pts) - prm.alpha * case.p(*pts)[..., None, None] * np.eye(2)

    checks = [
        ("grad_u", case.grad_u(*pts), grad_u(*pts)),
        ("hess_u", case.hess_u(*pts), _gradient(case.grad_u, step)(*pts)),
        ("grad_u_t", case.grad_u_t(*pts), _derivative(case.grad_u, 2, step)(*pts)),
        ("grad_p", case.grad_p(*pts), grad_p(*pts)),
        ("hess_p", case.hess_p(*pts), _gradient(case.grad_p, step)(*pts)),
        ("p_t", case.p_t(*pts), _derivative(case.p, 2, step)(*pts)),
        ("xi", case.xi(*pts), prm.alpha * case.p(*pts) - prm.lam * div_u(*pts)),
        ("grad_xi", case.grad_xi(*pts), _gradient(case.xi, step)(*pts)),
        ("xi_t", case.xi_t(*pts), _derivative(case.xi, 2, step)(*pts)),
        ("body_force", case.body_force(*pts), oracle_force),
        ("body_force_three_field", case.body_force(*pts), three_field_force),
        ("source", case.source(*pts), oracle_source),
        ("source_three_field", case.source(*pts), three_field_source),
        ("traction", case.traction(*pts, normal), np.einsum("...ij,...j->...i", total_stress, normal)),
        ("flux", case.flux(*pts, normal), prm.K * np.einsum("...i,...i->...", grad_p(*pts), normal)),
    ]
    report = SelfTestReport(
        case=case.name,
        samples=samples,
        tolerance=tolerance,
        step=step,
        checks=[_compare(name, value, reference, pts, tolerance) for name, value, reference in checks],
    )
    if report.passed:
        logger.info("selftest_passed", case=case.name, max_residual=report.max_residual)
    else:
        logger.warning(
            "selftest_failed",
            case=case.name,
            checks=[check.name for check in report.failures],
            max_residual=report.max_residual,
        )
    return report
