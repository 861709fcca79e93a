"""
Final-time error norms and convergence studies
"""

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Literal, Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, Field

from biot_th.assembly import cell_values
from biot_th.biot_schemes import Method, SchemeConfig, State, run
from biot_th.elements import MAX_EXACTNESS, triangle_quadrature
from biot_th.mesh import unit_square_mesh
from biot_th.mms import ManufacturedCase
from biot_th.shared.errors import UndefinedOrderError
from biot_th.spaces import FemSpace, MixedSpaces

logger = structlog.get_logger(__name__)

NORMS = ("u_H1", "xi_L2", "p_L2", "p_H1")
TIME_TOLERANCE = 1e-12


class ErrorRecord(BaseModel):
    """Errors of one run at the final time"""
    u_H1: float = Field(ge=0, description="Full H1 norm of the displacement error")
    xi_L2: float = Field(ge=0, description="L2 norm of the total pressure error")
    p_L2: float = Field(ge=0, description="L2 norm of the pressure error")
    p_H1: float = Field(ge=0, description="Full H1 norm of the pressure error")


def field_errors(
    space: FemSpace,
    coeffs: np.ndarray,
    value: Callable,
    gradient: Optional[Callable],
    t: float,
    exactness: Optional[int] = None,
) -> tuple[float, float]:
    """
    L2 error and H1-seminorm error of a discrete field against an exact one.

    Args:
        space: Space of the coefficients
        coeffs: Coefficient vector
        value: Exact field value(x, y, t)
        gradient: Exact gradient(x, y, t), or None to skip the seminorm
        t: Time level
        exactness: Quadrature exactness (default min(2 degree + 4, 10))

    Returns:
        (L2 error, H1 seminorm error); the seminorm is 0.0 without gradient
    """
    if exactness is None:
        exactness = min(2 * space.degree + 4, MAX_EXACTNESS)
    cv = cell_values(space, triangle_quadrature(exactness))
    x, y = cv.points[..., 0], cv.points[..., 1]
    local = np.asarray(coeffs)[space.cell_dofs]

    if space.components == 1:
        discrete = np.einsum("qi,ci->cq", cv.phi, local)
        diff = np.asarray(value(x, y, t)) - discrete
        l2 = np.einsum("cq,cq->", cv.dx, diff ** 2)
    else:
        local = local.reshape(len(local), -1, space.components)
        discrete = np.einsum("qi,cia->cqa", cv.phi, local)
        diff = np.asarray(value(x, y, t)) - discrete
        l2 = np.einsum("cq,cqa->", cv.dx, diff ** 2)

    semi = 0.0
    if gradient is not None:
        if space.components == 1:
            discrete_grad = np.einsum("cqik,ci->cqk", cv.grad, local)
            gdiff = np.asarray(gradient(x, y, t)) - discrete_grad
            semi = np.einsum("cq,cqk->", cv.dx, gdiff ** 2)
        else:
            discrete_grad = np.einsum("cqik,cia->cqak", cv.grad, local)
            gdiff = np.asarray(gradient(x, y, t)) - discrete_grad
            semi = np.einsum("cq,cqak->", cv.dx, gdiff ** 2)
    return math.sqrt(max(float(l2), 0.0)), math.sqrt(max(float(semi), 0.0))


def compute_errors(
    state: State,
    case: ManufacturedCase,
    spaces: MixedSpaces,
    exactness: Optional[int] = None,
) -> ErrorRecord:
    """
    Errors of state against the exact solution at the case's final time.

    Raises:
        ValueError: If state.t is not case.T
    """
    if abs(state.t - case.T) > TIME_TOLERANCE * max(1.0, case.T):
        raise ValueError(f"state is at t={state.t}, errors are measured at T={case.T}")
    t = state.t
    u_l2, u_semi = field_errors(spaces.V, state.u, case.u, case.grad_u, t, exactness)
    xi_l2, _ = field_errors(spaces.W, state.xi, case.xi, None, t, exactness)
    p_l2, p_semi = field_errors(spaces.M, state.p, case.p, case.grad_p, t, exactness)
    return ErrorRecord(
        u_H1=math.hypot(u_l2, u_semi),
        xi_L2=xi_l2,
        p_L2=p_l2,
        p_H1=math.hypot(p_l2, p_semi),
    )


def order(e_coarse: float, e_fine: float, ratio: float) -> float:
    """
    Observed convergence order log(e_coarse / e_fine) / log(ratio).

    Raises:
        UndefinedOrderError: If either error is not positive
        ValueError: If ratio <= 1
    """
    if e_coarse <= 0.0 or e_fine <= 0.0:
        raise UndefinedOrderError(f"order undefined for errors {e_coarse!r}, {e_fine!r}")
    if ratio <= 1.0:
        raise ValueError(f"refinement ratio must exceed 1, got {ratio}")
    return math.log(e_coarse / e_fine) / math.log(ratio)


class StudyRow(BaseModel):
    """One run of a study"""
    n: int
    h: float
    dt: float
    errors: ErrorRecord


class ConvergenceReport(BaseModel):
    """
    Rows of a study with the observed orders between consecutive rows

    orders[i] compares rows[i] and rows[i + 1]; an entry is None when the
    order is undefined (an error of exactly zero).
    """
    case: str
    method: Method
    k: int
    l: int
    refinement: Literal["time", "space"]
    rows: list[StudyRow]
    orders: list[dict[str, Optional[float]]] = Field(default_factory=list)

    @classmethod
    def from_rows(
        cls,
        rows: list[StudyRow],
        refinement: Literal["time", "space"],
        case: str,
        method: Method,
        k: int,
        l: int,
    ) -> "ConvergenceReport":
        orders = []
        for coarse, fine in zip(rows, rows[1:]):
            ratio = coarse.dt / fine.dt if refinement == "time" else coarse.h / fine.h
            entry: dict[str, Optional[float]] = {}
            for norm in NORMS:
                try:
                    entry[norm] = order(getattr(coarse.errors, norm), getattr(fine.errors, norm), ratio)
                except UndefinedOrderError:
                    logger.warning("order_undefined", norm=norm, h=fine.h, dt=fine.dt)
                    entry[norm] = None
            orders.append(entry)
        return cls(case=case, method=method, k=k, l=l, refinement=refinement, rows=rows, orders=orders)

    def order_of(self, norm: str, index: int = -1) -> Optional[float]:
        """Order of one norm between two rows (the last pair by default)"""
        return self.orders[index][norm]


def solve_case(case: ManufacturedCase, config: SchemeConfig, n: int) -> StudyRow:
    """Run one configuration on the n x n mesh and measure its errors"""
    mesh = unit_square_mesh(n)
    result = run(case, config, mesh)
    errors = compute_errors(result.final, case, result.spaces)
    logger.info("study_row_done", case=case.name, n=n, dt=config.dt, **errors.model_dump())
    return StudyRow(n=n, h=mesh.h, dt=config.dt, errors=errors)


def _solve_rows(case: ManufacturedCase, configs: list[SchemeConfig], ns: list[int], workers: int) -> list[StudyRow]:
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
            # map yields in submission order
            return list(pool.map(solve_case, [case] * len(configs), configs, ns))
    return [solve_case(case, config, n) for config, n in zip(configs, ns)]


def temporal_study(
    case: ManufacturedCase,
    method: Method,
    n: int,
    k: int,
    l: int,
    dts: Sequence[float],
    workers: int = 1,
) -> ConvergenceReport:
    """
    Refine dt on a fixed mesh; orders are taken with respect to the dt ratio.

    Raises:
        ValueError: If dts is empty or not decreasing by a constant factor
    """
    dts = [float(dt) for dt in dts]
    if not dts:
        raise ValueError("temporal study needs at least one time step")
    ratios = [a / b for a, b in zip(dts, dts[1:])]
    if any(r <= 1.0 for r in ratios) or any(abs(r - ratios[0]) > 1e-9 * ratios[0] for r in ratios):
        raise ValueError(f"time steps must decrease by a constant factor, got {dts}")

    configs = [SchemeConfig(method=method, dt=dt, T=case.T, k=k, l=l) for dt in dts]
    logger.info("temporal_study_started", case=case.name, method=int(method), n=n, rows=len(dts))
    rows = _solve_rows(case, configs, [n] * len(dts), workers)
    return ConvergenceReport.from_rows(rows, "time", case.name, Method(method), k, l)


def spatial_study(
    case: ManufacturedCase,
    method: Method,
    pairs: Sequence[tuple[int, float]],
    k: int,
    l: int,
    workers: int = 1,
) -> ConvergenceReport:
    """
    Refine the mesh with coupled time steps; pairs are (n, dt) with n doubling
    between rows and orders taken with respect to the h ratio.

    Raises:
        ValueError: If pairs is empty or n does not double between rows
    """
    pairs = [(int(n), float(dt)) for n, dt in pairs]
    if not pairs:
        raise ValueError("spatial study needs at least one (n, dt) pair")
    for (n0, _), (n1, _) in zip(pairs, pairs[1:]):
        if n1 != 2 * n0:
            raise ValueError(f"mesh subdivisions must double between rows, got {n0} then {n1}")

    configs = [SchemeConfig(method=method, dt=dt, T=case.T, k=k, l=l) for _, dt in pairs]
    logger.info("spatial_study_started", case=case.name, method=int(method), rows=len(pairs))
    rows = _solve_rows(case, configs, [n for n, _ in pairs], workers)
    return ConvergenceReport.from_rows(rows, "space", case.name, Method(method), k, l)
