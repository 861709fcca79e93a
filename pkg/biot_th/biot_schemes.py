"""
Fully coupled time stepping for the three-field Biot system

Unknowns per step are (u, xi, p) in V_h x W_h x M_h. The block system is
stored in sign-symmetric form, with rows 2 and 3 negated and row 3 scaled
by dt:

    [ A1   -B^T    0              ] [u ]   [ F     ]
    [ -B   -A2     C              ] [xi] = [ 0     ]
    [ 0     C^T  -(A3 + theta dt D)] [p ]   [ -r3   ]

theta = 1 gives backward Euler (Method 1); theta = 1/2 applies Crank-Nicolson
to the flow equation only (Method 2). The matrix depends on neither n nor t,
so it is eliminated and factorized once per run.
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np
import scipy.sparse as sp
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from biot_th.assembly import (
    ConstrainedSystem,
    OperatorSet,
    PhysicalParams,
    assemble_boundary_load,
    assemble_forms,
    assemble_gradient_load,
    assemble_load,
    cell_values,
    load_exactness,
)
from biot_th.elements import triangle_quadrature
from biot_th.linsolve import Factorization, factorize
from biot_th.mesh import BoundaryRole, BoundaryRoles, Mesh
from biot_th.mms import ManufacturedCase
from biot_th.spaces import DirichletSet, MixedSpaces, build_mixed_spaces, dirichlet_dofs

logger = structlog.get_logger(__name__)

STEP_TOLERANCE = 1e-12


class Method(IntEnum):
    """Time discretization of the flow equation"""
    BACKWARD_EULER = 1
    CRANK_NICOLSON = 2

    @property
    def theta(self) -> float:
        return 1.0 if self is Method.BACKWARD_EULER else 0.5


class SchemeConfig(BaseModel):
    """
    Discretization choices of one run

    Attributes:
        method: Method 1 (backward Euler) or Method 2 (Crank-Nicolson flow)
        dt: Time step
        T: Final time, an integer multiple of dt
        k: Displacement degree (total pressure uses k - 1)
        l: Fluid pressure degree
    """
    model_config = ConfigDict(frozen=True)

    method: Method = Method.BACKWARD_EULER
    dt: float = Field(gt=0)
    T: float = Field(default=1.0, gt=0)
    k: int = Field(default=2, ge=2, le=3)
    l: int = Field(default=1, ge=1, le=2)

    @model_validator(mode="after")
    def _check_steps(self) -> "SchemeConfig":
        ratio = self.T / self.dt
        if abs(ratio - round(ratio)) > STEP_TOLERANCE * max(1.0, ratio) or round(ratio) < 1:
            raise ValueError(f"T / dt = {ratio!r} is not a positive integer")
        return self

    @property
    def steps(self) -> int:
        """Number of time steps, T / dt"""
        return int(round(self.T / self.dt))


@dataclass
class State:
    """Coefficient vectors of (u_h, xi_h, p_h) at time t"""
    u: np.ndarray
    xi: np.ndarray
    p: np.ndarray
    t: float

    def copy(self) -> "State":
        return State(u=self.u.copy(), xi=self.xi.copy(), p=self.p.copy(), t=self.t)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.xi, self.p])


@dataclass(frozen=True, eq=False)
class Loads:
    """
    Load vectors at one time level

    Attributes:
        F: (f, v) + <h, v>_Gamma_t on V_h
        G: (Q_s, psi) + <g2, psi>_Gamma_f on M_h
        t: Time level
    """
    F: np.ndarray
    G: np.ndarray
    t: float


class LoadAssembler:
    """Time-dependent right-hand sides of a case, with cell data computed once"""

    def __init__(self, case: ManufacturedCase, spaces: MixedSpaces, roles: BoundaryRoles):
        self.case = case
        self.spaces = spaces
        self.roles = roles
        self._values_v = cell_values(spaces.V, triangle_quadrature(load_exactness(spaces.V)))
        self._values_m = cell_values(spaces.M, triangle_quadrature(load_exactness(spaces.M)))

    def __call__(self, t: float) -> Loads:
        case, V, M = self.case, self.spaces.V, self.spaces.M
        F = assemble_load(V, case.body_force, t, values=self._values_v)
        F += assemble_boundary_load(V, self.roles, BoundaryRole.TRACTION, case.traction, t)
        G = assemble_load(M, case.source, t, values=self._values_m)
        G += assemble_boundary_load(M, self.roles, BoundaryRole.FLUX, case.flux, t)
        return Loads(F=F, G=G, t=t)


def assemble_loads(case: ManufacturedCase, spaces: MixedSpaces, roles: BoundaryRoles, t: float) -> Loads:
    """One-off load assembly (see LoadAssembler for repeated time levels)"""
    return LoadAssembler(case, spaces, roles)(t)


def boundary_conditions(
    case: ManufacturedCase, spaces: MixedSpaces, roles: BoundaryRoles
) -> tuple[DirichletSet, DirichletSet]:
    """Displacement and pressure Dirichlet sets, sampled from the exact solution"""
    return (
        dirichlet_dofs(spaces.V, roles, BoundaryRole.DIRICHLET_DISPLACEMENT, sampler=case.u),
        dirichlet_dofs(spaces.M, roles, BoundaryRole.DIRICHLET_PRESSURE, sampler=case.p),
    )


class CoupledSystem:
    """
    Eliminated and factorized block matrix of one (mesh, dt, method) triple

    Attributes:
        matrix: Sign-symmetric block matrix before Dirichlet elimination
        constrained: Its symmetric Dirichlet elimination
        factorization: LU factors of the eliminated matrix, built on first use
        factorizations: How many times the eliminated matrix was factorized
    """

    def __init__(
        self,
        spaces: MixedSpaces,
        operators: OperatorSet,
        config: SchemeConfig,
        u_bc: DirichletSet,
        p_bc: DirichletSet,
    ):
        self.spaces = spaces
        self.operators = operators
        self.config = config
        self.u_bc = u_bc
        self.p_bc = p_bc
        self.theta = config.method.theta

        ops = operators
        self.flow_matrix = (ops.A3 + self.theta * config.dt * ops.D).tocsr()
        self.matrix = sp.bmat(
            [
                [ops.A1, -ops.B.T, None],
                [-ops.B, -ops.A2, ops.C],
                [None, ops.C.T, -self.flow_matrix],
            ],
            format="csr",
        )
        offset_m = spaces.offsets[2]
        self.dofs = np.concatenate([u_bc.dofs, p_bc.dofs + offset_m])
        self.constrained = ConstrainedSystem(self.matrix, self.dofs)
        self.factorizations = 0
        self._factorization: Optional[Factorization] = None

    @property
    def factorization(self) -> Factorization:
        """LU factors of the eliminated matrix, computed on first use and then reused"""
        if self._factorization is None:
            self._factorization = factorize(self.constrained.matrix)
            self.factorizations += 1
            logger.info(
                "coupled_system_factorized",
                method=int(self.config.method),
                dt=self.config.dt,
                size=self.matrix.shape[0],
                constrained=len(self.dofs),
            )
        return self._factorization

    def check_symmetry(self) -> float:
        """Relative asymmetry max|M - M^T| / max|M| of the block matrix"""
        diff = self.matrix - self.matrix.T
        scale = abs(self.matrix).max()
        return float(abs(diff).max() / scale) if scale else 0.0

    def boundary_values(self, t: float) -> np.ndarray:
        return np.concatenate([self.u_bc.values(t), self.p_bc.values(t)])

    def flow_rhs(self, state: State, loads_next: Loads, loads_now: Optional[Loads]) -> np.ndarray:
        """Row 3 right-hand side r3 (before negation)"""
        ops, dt, theta = self.operators, self.config.dt, self.theta
        rhs = ops.A3 @ state.p - ops.C.T @ state.xi
        if theta == 1.0:
            return rhs + dt * loads_next.G
        if loads_now is None:
            raise ValueError("Crank-Nicolson step needs the loads at the current time level")
        return rhs + dt * (theta * loads_next.G + (1.0 - theta) * loads_now.G) - (1.0 - theta) * dt * (
            ops.D @ state.p
        )

    def step(self, state: State, loads_next: Loads, loads_now: Optional[Loads] = None) -> State:
        """Advance state by one step to loads_next.t"""
        dt = self.config.dt
        if abs(loads_next.t - (state.t + dt)) > 1e-9 * max(1.0, abs(loads_next.t)):
            raise ValueError(f"loads at t={loads_next.t} do not follow state at t={state.t} with dt={dt}")
        nw = self.spaces.sizes[1]
        rhs = np.concatenate([loads_next.F, np.zeros(nw), -self.flow_rhs(state, loads_next, loads_now)])
        rhs = self.constrained.lift(rhs, self.boundary_values(loads_next.t))
        u, xi, p = self.spaces.split(self.factorization.solve(rhs))
        return State(u=u, xi=xi, p=p, t=loads_next.t)


def step_method1(state: State, system: CoupledSystem, loads_next: Loads) -> State:
    """Backward Euler step for all three equations"""
    if system.config.method is not Method.BACKWARD_EULER:
        raise ValueError("system was assembled for Method 2")
    return system.step(state, loads_next)


def step_method2(state: State, system: CoupledSystem, loads_next: Loads, loads_now: Loads) -> State:
    """Backward Euler on the elasticity rows, Crank-Nicolson on the flow row"""
    if system.config.method is not Method.CRANK_NICOLSON:
        raise ValueError("system was assembled for Method 1")
    return system.step(state, loads_next, loads_now)


def stokes_projection(
    case: ManufacturedCase,
    spaces: MixedSpaces,
    params: PhysicalParams,
    roles: BoundaryRoles,
    t: float,
    operators: Optional[OperatorSet] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Discrete pair (R_u u, R_xi xi) of the exact fields at time t.

        a1(R_u u, v) - b(v, R_xi xi) = a1(u, v) - b(v, xi)
        b(R_u u, phi)                = b(u, phi)

    R_u u takes the nodal values of u on Gamma_d. Without a traction boundary
    R_xi xi is fixed by an extra multiplier row enforcing its exact mean.
    """
    operators = operators or assemble_forms(spaces, params)
    V, W = spaces.V, spaces.W
    nv, nw, _ = spaces.sizes

    def elastic_flux(x, y, t_):
        # 2 mu eps(u) - xi I, paired with grad v
        return 2.0 * params.mu * case.strain(x, y, t_) - case.xi(x, y, t_)[..., None, None] * np.eye(2)

    rhs_u = assemble_gradient_load(V, elastic_flux, t)
    rhs_xi = -assemble_load(W, case.div_u, t)
    blocks = [[operators.A1, -operators.B.T], [-operators.B, None]]
    rhs = [rhs_u, rhs_xi]

    pure_dirichlet = not roles.traction
    if pure_dirichlet:
        mean = assemble_load(W, lambda x, y, t_: np.ones_like(x), t).reshape(-1, 1)
        blocks = [
            [operators.A1, -operators.B.T, None],
            [-operators.B, None, sp.csr_matrix(mean)],
            [None, sp.csr_matrix(mean.T), None],
        ]
        rhs.append(np.array([assemble_load(W, case.xi, t).sum()]))
    matrix = sp.bmat(blocks, format="csr", dtype=float)

    u_bc = dirichlet_dofs(V, roles, BoundaryRole.DIRICHLET_DISPLACEMENT, sampler=case.u)
    system = ConstrainedSystem(matrix, u_bc.dofs)
    solution = factorize(system.matrix).solve(system.lift(np.concatenate(rhs), u_bc.values(t)))
    logger.debug("stokes_projection", t=t, pure_dirichlet=pure_dirichlet)
    return solution[:nv], solution[nv:nv + nw]


def elliptic_projection(
    case: ManufacturedCase,
    spaces: MixedSpaces,
    params: PhysicalParams,
    roles: BoundaryRoles,
    t: float,
    operators: Optional[OperatorSet] = None,
) -> np.ndarray:
    """
    R_p p with d(R_p p, psi) = d(p, psi) for psi vanishing on Gamma_p and the
    nodal values of p on Gamma_p.
    """
    M = spaces.M
    stiffness = operators.D if operators is not None else assemble_forms(spaces, params).D
    p_bc = dirichlet_dofs(M, roles, BoundaryRole.DIRICHLET_PRESSURE, sampler=case.p)
    system = ConstrainedSystem(stiffness, p_bc.dofs)
    rhs = assemble_gradient_load(M, lambda x, y, t_: params.K * case.grad_p(x, y, t_), t)
    logger.debug("elliptic_projection", t=t)
    return factorize(system.matrix).solve(system.lift(rhs, p_bc.values(t)))


def initial_state(
    case: ManufacturedCase,
    spaces: MixedSpaces,
    params: PhysicalParams,
    roles: BoundaryRoles,
    config: Optional[SchemeConfig] = None,
    operators: Optional[OperatorSet] = None,
) -> State:
    """(R_u u0, R_xi xi0, R_p p0) at t = 0"""
    if config is not None and (spaces.V.degree, spaces.M.degree) != (config.k, config.l):
        raise ValueError(
            f"spaces have degrees (k={spaces.V.degree}, l={spaces.M.degree}), "
            f"config asks for (k={config.k}, l={config.l})"
        )
    operators = operators or assemble_forms(spaces, params)
    u, xi = stokes_projection(case, spaces, params, roles, 0.0, operators=operators)
    p = elliptic_projection(case, spaces, params, roles, 0.0, operators=operators)
    return State(u=u, xi=xi, p=p, t=0.0)


@dataclass
class RunResult:
    """
    Outcome of one time-stepping run

    Attributes:
        final: State at T
        spaces: Spaces the coefficients live in
        steps: Number of steps taken
        factorizations: Factorizations of the coupled matrix
        solves: Solves against that factorization
        history: Every state from t = 0 when requested
    """
    final: State
    spaces: MixedSpaces
    steps: int
    factorizations: int
    solves: int
    history: list[State] = field(default_factory=list)


def run(
    case: ManufacturedCase,
    config: SchemeConfig,
    mesh: Mesh,
    params: Optional[PhysicalParams] = None,
    roles: Optional[BoundaryRoles] = None,
    keep_history: bool = False,
) -> RunResult:
    """
    Integrate from t = 0 to config.T with the selected method.

    Args:
        case: Exact solution supplying initial, boundary and volume data
        config: Method, dt, T and degrees
        mesh: Spatial mesh
        params: Coefficients of the discrete operators (default: the case's)
        roles: Boundary roles (default: the case's)
        keep_history: Keep every intermediate State

    Returns:
        RunResult with the state at T
    """
    params = params or case.params
    roles = roles or case.roles
    if config.l != config.k - 1:
        logger.warning("nonstandard_degree_pairing", k=config.k, l=config.l)

    spaces = build_mixed_spaces(mesh, config.k, config.l)
    operators = assemble_forms(spaces, params)
    u_bc, p_bc = boundary_conditions(case, spaces, roles)
    system = CoupledSystem(spaces, operators, config, u_bc, p_bc)
    loads_at = LoadAssembler(case, spaces, roles)

    state = initial_state(case, spaces, params, roles, config, operators=operators)
    history = [state.copy()] if keep_history else []
    loads_now = loads_at(0.0) if config.method is Method.CRANK_NICOLSON else None
    logger.info(
        "run_started",
        case=case.name,
        method=int(config.method),
        n=mesh.n,
        dt=config.dt,
        steps=config.steps,
        dofs=spaces.total_dofs,
    )
    for n in range(config.steps):
        loads_next = loads_at((n + 1) * config.dt)
        if config.method is Method.BACKWARD_EULER:
            state = step_method1(state, system, loads_next)
        else:
            state = step_method2(state, system, loads_next, loads_now)
            loads_now = loads_next
        if keep_history:
            history.append(state.copy())
        logger.debug("step_done", step=n + 1, t=state.t)

    logger.info("run_finished", case=case.name, steps=config.steps, solves=system.factorization.solve_count)
    return RunResult(
        final=state,
        spaces=spaces,
        steps=config.steps,
        factorizations=system.factorizations,
        solves=system.factorization.solve_count,
        history=history,
    )
