"""
Sparse assembly of the bilinear forms and load functionals

Element contributions are computed for all cells at once with numpy einsum
over quadrature points, then scattered through coordinate triplets into CSR
matrices (duplicates summed on conversion).

Forms, with u, v vector fields and xi, phi, p, psi scalars:
    a1(u, v)    = 2 mu (eps(u), eps(v))
    b(v, phi)   = (phi, div v)
    a2(xi, phi) = (1 / lambda) (xi, phi)
    c(p, phi)   = (alpha / lambda) (p, phi)
    a3(p, psi)  = (c0 + alpha^2 / lambda) (p, psi)
    d(p, psi)   = K (grad p, grad psi)
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.io
import scipy.sparse as sp
import structlog
from pydantic import BaseModel, ConfigDict, Field

from biot_th.elements import (
    MAX_EXACTNESS,
    QuadratureRule,
    edge_quadrature,
    eval_edge_basis,
    triangle_quadrature,
)
from biot_th.mesh import BoundaryRole, BoundaryRoles, boundary_edges_with_role
from biot_th.spaces import FemSpace, MixedSpaces, edge_nodes

logger = structlog.get_logger(__name__)

# source(x, y, t) evaluated on (F, nq) point arrays
VolumeData = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
# data(x, y, t, normal) evaluated on (B, nq) point arrays, normal (B, nq, 2)
BoundaryData = Callable[[np.ndarray, np.ndarray, float, np.ndarray], np.ndarray]


class PhysicalParams(BaseModel):
    """
    Material coefficients in consistent nondimensional units

    Build with from_young (E, nu) or from_lame (mu, lambda); the other pair is
    derived so that all seven coefficients are always available.
    """
    model_config = ConfigDict(frozen=True)

    E: float = Field(gt=0, description="Young's modulus")
    nu: float = Field(gt=0, lt=0.5, description="Poisson ratio")
    mu: float = Field(gt=0, description="Lame shear modulus")
    lam: float = Field(gt=0, description="Lame first parameter")
    c0: float = Field(ge=0, description="Specific storage")
    alpha: float = Field(gt=0, description="Biot-Willis constant")
    K: float = Field(gt=0, description="Hydraulic conductivity")

    @classmethod
    def from_young(
        cls, E: float, nu: float, c0: float = 1.0, alpha: float = 1.0, K: float = 1.0
    ) -> "PhysicalParams":
        """Lame constants from Young's modulus and Poisson ratio"""
        if not 0.0 < nu < 0.5:
            raise ValueError(f"Poisson ratio must lie in (0, 0.5), got {nu}")
        mu = E / (2.0 * (1.0 + nu))
        lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
        return cls(E=E, nu=nu, mu=mu, lam=lam, c0=c0, alpha=alpha, K=K)

    @classmethod
    def from_lame(
        cls, mu: float, lam: float, c0: float = 1.0, alpha: float = 1.0, K: float = 1.0
    ) -> "PhysicalParams":
        """Young's modulus and Poisson ratio from the Lame constants"""
        nu = lam / (2.0 * (lam + mu))
        E = mu * (3.0 * lam + 2.0 * mu) / (lam + mu)
        return cls(E=E, nu=nu, mu=mu, lam=lam, c0=c0, alpha=alpha, K=K)


@dataclass(frozen=True, eq=False)
class CellValues:
    """
    Basis data of one space at the quadrature points of every cell

    Attributes:
        dx: (F, nq) quadrature weights times |det J|
        points: (F, nq, 2) physical quadrature points
        phi: (nq, nloc) basis values (identical on every cell)
        grad: (F, nq, nloc, 2) physical basis gradients
    """
    dx: np.ndarray
    points: np.ndarray
    phi: np.ndarray
    grad: np.ndarray


def cell_values(space: FemSpace, rule: QuadratureRule) -> CellValues:
    """Map the reference basis of space onto every cell of its mesh"""
    corners = space.mesh.corners()
    origin = corners[:, 0]
    jac = np.stack([corners[:, 1] - origin, corners[:, 2] - origin], axis=-1)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    inv = np.linalg.inv(jac)

    phi, dphi = space.basis.evaluate(rule.points)
    return CellValues(
        dx=np.abs(det)[:, None] * rule.weights[None, :],
        points=origin[:, None, :] + np.einsum("cij,qj->cqi", jac, rule.points),
        phi=phi,
        grad=np.einsum("qik,ckj->cqij", dphi, inv),
    )


def _scatter(local: np.ndarray, rows: np.ndarray, cols: np.ndarray, shape) -> sp.csr_matrix:
    r = np.broadcast_to(rows[:, :, None], local.shape)
    c = np.broadcast_to(cols[:, None, :], local.shape)
    matrix = sp.coo_matrix((local.ravel(), (r.ravel(), c.ravel())), shape=shape).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix


def _matrix_rule(*spaces: FemSpace) -> QuadratureRule:
    return triangle_quadrature(min(2 * max(s.degree for s in spaces), MAX_EXACTNESS))


def load_exactness(space: FemSpace) -> int:
    """Quadrature exactness used for non-polynomial data on space"""
    return min(2 * space.degree + 4, MAX_EXACTNESS)


def mass_matrix(rows: FemSpace, cols: FemSpace, coef: float = 1.0) -> sp.csr_matrix:
    """coef * (phi_j, psi_i) for scalar spaces, rows indexed by the test space"""
    rule = _matrix_rule(rows, cols)
    a = cell_values(rows, rule)
    b = cell_values(cols, rule)
    local = coef * np.einsum("cq,qi,qj->cij", a.dx, a.phi, b.phi)
    return _scatter(local, rows.cell_dofs, cols.cell_dofs, (rows.total_dofs, cols.total_dofs))


def stiffness_matrix(space: FemSpace, coef: float = 1.0) -> sp.csr_matrix:
    """coef * (grad phi_j, grad phi_i) for a scalar space"""
    v = cell_values(space, _matrix_rule(space))
    local = coef * np.einsum("cq,cqik,cqjk->cij", v.dx, v.grad, v.grad)
    return _scatter(local, space.cell_dofs, space.cell_dofs, (space.total_dofs,) * 2)


def elasticity_matrix(space: FemSpace, mu: float) -> sp.csr_matrix:
    """2 mu (eps(N_j), eps(N_i)) for a vector space"""
    v = cell_values(space, _matrix_rule(space))
    # eps(phi_i e_a) : eps(phi_j e_b) = (delta_ab grad phi_i . grad phi_j + d_b phi_i d_a phi_j) / 2
    cross = np.einsum("cq,cqib,cqja->ciajb", v.dx, v.grad, v.grad)
    dot = np.einsum("cq,cqik,cqjk->cij", v.dx, v.grad, v.grad)
    cross += dot[:, :, None, :, None] * np.eye(2)[None, None, :, None, :]
    nloc = v.phi.shape[1]
    local = mu * cross.reshape(len(cross), 2 * nloc, 2 * nloc)
    return _scatter(local, space.cell_dofs, space.cell_dofs, (space.total_dofs,) * 2)


def divergence_matrix(scalar: FemSpace, vector: FemSpace) -> sp.csr_matrix:
    """(psi_m, div N_i): rows from the scalar space, columns from the vector space"""
    rule = _matrix_rule(scalar, vector)
    s = cell_values(scalar, rule)
    v = cell_values(vector, rule)
    local = np.einsum("cq,qm,cqia->cmia", s.dx, s.phi, v.grad)
    local = local.reshape(len(local), s.phi.shape[1], -1)
    return _scatter(local, scalar.cell_dofs, vector.cell_dofs, (scalar.total_dofs, vector.total_dofs))


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Assembled forms; C has rows in W_h and columns in M_h"""
    A1: sp.csr_matrix
    B: sp.csr_matrix
    A2: sp.csr_matrix
    C: sp.csr_matrix
    A3: sp.csr_matrix
    D: sp.csr_matrix


def assemble_forms(spaces: MixedSpaces, params: PhysicalParams) -> OperatorSet:
    """
    Assemble the six forms on (V_h, W_h, M_h).

    Args:
        spaces: Taylor-Hood pair plus pressure space, all on one mesh
        params: Material coefficients

    Returns:
        OperatorSet of CSR matrices
    """
    V, W, M = spaces.V, spaces.W, spaces.M
    lam = params.lam
    operators = OperatorSet(
        A1=elasticity_matrix(V, params.mu),
        B=divergence_matrix(W, V),
        A2=mass_matrix(W, W, 1.0 / lam),
        C=mass_matrix(W, M, params.alpha / lam),
        A3=mass_matrix(M, M, params.c0 + params.alpha ** 2 / lam),
        D=stiffness_matrix(M, params.K),
    )
    logger.debug(
        "forms_assembled",
        cells=spaces.mesh.num_cells,
        dofs=spaces.sizes,
        nnz_A1=operators.A1.nnz,
    )
    return operators


def _scatter_vector(local: np.ndarray, dofs: np.ndarray, size: int) -> np.ndarray:
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=size)


def assemble_load(
    space: FemSpace,
    source: VolumeData,
    t: float,
    exactness: Optional[int] = None,
    values: Optional[CellValues] = None,
) -> np.ndarray:
    """
    (source(t), v_i) for every basis function of space.

    Args:
        space: Test space
        source: Vectorised source(x, y, t); vector spaces expect a trailing axis of 2
        t: Time level
        exactness: Quadrature exactness (defaults to load_exactness(space))
        values: Precomputed cell values for the chosen rule
    """
    if values is None:
        rule = triangle_quadrature(exactness if exactness is not None else load_exactness(space))
        values = cell_values(space, rule)
    x, y = values.points[..., 0], values.points[..., 1]
    data = np.asarray(source(x, y, t), dtype=float)
    if space.components == 1:
        local = np.einsum("cq,qi,cq->ci", values.dx, values.phi, np.broadcast_to(data, x.shape))
    else:
        data = np.broadcast_to(data, x.shape + (2,))
        local = np.einsum("cq,qi,cqa->cia", values.dx, values.phi, data)
    return _scatter_vector(local, space.cell_dofs, space.total_dofs)


def assemble_gradient_load(
    space: FemSpace,
    flux: VolumeData,
    t: float,
    exactness: Optional[int] = None,
    values: Optional[CellValues] = None,
) -> np.ndarray:
    """
    (F(t), grad v_i) for a vector field F on scalar spaces or a tensor field on
    vector spaces (F[a, k] paired with d_k of component a).
    """
    if values is None:
        rule = triangle_quadrature(exactness if exactness is not None else load_exactness(space))
        values = cell_values(space, rule)
    x, y = values.points[..., 0], values.points[..., 1]
    data = np.asarray(flux(x, y, t), dtype=float)
    if space.components == 1:
        local = np.einsum("cq,cqik,cqk->ci", values.dx, values.grad, data)
    else:
        local = np.einsum("cq,cqik,cqak->cia", values.dx, values.grad, data)
    return _scatter_vector(local, space.cell_dofs, space.total_dofs)


def assemble_boundary_load(
    space: FemSpace,
    roles: BoundaryRoles,
    which: BoundaryRole,
    data: BoundaryData,
    t: float,
    exactness: Optional[int] = None,
) -> np.ndarray:
    """
    <data(t), v_i> over the boundary edges of the selected role.

    The trace of a P_k Lagrange space on an edge is the 1D Lagrange basis on
    the edge's k+1 equispaced nodes, so the integral is done edge by edge.
    """
    result = np.zeros(space.total_dofs)
    mesh = space.mesh
    edges = boundary_edges_with_role(mesh, roles, which)
    if not len(edges):
        return result

    rule = edge_quadrature(exactness if exactness is not None else 2 * space.degree + 4)
    start = mesh.vertices[edges[:, 0]]
    end = mesh.vertices[edges[:, 1]]
    length = np.linalg.norm(end - start, axis=1)
    points = start[:, None, :] + rule.points[None, :, None] * (end - start)[:, None, :]
    normals = np.broadcast_to(mesh.outward_normals(edges)[:, None, :], points.shape)
    values = np.asarray(data(points[..., 0], points[..., 1], t, normals), dtype=float)

    phi = eval_edge_basis(space.degree, rule.points)
    ds = length[:, None] * rule.weights[None, :]
    nodes = edge_nodes(space, edges)
    if space.components == 1:
        local = np.einsum("bq,qi,bq->bi", ds, phi, np.broadcast_to(values, ds.shape))
        dofs = nodes
    else:
        values = np.broadcast_to(values, ds.shape + (2,))
        local = np.einsum("bq,qi,bqa->bia", ds, phi, values)
        dofs = nodes[:, :, None] * 2 + np.arange(2)
    return _scatter_vector(local, dofs, space.total_dofs)


class ConstrainedSystem:
    """
    Symmetric Dirichlet elimination of one matrix

    Constrained rows and columns are replaced by the identity; the removed
    columns are kept so right-hand sides can be lifted for new boundary values.
    """

    def __init__(self, matrix: sp.spmatrix, dofs: np.ndarray):
        matrix = sp.csr_matrix(matrix)
        n = matrix.shape[0]
        self.dofs = np.asarray(dofs, dtype=np.int64)
        keep = np.ones(n)
        keep[self.dofs] = 0.0
        free = sp.diags(keep)
        constrained = (free @ matrix @ free + sp.diags(1.0 - keep)).tocsr()
        constrained.eliminate_zeros()
        constrained.sort_indices()
        self.matrix = constrained
        self.columns = matrix.tocsc()[:, self.dofs].tocsr()

    def lift(self, rhs: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Right-hand side for prescribed values on the constrained dofs"""
        lifted = np.asarray(rhs, dtype=float) - self.columns @ values
        lifted[self.dofs] = values
        return lifted


def apply_dirichlet(
    matrix: sp.spmatrix,
    rhs: np.ndarray,
    dofs: np.ndarray,
    values: np.ndarray,
) -> tuple[sp.csr_matrix, np.ndarray]:
    """
    Eliminate constrained dofs symmetrically.

    Returns:
        (constrained matrix, lifted right-hand side)
    """
    system = ConstrainedSystem(matrix, dofs)
    return system.matrix, system.lift(rhs, np.asarray(values, dtype=float))


def dump_matrix(path: str | Path, matrix: sp.spmatrix, comment: str = "") -> Path:
    """Write a sparse matrix in MatrixMarket coordinate format"""
    path = Path(path)
    if path.suffix != ".mtx":
        path = path.with_name(path.name + ".mtx")
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment)
    logger.info("matrix_written", path=str(path), shape=matrix.shape, nnz=matrix.nnz)
    return path
