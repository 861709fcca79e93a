"""
Global degrees of freedom for the continuous Lagrange spaces

On the structured n x n mesh the Lagrange nodes of a degree-k space are
exactly the points (a / kn, b / kn) of a uniform lattice, so a node's global
number is read off its coordinates. Shared edge and vertex nodes therefore
get the same number from every cell that touches them.

Vector spaces interleave components per node: dof = node * 2 + component.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import structlog

from biot_th.elements import ReferenceBasis, reference_basis
from biot_th.mesh import BoundaryRole, BoundaryRoles, Mesh, boundary_edges_with_role

logger = structlog.get_logger(__name__)

# sampler(x, y, t) -> values at the given points, shape x.shape (+ (2,) for vectors)
BoundarySampler = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


def _lattice_index(points: np.ndarray, lattice: int) -> np.ndarray:
    ij = np.rint(np.asarray(points) * lattice).astype(np.int64)
    return ij[..., 1] * (lattice + 1) + ij[..., 0]


@dataclass(frozen=True, eq=False)
class FemSpace:
    """
    Continuous P_degree space on a mesh, scalar or 2-vector

    Attributes:
        mesh: Underlying triangulation
        degree: Polynomial degree (1..3)
        components: 1 for scalar, 2 for vector fields
        node_coords: (num_nodes, 2) global Lagrange node coordinates
        cell_nodes: (F, nloc) global node of each local node
    """
    mesh: Mesh
    degree: int
    components: int
    node_coords: np.ndarray
    cell_nodes: np.ndarray

    @property
    def basis(self) -> ReferenceBasis:
        return reference_basis(self.degree)

    @property
    def lattice(self) -> int:
        """Lattice intervals per side (degree * n)"""
        return self.degree * self.mesh.n

    @property
    def num_nodes(self) -> int:
        return len(self.node_coords)

    @property
    def total_dofs(self) -> int:
        return self.components * self.num_nodes

    @cached_property
    def cell_dofs(self) -> np.ndarray:
        """(F, nloc * components) global dofs in local interleaved order"""
        c = self.components
        dofs = self.cell_nodes[:, :, None] * c + np.arange(c)
        return dofs.reshape(len(self.cell_nodes), -1)

    def node_index(self, points: np.ndarray) -> np.ndarray:
        """Global node numbers of lattice points given by coordinates"""
        return _lattice_index(points, self.lattice)

    def node_dofs(self, nodes: np.ndarray) -> np.ndarray:
        """All component dofs of the given nodes, node-major"""
        c = self.components
        return (np.asarray(nodes)[:, None] * c + np.arange(c)).ravel()


def build_space(mesh: Mesh, degree: int, components: int = 1) -> FemSpace:
    """
    Conforming global numbering of the P_degree space on mesh.

    Args:
        mesh: Structured unit-square mesh
        degree: 1, 2 or 3
        components: 1 (scalar) or 2 (vector)

    Returns:
        FemSpace with components * (degree * n + 1)^2 dofs
    """
    if components not in (1, 2):
        raise ValueError(f"components must be 1 or 2, got {components}")
    basis = reference_basis(degree)
    lattice = degree * mesh.n

    corners = mesh.corners()
    origin = corners[:, 0]
    jac = np.stack([corners[:, 1] - origin, corners[:, 2] - origin], axis=-1)
    physical = origin[:, None, :] + np.einsum("cij,lj->cli", jac, basis.node_coords)

    ticks = np.arange(lattice + 1) / lattice
    gx, gy = np.meshgrid(ticks, ticks)
    node_coords = np.column_stack([gx.ravel(), gy.ravel()])

    space = FemSpace(
        mesh=mesh,
        degree=degree,
        components=components,
        node_coords=node_coords,
        cell_nodes=_lattice_index(physical, lattice),
    )
    logger.debug("space_built", degree=degree, components=components, dofs=space.total_dofs)
    return space


def edge_nodes(space: FemSpace, edges: np.ndarray) -> np.ndarray:
    """
    Global nodes along mesh edges.

    Args:
        space: Space whose nodes are wanted
        edges: (B, 2) vertex-index pairs

    Returns:
        (B, degree + 1) node numbers ordered from the first to the second vertex
    """
    vertices = space.mesh.vertices
    start = vertices[edges[:, 0]]
    end = vertices[edges[:, 1]]
    s = np.linspace(0.0, 1.0, space.degree + 1)
    points = start[:, None, :] + s[None, :, None] * (end - start)[:, None, :]
    return space.node_index(points)


@dataclass(frozen=True, eq=False)
class DirichletSet:
    """
    Constrained dofs of one space with the sampler of their prescribed values

    Attributes:
        space: Constrained space
        nodes: Sorted constrained global nodes
        dofs: All component dofs of those nodes, node-major
        sampler: Pure function of (x, y, t) giving the boundary field
    """
    space: FemSpace
    nodes: np.ndarray
    dofs: np.ndarray
    sampler: Optional[BoundarySampler] = None

    def values(self, t: float) -> np.ndarray:
        """Prescribed values at the constrained dofs at time t (zero without a sampler)"""
        if self.sampler is None:
            return np.zeros(len(self.dofs))
        xy = self.space.node_coords[self.nodes]
        field = np.asarray(self.sampler(xy[:, 0], xy[:, 1], t), dtype=float)
        return np.broadcast_to(field, (len(self.nodes),) + field.shape[1:]).reshape(-1).copy()


def dirichlet_dofs(
    space: FemSpace,
    roles: BoundaryRoles,
    which: BoundaryRole,
    sampler: Optional[BoundarySampler] = None,
) -> DirichletSet:
    """
    Dofs whose nodes lie on boundary edges of the selected role.

    A corner node is constrained as soon as one incident edge is selected.
    """
    edges = boundary_edges_with_role(space.mesh, roles, which)
    if len(edges):
        nodes = np.unique(edge_nodes(space, edges))
    else:
        nodes = np.empty(0, dtype=np.int64)
    return DirichletSet(space=space, nodes=nodes, dofs=space.node_dofs(nodes), sampler=sampler)


def interpolate(space: FemSpace, field: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
    """
    Nodal interpolant of field(x, y) as a coefficient vector.

    Vector fields must return shape (num_nodes, 2).
    """
    x, y = space.node_coords[:, 0], space.node_coords[:, 1]
    values = np.asarray(field(x, y), dtype=float)
    shape = (space.num_nodes,) if space.components == 1 else (space.num_nodes, space.components)
    return np.broadcast_to(values, shape).reshape(-1).copy()


@dataclass(frozen=True, eq=False)
class MixedSpaces:
    """The triple (V_h, W_h, M_h) with its block layout in the monolithic vector"""
    V: FemSpace
    W: FemSpace
    M: FemSpace

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.V.total_dofs, self.W.total_dofs, self.M.total_dofs

    @property
    def offsets(self) -> tuple[int, int, int]:
        nv, nw, _ = self.sizes
        return 0, nv, nv + nw

    @property
    def total_dofs(self) -> int:
        return sum(self.sizes)

    @property
    def mesh(self) -> Mesh:
        return self.V.mesh

    def split(self, vector: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split a monolithic vector into (u, xi, p) blocks"""
        nv, nw, _ = self.sizes
        return vector[:nv], vector[nv:nv + nw], vector[nv + nw:]


def build_mixed_spaces(mesh: Mesh, k: int, l: int) -> MixedSpaces:
    """Taylor-Hood pair (P_k^2, P_{k-1}) for (u, xi) plus P_l for p"""
    return MixedSpaces(
        V=build_space(mesh, k, components=2),
        W=build_space(mesh, k - 1, components=1),
        M=build_space(mesh, l, components=1),
    )
