"""
Structured triangulations of the unit square

Builds the n x n mesh of Omega = [0, 1]^2 used by every benchmark, with the
four sides tagged so that boundary roles (Dirichlet, traction, flux) can be
assigned by configuration rather than by meshing.
"""

from dataclasses import dataclass
from enum import Enum, IntEnum
from functools import cached_property
from pathlib import Path

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, model_validator

from biot_th.shared.errors import MeshError

logger = structlog.get_logger(__name__)


class SegmentTag(IntEnum):
    """Boundary segments of the unit square"""
    GAMMA1 = 1  # right,  x = 1
    GAMMA2 = 2  # bottom, y = 0
    GAMMA3 = 3  # left,   x = 0
    GAMMA4 = 4  # top,    y = 1


ALL_TAGS = frozenset(SegmentTag)


class BoundaryRole(str, Enum):
    """Which role set of BoundaryRoles to select"""
    DIRICHLET_DISPLACEMENT = "dirichlet_displacement"
    TRACTION = "traction"
    DIRICHLET_PRESSURE = "dirichlet_pressure"
    FLUX = "flux"


class BoundaryRoles(BaseModel):
    """
    Assignment of boundary segments to essential and natural conditions

    Gamma_d / Gamma_t partition the boundary for the displacement and
    Gamma_p / Gamma_f partition it for the fluid pressure.
    """
    model_config = ConfigDict(frozen=True)

    dirichlet_displacement: frozenset[SegmentTag]
    traction: frozenset[SegmentTag] = frozenset()
    dirichlet_pressure: frozenset[SegmentTag]
    flux: frozenset[SegmentTag] = frozenset()

    @model_validator(mode="after")
    def _check_partition(self) -> "BoundaryRoles":
        for essential, natural, label in (
            (self.dirichlet_displacement, self.traction, "displacement"),
            (self.dirichlet_pressure, self.flux, "pressure"),
        ):
            if not essential:
                raise ValueError(f"{label} Dirichlet boundary must be nonempty")
            if essential & natural:
                raise ValueError(f"{label} roles overlap on {sorted(essential & natural)}")
            if essential | natural != ALL_TAGS:
                raise ValueError(f"{label} roles do not cover the whole boundary")
        return self

    def tags_for(self, which: BoundaryRole) -> frozenset[SegmentTag]:
        """Tags of the selected role set"""
        return getattr(self, BoundaryRole(which).value)

    @classmethod
    def all_dirichlet(cls) -> "BoundaryRoles":
        """Dirichlet data for both fields on the whole boundary"""
        return cls(dirichlet_displacement=ALL_TAGS, dirichlet_pressure=ALL_TAGS)

    @classmethod
    def from_neumann(cls, neumann: frozenset[SegmentTag]) -> "BoundaryRoles":
        """Same traction and flux segments for both fields, Dirichlet elsewhere"""
        neumann = frozenset(neumann)
        return cls(
            dirichlet_displacement=ALL_TAGS - neumann,
            traction=neumann,
            dirichlet_pressure=ALL_TAGS - neumann,
            flux=neumann,
        )


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Triangulation of the unit square

    Attributes:
        vertices: (V, 2) vertex coordinates
        triangles: (F, 3) counter-clockwise vertex indices
        boundary_edges: (B, 2) vertex indices, boundary traversed counter-clockwise
        boundary_tags: (B,) SegmentTag value of each boundary edge
        n: subdivisions per side
    """
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    n: int

    @property
    def h(self) -> float:
        """Mesh size 1/n"""
        return 1.0 / self.n

    @property
    def num_cells(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """(F, 3, 2) vertex coordinates per triangle"""
        return self.vertices[self.triangles]

    def areas(self) -> np.ndarray:
        """Signed triangle areas"""
        v = self.corners()
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def _edges(self) -> np.ndarray:
        pairs = np.concatenate(
            [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]
        )
        return np.unique(np.sort(pairs, axis=1), axis=0)

    def edges(self) -> np.ndarray:
        """(E, 2) unique undirected edges, smaller index first"""
        return self._edges

    def outward_normals(self, edges: np.ndarray | None = None) -> np.ndarray:
        """Unit outward normals of boundary edges (all boundary edges by default)"""
        edges = self.boundary_edges if edges is None else edges
        d = self.vertices[edges[:, 1]] - self.vertices[edges[:, 0]]
        length = np.linalg.norm(d, axis=1, keepdims=True)
        return np.column_stack([d[:, 1], -d[:, 0]]) / length


def unit_square_mesh(n: int) -> Mesh:
    """
    Uniform n x n grid of squares, each cut by its bottom-left to top-right diagonal.

    Args:
        n: Subdivisions per side (h = 1/n)

    Returns:
        Mesh with 2n^2 triangles, (n+1)^2 vertices and 4n tagged boundary edges

    Raises:
        MeshError: If n < 1
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise MeshError(f"mesh subdivisions must be a positive integer, got {n!r}")
    n = int(n)

    coords = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords, coords)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([v00, v10, v11])
    triangles[1::2] = np.column_stack([v00, v11, v01])

    s = np.arange(n)
    bottom = np.column_stack([vid(s, 0), vid(s + 1, 0)])
    right = np.column_stack([vid(n, s), vid(n, s + 1)])
    top = np.column_stack([vid(s + 1, n), vid(s, n)])
    left = np.column_stack([vid(0, s + 1), vid(0, s)])
    boundary_edges = np.concatenate([bottom, right, top, left]).astype(np.int64)
    boundary_tags = np.concatenate([
        np.full(n, int(SegmentTag.GAMMA2)),
        np.full(n, int(SegmentTag.GAMMA1)),
        np.full(n, int(SegmentTag.GAMMA4)),
        np.full(n, int(SegmentTag.GAMMA3)),
    ]).astype(np.int64)

    logger.debug("mesh_built", n=n, triangles=len(triangles), vertices=len(vertices))
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=boundary_edges,
        boundary_tags=boundary_tags,
        n=n,
    )


def boundary_edges_with_role(
    mesh: Mesh,
    roles: BoundaryRoles,
    which: BoundaryRole,
) -> np.ndarray:
    """
    Boundary edges whose tag belongs to the selected role set.

    Returns:
        (B_sel, 2) vertex-index pairs, in the mesh's boundary order
    """
    tags = np.array(sorted(int(tag) for tag in roles.tags_for(which)), dtype=np.int64)
    mask = np.isin(mesh.boundary_tags, tags)
    return mesh.boundary_edges[mask]


def dump_mesh(mesh: Mesh, path: str | Path) -> Path:
    """Write vertices ("x y"), triangles ("i j k") and boundary edges ("i j tag") as text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
        for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
            fh.write(f"{a} {b} {int(tag)}\n")
    logger.info("mesh_written", path=str(path), n=mesh.n)
    return path
