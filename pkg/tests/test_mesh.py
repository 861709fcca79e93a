"""
Tests for the unit-square mesh and boundary roles
"""

import numpy as np
import pytest
from pydantic import ValidationError

from biot_th.mesh import (
    ALL_TAGS,
    BoundaryRole,
    BoundaryRoles,
    SegmentTag,
    boundary_edges_with_role,
    dump_mesh,
    unit_square_mesh,
)
from biot_th.shared.errors import MeshError

EXAMPLE2_ROLES = BoundaryRoles.from_neumann(frozenset({SegmentTag.GAMMA1, SegmentTag.GAMMA3}))


@pytest.mark.parametrize("n, vertices, triangles, edges", [(1, 4, 2, 4), (2, 9, 8, 8), (16, 289, 512, 64)])
def test_counts(n, vertices, triangles, edges):
    mesh = unit_square_mesh(n)
    assert len(mesh.vertices) == vertices
    assert mesh.num_cells == triangles
    assert len(mesh.boundary_edges) == edges
    assert mesh.h == pytest.approx(1.0 / n, abs=0)


@pytest.mark.parametrize("n", [0, -3])
def test_rejects_empty_mesh(n):
    with pytest.raises(MeshError):
        unit_square_mesh(n)


@pytest.mark.parametrize("n", [1, 2, 4, 8, 16])
def test_positive_areas_sum_to_one(n):
    areas = unit_square_mesh(n).areas()
    assert np.all(areas > 0)
    assert areas.sum() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("n", [1, 3, 8])
def test_euler_relation(n):
    mesh = unit_square_mesh(n)
    assert len(mesh.vertices) - len(mesh.edges()) + mesh.num_cells == 1


def test_refinement_halves_h():
    assert unit_square_mesh(8).h == unit_square_mesh(4).h / 2


def test_diagonal_direction():
    mesh = unit_square_mesh(1)
    corners = mesh.corners()
    # both triangles contain the (0,0)-(1,1) diagonal
    for tri in corners:
        rows = {tuple(p) for p in tri}
        assert (0.0, 0.0) in rows and (1.0, 1.0) in rows


def test_interior_edges_have_opposite_orientation():
    mesh = unit_square_mesh(3)
    directed = np.concatenate(
        [mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]], mesh.triangles[:, [2, 0]]]
    )
    seen = {tuple(e) for e in directed}
    assert len(seen) == len(directed)
    boundary = {tuple(sorted(e)) for e in mesh.boundary_edges}
    for a, b in directed:
        if tuple(sorted((a, b))) not in boundary:
            assert (b, a) in seen


def test_boundary_tags_follow_sides():
    mesh = unit_square_mesh(4)
    midpoints = mesh.vertices[mesh.boundary_edges].mean(axis=1)
    expected = {
        SegmentTag.GAMMA1: lambda m: np.isclose(m[0], 1.0),
        SegmentTag.GAMMA2: lambda m: np.isclose(m[1], 0.0),
        SegmentTag.GAMMA3: lambda m: np.isclose(m[0], 0.0),
        SegmentTag.GAMMA4: lambda m: np.isclose(m[1], 1.0),
    }
    for midpoint, tag in zip(midpoints, mesh.boundary_tags):
        assert expected[SegmentTag(tag)](midpoint)
    assert set(int(t) for t in mesh.boundary_tags) == {1, 2, 3, 4}


def test_boundary_covers_perimeter_once():
    mesh = unit_square_mesh(5)
    lengths = np.linalg.norm(mesh.vertices[mesh.boundary_edges[:, 1]] - mesh.vertices[mesh.boundary_edges[:, 0]], axis=1)
    assert lengths.sum() == pytest.approx(4.0, abs=1e-14)
    assert len({tuple(sorted(e)) for e in mesh.boundary_edges}) == len(mesh.boundary_edges)


def test_outward_normals():
    mesh = unit_square_mesh(2)
    normals = mesh.outward_normals()
    expected = {1: (1.0, 0.0), 2: (0.0, -1.0), 3: (-1.0, 0.0), 4: (0.0, 1.0)}
    for normal, tag in zip(normals, mesh.boundary_tags):
        np.testing.assert_allclose(normal, expected[int(tag)], atol=1e-15)


def test_traction_edges_example1_empty():
    edges = boundary_edges_with_role(unit_square_mesh(2), BoundaryRoles.all_dirichlet(), BoundaryRole.TRACTION)
    assert edges.shape == (0, 2)


def test_traction_edges_example2():
    mesh = unit_square_mesh(2)
    edges = boundary_edges_with_role(mesh, EXAMPLE2_ROLES, BoundaryRole.TRACTION)
    assert len(edges) == 4
    x = mesh.vertices[edges][..., 0]
    assert np.all((x == 0.0) | (x == 1.0))
    assert np.all(x[:, 0] == x[:, 1])


def test_role_edges_partition_boundary():
    mesh = unit_square_mesh(3)
    traction = boundary_edges_with_role(mesh, EXAMPLE2_ROLES, BoundaryRole.TRACTION)
    dirichlet = boundary_edges_with_role(mesh, EXAMPLE2_ROLES, BoundaryRole.DIRICHLET_DISPLACEMENT)
    assert len(traction) + len(dirichlet) == len(mesh.boundary_edges)
    union = {tuple(e) for e in traction} | {tuple(e) for e in dirichlet}
    assert union == {tuple(e) for e in mesh.boundary_edges}


@pytest.mark.parametrize(
    "kwargs",
    [
        # empty Dirichlet part
        dict(dirichlet_displacement=frozenset(), traction=ALL_TAGS, dirichlet_pressure=ALL_TAGS),
        # overlap
        dict(
            dirichlet_displacement=ALL_TAGS,
            traction=frozenset({SegmentTag.GAMMA1}),
            dirichlet_pressure=ALL_TAGS,
        ),
        # missing side
        dict(dirichlet_displacement=frozenset({SegmentTag.GAMMA1}), dirichlet_pressure=ALL_TAGS),
    ],
)
def test_invalid_roles(kwargs):
    with pytest.raises(ValidationError):
        BoundaryRoles(**kwargs)


def test_dump_mesh(tmp_path):
    mesh = unit_square_mesh(1)
    path = dump_mesh(mesh, tmp_path / "mesh.txt")
    lines = path.read_text().splitlines()
    assert len(lines) == 4 + 2 + 4
    assert lines[0] == "0.0 0.0"
    assert lines[4] == "0 1 3"
    assert lines[-1].split()[-1] == "3"
