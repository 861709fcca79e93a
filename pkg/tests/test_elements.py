"""
Tests for reference bases and quadrature rules
"""

import numpy as np
import pytest

from biot_th.elements import (
    MAX_EXACTNESS,
    edge_quadrature,
    eval_basis,
    eval_edge_basis,
    lagrange_nodes,
    monomial_integral,
    reference_basis,
    triangle_quadrature,
)
from biot_th.shared.errors import QuadratureError


@pytest.mark.parametrize("degree, count", [(1, 3), (2, 6), (3, 10)])
def test_node_count(degree, count):
    assert reference_basis(degree).node_count == count
    assert len(lagrange_nodes(degree)) == count


def test_linear_basis_at_barycenter():
    values, gradients = eval_basis(reference_basis(1), (1 / 3, 1 / 3))
    np.testing.assert_allclose(values, [1 / 3, 1 / 3, 1 / 3], atol=1e-15)
    np.testing.assert_allclose(gradients, [[-1, -1], [1, 0], [0, 1]], atol=1e-13)


def test_quadratic_edge_node_order():
    nodes = lagrange_nodes(2)
    np.testing.assert_allclose(nodes[3:], [[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_lagrange_property(degree):
    basis = reference_basis(degree)
    values, _ = basis.evaluate(basis.node_coords)
    np.testing.assert_allclose(values, np.eye(basis.node_count), atol=1e-12)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_partition_of_unity(degree):
    points = np.random.default_rng(3).dirichlet(np.ones(3), size=20)[:, :2]
    values, gradients = reference_basis(degree).evaluate(points)
    np.testing.assert_allclose(values.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(gradients.sum(axis=1), 0.0, atol=1e-11)


@pytest.mark.parametrize("degree", [2, 3])
def test_gradients_match_finite_differences(degree):
    basis = reference_basis(degree)
    point = np.array([0.21, 0.37])
    step = 1e-6
    _, gradients = eval_basis(basis, point)
    for axis in range(2):
        shift = np.zeros(2)
        shift[axis] = step
        plus, _ = eval_basis(basis, point + shift)
        minus, _ = eval_basis(basis, point - shift)
        np.testing.assert_allclose(gradients[:, axis], (plus - minus) / (2 * step), atol=1e-7)


def test_rejects_unsupported_degree():
    with pytest.raises(ValueError):
        reference_basis(4)


def test_centroid_rule():
    rule = triangle_quadrature(1)
    assert len(rule.points) == 1
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)


def test_quadratic_rule():
    rule = triangle_quadrature(2)
    x = rule.points[:, 0]
    assert rule.weights @ x ** 2 == pytest.approx(1 / 12, abs=1e-15)


def test_cubic_monomial():
    rule = triangle_quadrature(6)
    x, y = rule.points[:, 0], rule.points[:, 1]
    assert rule.weights @ (x ** 3 * y ** 3) == pytest.approx(36 / 40320, rel=1e-12)


@pytest.mark.parametrize("exactness", range(0, MAX_EXACTNESS + 1))
def test_exactness_table(exactness):
    rule = triangle_quadrature(exactness)
    assert rule.exactness_degree >= exactness
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-14)
    x, y = rule.points[:, 0], rule.points[:, 1]
    for total in range(exactness + 1):
        for b in range(total + 1):
            a = total - b
            assert rule.weights @ (x ** a * y ** b) == pytest.approx(monomial_integral(a, b), rel=1e-12)


def test_rule_points_inside_triangle():
    rule = triangle_quadrature(MAX_EXACTNESS)
    assert np.all(rule.points >= 0)
    assert np.all(rule.points.sum(axis=1) <= 1)
    assert np.all(rule.weights > 0)


def test_exactness_beyond_table():
    with pytest.raises(QuadratureError):
        triangle_quadrature(MAX_EXACTNESS + 1)


@pytest.mark.parametrize("exactness", [1, 4, 7])
def test_edge_rule(exactness):
    rule = edge_quadrature(exactness)
    assert rule.exactness_degree >= exactness
    for power in range(exactness + 1):
        assert rule.weights @ rule.points ** power == pytest.approx(1 / (power + 1), rel=1e-13)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_edge_basis_nodal(degree):
    nodes = np.linspace(0.0, 1.0, degree + 1)
    np.testing.assert_allclose(eval_edge_basis(degree, nodes), np.eye(degree + 1), atol=1e-12)
