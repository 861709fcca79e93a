"""
Reference-triangle Lagrange bases and quadrature rules

The reference triangle has vertices (0, 0), (1, 0), (0, 1). Lagrange nodes
are equispaced: the three vertices, then degree-1 points along each edge
(edge 0 -> 1, edge 1 -> 2, edge 2 -> 0, each walked from its first vertex),
then the barycenter for degree 3.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from biot_th.shared.errors import QuadratureError

MAX_DEGREE = 3
MAX_EXACTNESS = 10

_REFERENCE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class ReferenceBasis:
    """
    Nodal P_k basis on the reference triangle

    Basis functions are stored as monomial coefficients obtained by inverting
    the Vandermonde matrix at the nodes, so evaluation at arbitrary points is
    a pair of small matrix products.
    """
    degree: int
    node_coords: np.ndarray  # (nloc, 2)
    exponents: np.ndarray  # (nloc, 2) monomial powers (a, b) of x^a y^b
    coefficients: np.ndarray  # (nloc monomials, nloc basis functions)

    @property
    def node_count(self) -> int:
        return len(self.node_coords)

    def _monomials(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = points[:, 0:1]
        y = points[:, 1:2]
        a = self.exponents[:, 0]
        b = self.exponents[:, 1]
        values = x ** a * y ** b
        dx = np.where(a > 0, a * x ** np.maximum(a - 1, 0), 0.0) * y ** b
        dy = x ** a * np.where(b > 0, b * y ** np.maximum(b - 1, 0), 0.0)
        return values, np.stack([dx, dy], axis=-1)

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Values (npts, nloc) and reference gradients (npts, nloc, 2) at points.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        mono, dmono = self._monomials(points)
        values = mono @ self.coefficients
        gradients = np.einsum("pmd,mi->pid", dmono, self.coefficients)
        return values, gradients


def lagrange_nodes(degree: int) -> np.ndarray:
    """Equispaced Lagrange nodes of the reference triangle in local order"""
    nodes = [v for v in _REFERENCE_VERTICES]
    for a, b in ((0, 1), (1, 2), (2, 0)):
        for m in range(1, degree):
            s = m / degree
            nodes.append((1.0 - s) * _REFERENCE_VERTICES[a] + s * _REFERENCE_VERTICES[b])
    if degree == 3:
        nodes.append(np.array([1.0 / 3.0, 1.0 / 3.0]))
    return np.array(nodes)


@lru_cache(maxsize=None)
def reference_basis(degree: int) -> ReferenceBasis:
    """
    Build (and cache) the Lagrange basis of the given degree.

    Raises:
        ValueError: If degree is outside 1..3
    """
    if degree not in range(1, MAX_DEGREE + 1):
        raise ValueError(f"Lagrange degree must be in 1..{MAX_DEGREE}, got {degree}")
    nodes = lagrange_nodes(degree)
    exponents = np.array(
        [(total - b, b) for total in range(degree + 1) for b in range(total + 1)]
    )
    vandermonde = nodes[:, 0:1] ** exponents[:, 0] * nodes[:, 1:2] ** exponents[:, 1]
    coefficients = np.linalg.inv(vandermonde)
    return ReferenceBasis(
        degree=degree,
        node_coords=nodes,
        exponents=exponents,
        coefficients=coefficients,
    )


def eval_basis(basis: ReferenceBasis, point) -> tuple[np.ndarray, np.ndarray]:
    """
    Values and reference gradients of every nodal basis function.

    A single point gives (nloc,) values and (nloc, 2) gradients; an array of
    points gives the batched shapes of ReferenceBasis.evaluate.
    """
    point = np.asarray(point, dtype=float)
    values, gradients = basis.evaluate(point)
    if point.ndim == 1:
        return values[0], gradients[0]
    return values, gradients


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Triangle rule: points in reference coordinates, weights summing to 1/2"""
    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int


@dataclass(frozen=True, eq=False)
class EdgeQuadratureRule:
    """Gauss-Legendre rule on [0, 1], weights summing to 1"""
    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int


def _gauss_unit(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def triangle_quadrature(min_exactness: int) -> QuadratureRule:
    """
    Rule integrating every polynomial of total degree <= min_exactness exactly.

    Degrees 0-1 use the barycenter, degree 2 the three-point interior rule,
    higher degrees a collapsed product of Gauss-Legendre rules.

    Raises:
        QuadratureError: If min_exactness exceeds MAX_EXACTNESS
    """
    if min_exactness > MAX_EXACTNESS:
        raise QuadratureError(
            f"no triangle rule of exactness {min_exactness} (table ends at {MAX_EXACTNESS})"
        )
    if min_exactness <= 1:
        return QuadratureRule(
            points=np.array([[1.0 / 3.0, 1.0 / 3.0]]),
            weights=np.array([0.5]),
            exactness_degree=1,
        )
    if min_exactness == 2:
        return QuadratureRule(
            points=np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]]),
            weights=np.full(3, 1.0 / 6.0),
            exactness_degree=2,
        )

    # x = u, y = v (1 - u); the Jacobian (1 - u) adds one degree in u
    m = (min_exactness + 3) // 2
    u, wu = _gauss_unit(m)
    v, wv = _gauss_unit(m)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu * (1.0 - u), wv)
    points = np.column_stack([uu.ravel(), (vv * (1.0 - uu)).ravel()])
    return QuadratureRule(points=points, weights=ww.ravel(), exactness_degree=2 * m - 2)


@lru_cache(maxsize=None)
def edge_quadrature(min_exactness: int) -> EdgeQuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact up to min_exactness"""
    m = max(1, math.ceil((min_exactness + 1) / 2))
    s, w = _gauss_unit(m)
    return EdgeQuadratureRule(points=s, weights=w, exactness_degree=2 * m - 1)


@lru_cache(maxsize=None)
def edge_basis(degree: int) -> np.ndarray:
    """
    Monomial coefficients (degree+1, degree+1) of the 1D Lagrange basis on
    equispaced nodes s = m/degree of [0, 1].
    """
    nodes = np.linspace(0.0, 1.0, degree + 1)
    vandermonde = np.vander(nodes, degree + 1, increasing=True)
    return np.linalg.inv(vandermonde)


def eval_edge_basis(degree: int, s: np.ndarray) -> np.ndarray:
    """Values (len(s), degree+1) of the 1D edge basis at parameters s"""
    s = np.asarray(s, dtype=float)
    return np.vander(s, degree + 1, increasing=True) @ edge_basis(degree)


def monomial_integral(a: int, b: int) -> float:
    """Exact integral of x^a y^b over the reference triangle"""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
