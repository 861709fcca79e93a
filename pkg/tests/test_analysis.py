"""
Tests for error norms, observed orders and study bookkeeping
"""

import math

import numpy as np
import pytest

from biot_th.analysis import (
    NORMS,
    ConvergenceReport,
    ErrorRecord,
    StudyRow,
    compute_errors,
    field_errors,
    order,
    spatial_study,
    temporal_study,
)
from biot_th.biot_schemes import Method, SchemeConfig, State, run
from biot_th.mesh import Mesh, unit_square_mesh
from biot_th.shared.errors import UndefinedOrderError
from biot_th.spaces import build_mixed_spaces, build_space, interpolate


def _interpolant(case, spaces, t):
    return State(
        u=interpolate(spaces.V, lambda x, y: case.u(x, y, t)),
        xi=interpolate(spaces.W, lambda x, y: case.xi(x, y, t)),
        p=interpolate(spaces.M, lambda x, y: case.p(x, y, t)),
        t=t,
    )


def _row(n, dt, value):
    errors = ErrorRecord(**{norm: value for norm in NORMS})
    return StudyRow(n=n, h=1.0 / n, dt=dt, errors=errors)


@pytest.mark.parametrize(
    "coarse, fine, ratio, expected",
    [
        (4e-2, 1e-2, 2.0, 2.0),
        (2.735e-2, 1.399e-2, 2.0, 0.967),
        (5.207e-1, 1.436e-1, 2.0, 1.858),
        (0.3, 0.3, 2.0, 0.0),
        (9e-3, 1e-3, 3.0, 2.0),
    ],
)
def test_order(coarse, fine, ratio, expected):
    assert order(coarse, fine, ratio) == pytest.approx(expected, abs=1e-3)


@pytest.mark.parametrize("coarse, fine", [(0.0, 1e-3), (1e-3, 0.0), (-1.0, 1.0)])
def test_order_undefined(coarse, fine):
    with pytest.raises(UndefinedOrderError):
        order(coarse, fine, 2.0)


def test_order_rejects_ratio():
    with pytest.raises(ValueError):
        order(1.0, 0.5, 1.0)


def test_field_errors_constant():
    space = build_space(unit_square_mesh(2), 1)
    l2, semi = field_errors(space, np.zeros(space.total_dofs), lambda x, y, t: np.full_like(x, 3.0), None, 0.0)
    assert l2 == pytest.approx(3.0, rel=1e-13)
    assert semi == 0.0


def test_field_errors_linear_gradient():
    space = build_space(unit_square_mesh(2), 2, components=2)
    l2, semi = field_errors(
        space,
        np.zeros(space.total_dofs),
        lambda x, y, t: np.stack([x, np.zeros_like(x)], axis=-1),
        lambda x, y, t: np.broadcast_to(np.array([[1.0, 0.0], [0.0, 0.0]]), x.shape + (2, 2)),
        0.0,
    )
    assert l2 == pytest.approx(math.sqrt(1 / 3), rel=1e-13)
    assert semi == pytest.approx(1.0, rel=1e-13)


def test_zero_solution_against_example1(case1, spaces2):
    nv, nw, nm = spaces2.sizes
    state = State(u=np.zeros(nv), xi=np.zeros(nw), p=np.zeros(nm), t=1.0)
    errors = compute_errors(state, case1, spaces2)
    # ||20 exp((x + y) / 10)|| = 100 (e^0.2 - 1)
    assert errors.p_L2 == pytest.approx(100.0 * (math.exp(0.2) - 1.0), rel=1e-8)
    assert errors.p_L2 == pytest.approx(22.14, abs=1e-2)
    assert errors.p_H1 > errors.p_L2


def test_polynomial_interpolant_is_exact(poly_case, spaces2):
    errors = compute_errors(_interpolant(poly_case, spaces2, 1.0), poly_case, spaces2)
    for norm in NORMS:
        assert getattr(errors, norm) < 1e-12


def test_errors_require_final_time(case1, spaces2):
    with pytest.raises(ValueError):
        compute_errors(_interpolant(case1, spaces2, 0.5), case1, spaces2)


def test_interpolation_orders(case1):
    coarse, fine = build_mixed_spaces(unit_square_mesh(4), 2, 1), build_mixed_spaces(unit_square_mesh(8), 2, 1)
    e4 = compute_errors(_interpolant(case1, coarse, 1.0), case1, coarse)
    e8 = compute_errors(_interpolant(case1, fine, 1.0), case1, fine)
    assert 1.7 < order(e4.u_H1, e8.u_H1, 2.0) < 2.3
    assert 1.7 < order(e4.p_L2, e8.p_L2, 2.0) < 2.3
    assert 0.85 < order(e4.p_H1, e8.p_H1, 2.0) < 1.15


def test_default_quadrature_sufficient(case2):
    spaces = build_mixed_spaces(unit_square_mesh(4), 2, 1)
    state = _interpolant(case2, spaces, 1.0)
    default = compute_errors(state, case2, spaces)
    richest = compute_errors(state, case2, spaces, exactness=10)
    for norm in NORMS:
        assert getattr(default, norm) == pytest.approx(getattr(richest, norm), rel=1e-3)


def test_raised_exactness_on_coarsest_run(case1, mesh2):
    result = run(case1, SchemeConfig(method=Method.BACKWARD_EULER, dt=0.25, k=2, l=1), mesh2)
    state, spaces = result.final, result.spaces
    fields = [
        (spaces.V, state.u, case1.u, case1.grad_u),
        (spaces.W, state.xi, case1.xi, None),
        (spaces.M, state.p, case1.p, case1.grad_p),
    ]
    for space, coeffs, value, gradient in fields:
        default = field_errors(space, coeffs, value, gradient, 1.0)
        raised = field_errors(space, coeffs, value, gradient, 1.0, exactness=2 * space.degree + 6)
        for a, b in zip(default, raised):
            assert a == pytest.approx(b, rel=1e-3)


def test_report_orders_between_rows():
    rows = [_row(4, 0.25, 4e-2), _row(8, 0.125, 1e-2), _row(16, 0.0625, 2.5e-3)]
    report = ConvergenceReport.from_rows(rows, "space", "example1", Method.BACKWARD_EULER, 2, 1)
    assert len(report.orders) == 2
    assert report.order_of("p_L2") == pytest.approx(2.0)
    assert report.order_of("u_H1", 0) == pytest.approx(2.0)


def test_report_time_refinement_uses_dt_ratio():
    rows = [_row(8, 0.5, 8e-2), _row(8, 0.125, 5e-3)]
    report = ConvergenceReport.from_rows(rows, "time", "example1", Method.CRANK_NICOLSON, 2, 1)
    assert report.order_of("xi_L2") == pytest.approx(2.0)


def test_report_marks_undefined_orders():
    rows = [_row(4, 0.5, 1e-2), _row(4, 0.25, 0.0)]
    report = ConvergenceReport.from_rows(rows, "time", "zero", Method.BACKWARD_EULER, 2, 1)
    assert all(report.order_of(norm) is None for norm in NORMS)


def test_single_row_study_has_no_orders(poly_case):
    report = temporal_study(poly_case, Method.BACKWARD_EULER, n=2, k=2, l=1, dts=[1.0])
    assert len(report.rows) == 1
    assert report.orders == []
    assert report.rows[0].errors.p_L2 < 1e-10


def test_temporal_study_rows_in_order(poly_case):
    report = temporal_study(poly_case, Method.CRANK_NICOLSON, n=2, k=2, l=1, dts=[0.5, 0.25])
    assert [row.dt for row in report.rows] == [0.5, 0.25]
    assert report.refinement == "time"


@pytest.mark.parametrize("dts", [[], [0.5, 0.5], [0.5, 0.25, 0.0625], [0.25, 0.5]])
def test_temporal_study_rejects_steps(poly_case, dts):
    with pytest.raises(ValueError):
        temporal_study(poly_case, Method.BACKWARD_EULER, n=2, k=2, l=1, dts=dts)


@pytest.mark.parametrize("pairs", [[], [(2, 0.5), (3, 0.25)]])
def test_spatial_study_rejects_meshes(poly_case, pairs):
    with pytest.raises(ValueError):
        spatial_study(poly_case, Method.BACKWARD_EULER, pairs, k=2, l=1)


def test_spatial_study(case1):
    report = spatial_study(case1, Method.BACKWARD_EULER, [(2, 0.5), (4, 0.25)], k=2, l=1)
    assert [row.n for row in report.rows] == [2, 4]
    assert report.rows[1].h == 0.25
    assert report.rows[1].errors.p_L2 < report.rows[0].errors.p_L2


def _relabeled(mesh, seed):
    rng = np.random.default_rng(seed)
    order_v = rng.permutation(len(mesh.vertices))
    new_index = np.argsort(order_v)
    triangles = new_index[mesh.triangles][rng.permutation(mesh.num_cells)]
    # rotate local vertices, keeping each triangle counter-clockwise
    shifts = rng.integers(0, 3, size=len(triangles))
    triangles = np.stack([np.roll(tri, s) for tri, s in zip(triangles, shifts)])
    return Mesh(
        vertices=mesh.vertices[order_v],
        triangles=triangles,
        boundary_edges=new_index[mesh.boundary_edges],
        boundary_tags=mesh.boundary_tags,
        n=mesh.n,
    )


@pytest.mark.parametrize("method", list(Method))
def test_errors_invariant_under_relabeling(case1, mesh2, method):
    config = SchemeConfig(method=method, dt=0.5)
    baseline = run(case1, config, mesh2)
    reference = compute_errors(baseline.final, case1, baseline.spaces)
    relabeled = _relabeled(mesh2, seed=int(method))
    assert (relabeled.areas() > 0).all()
    result = run(case1, config, relabeled)
    errors = compute_errors(result.final, case1, result.spaces)
    for norm in NORMS:
        assert getattr(errors, norm) == pytest.approx(getattr(reference, norm), rel=1e-9)
