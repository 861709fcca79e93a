"""
Convergence benchmarks on the manufactured cases

These runs take minutes; they are marked slow and excluded from the default
profile. Run them with `pytest -m slow`.
"""

import math

import pytest

from biot_th.analysis import field_errors, order, spatial_study, temporal_study
from biot_th.biot_schemes import Method, elliptic_projection, stokes_projection
from biot_th.features.run_study.models import parse_config
from biot_th.mesh import unit_square_mesh
from biot_th.mms import example1, example2
from biot_th.spaces import build_mixed_spaces
from biot_th.study_service import StudyService

pytestmark = pytest.mark.slow

TEMPORAL_DTS = [1 / 4, 1 / 8, 1 / 16, 1 / 32]
SPATIAL_PAIRS = [(2, 1 / 4), (4, 1 / 16), (8, 1 / 64), (16, 1 / 256)]

# (u_H1, xi_L2, p_L2, p_H1) per dt of the h = 1/64, k = 3, l = 2 runs
REFERENCE_ERRORS = {
    Method.BACKWARD_EULER: [
        (5.219e-02, 2.754e-01, 2.971e-01, 1.386e00),
        (2.735e-02, 1.443e-01, 1.557e-01, 7.263e-01),
        (1.399e-02, 7.381e-02, 7.963e-02, 3.715e-01),
        (7.076e-03, 3.732e-02, 4.026e-02, 1.878e-01),
    ],
    Method.CRANK_NICOLSON: [
        (2.630e-03, 1.266e-02, 1.385e-02, 6.333e-02),
        (6.426e-04, 3.296e-03, 3.570e-03, 1.653e-02),
        (1.587e-04, 8.278e-04, 8.944e-04, 4.159e-03),
        (3.959e-05, 2.071e-04, 2.237e-04, 1.041e-03),
    ],
}
REFERENCE_ORDERS = {
    Method.BACKWARD_EULER: (0.98, 0.98, 0.98, 0.98),
    Method.CRANK_NICOLSON: (2.00, 2.00, 2.00, 2.00),
}
NORM_ORDER = ("u_H1", "xi_L2", "p_L2", "p_H1")


def _assert_bands(report, bands):
    for norm, (low, high) in bands.items():
        rate = report.order_of(norm)
        assert rate is not None and low <= rate <= high, f"{norm} order {rate}"


@pytest.mark.parametrize(
    "method, band",
    [(Method.BACKWARD_EULER, (0.85, 1.10)), (Method.CRANK_NICOLSON, (1.80, 2.20))],
)
def test_temporal_order(method, band):
    report = temporal_study(example1(), method, n=32, k=3, l=2, dts=TEMPORAL_DTS, workers=4)
    _assert_bands(report, {norm: band for norm in NORM_ORDER})


M1_K2_BANDS = {"u_H1": (1.75, 2.15), "xi_L2": (1.8, 2.4), "p_L2": (1.75, 2.15), "p_H1": (0.85, 1.10)}
M2_K3_BANDS = {"u_H1": (2.8, 3.25), "xi_L2": (2.8, 3.3), "p_L2": (2.7, 3.3), "p_H1": (1.8, 2.2)}


@pytest.mark.parametrize(
    "method, k, l, pairs, bands",
    [
        (Method.BACKWARD_EULER, 2, 1, SPATIAL_PAIRS, M1_K2_BANDS),
        (Method.CRANK_NICOLSON, 3, 2, SPATIAL_PAIRS, M2_K3_BANDS),
    ],
    ids=["method1_k2", "method2_k3"],
)
def test_spatial_order_and_robustness(method, k, l, pairs, bands):
    moderate = spatial_study(example2(0.3, 1.0), method, pairs, k, l, workers=4)
    _assert_bands(moderate, bands)

    nearly_incompressible = spatial_study(example2(0.49999, 1e-6), method, pairs, k, l, workers=4)
    _assert_bands(nearly_incompressible, bands)
    for norm in NORM_ORDER:
        stiff = getattr(nearly_incompressible.rows[-1].errors, norm)
        soft = getattr(moderate.rows[-1].errors, norm)
        assert stiff <= 5.0 * soft and soft <= 5.0 * stiff, norm


@pytest.mark.parametrize("k, l", [(2, 1), (3, 2)])
def test_projection_orders(k, l):
    case = example1()
    errors = []
    for n in (4, 8, 16, 32):
        spaces = build_mixed_spaces(unit_square_mesh(n), k, l)
        u, _ = stokes_projection(case, spaces, case.params, case.roles, 0.0)
        p = elliptic_projection(case, spaces, case.params, case.roles, 0.0)
        u_l2, u_semi = field_errors(spaces.V, u, case.u, case.grad_u, 0.0)
        p_l2, p_semi = field_errors(spaces.M, p, case.p, case.grad_p, 0.0)
        errors.append((math.hypot(u_l2, u_semi), p_l2, math.hypot(p_l2, p_semi)))

    (u_c, pl2_c, ph1_c), (u_f, pl2_f, ph1_f) = errors[-2], errors[-1]
    assert order(u_c, u_f, 2.0) == pytest.approx(k, abs=0.2)
    assert order(pl2_c, pl2_f, 2.0) == pytest.approx(l + 1, abs=0.2)
    assert order(ph1_c, ph1_f, 2.0) == pytest.approx(l, abs=0.2)


def test_self_checks_pass():
    result = StudyService().selftest()
    assert result.success, result.message


@pytest.mark.parametrize("preset, method", [("table1", Method.BACKWARD_EULER), ("table2", Method.CRANK_NICOLSON)])
def test_published_resolution(preset, method, tmp_path):
    config = parse_config(flags={"preset": preset, "workers": 4, "out": str(tmp_path)})
    report = StudyService(max_workers=4).execute(config)

    for row, reference in zip(report.rows, REFERENCE_ERRORS[method]):
        for norm, expected in zip(NORM_ORDER, reference):
            value = getattr(row.errors, norm)
            assert expected / 2.0 <= value <= 2.0 * expected, f"dt={row.dt} {norm} {value:.3e}"
    for norm, expected in zip(NORM_ORDER, REFERENCE_ORDERS[method]):
        assert report.order_of(norm) == pytest.approx(expected, abs=0.1), norm


def test_preset_tables_are_reproducible(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    for out in (first, second):
        config = parse_config(flags={"preset": "table1", "workers": 2, "out": str(out)})
        StudyService(max_workers=2).run_study(config)
    assert (first / "table1.csv").read_bytes() == (second / "table1.csv").read_bytes()
