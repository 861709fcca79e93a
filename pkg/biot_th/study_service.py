"""
Study service - business logic layer

Runs configurations, checks and dumps, and turns their outcomes into files.
It knows nothing about argument parsing; the features translate flags into
calls on this class.
"""

import csv
import io
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
import structlog

from biot_th.analysis import NORMS, ConvergenceReport, solve_case, spatial_study, temporal_study
from biot_th.assembly import assemble_forms, dump_matrix
from biot_th.biot_schemes import CoupledSystem, Method, SchemeConfig, boundary_conditions, run
from biot_th.elements import MAX_EXACTNESS, monomial_integral, triangle_quadrature
from biot_th.features.run_study.models import RunConfig
from biot_th.mesh import dump_mesh, unit_square_mesh
from biot_th.mms import derived_sources_selftest, example1, example2, make_case, polynomial_case, zero_case
from biot_th.shared.errors import SelfTestError
from biot_th.shared.models import CommandResult
from biot_th.spaces import build_mixed_spaces, interpolate

logger = structlog.get_logger(__name__)

CSV_COLUMNS = [
    "h", "dt",
    "u_H1", "u_H1_order",
    "xi_L2", "xi_L2_order",
    "p_L2", "p_L2_order",
    "p_H1", "p_H1_order",
]
MATRIX_BLOCKS = ("coupled", "A1", "B", "A2", "C", "A3", "D")


def _fraction(value: float) -> str:
    """1/32 style label when value is the reciprocal of an integer"""
    inverse = 1.0 / value
    if abs(inverse - round(inverse)) < 1e-9:
        return f"1/{int(round(inverse))}" if round(inverse) != 1 else "1"
    return str(Fraction(value).limit_denominator(1 << 20))


def format_csv(report: ConvergenceReport) -> str:
    """CSV text with full-precision floats; orders are blank on the first row"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i, row in enumerate(report.rows):
        orders = report.orders[i - 1] if i > 0 else {}
        record = [repr(row.h), repr(row.dt)]
        for norm in NORMS:
            value = orders.get(norm)
            record += [repr(getattr(row.errors, norm)), "" if value is None else repr(value)]
        writer.writerow(record)
    return buffer.getvalue()


def format_markdown(report: ConvergenceReport) -> str:
    """Table with 4 significant digits, pressure L2 and H1 side by side"""

    def err(value: float) -> str:
        return f"{value:.3e}"

    def rate(orders: dict, norm: str) -> str:
        value = orders.get(norm)
        return "" if value is None else f"{value:.2f}"

    lines = [
        f"Method {int(report.method)}, {report.case}, k={report.k}, l={report.l}",
        "",
        "| h | dt | H1 errors of u | Orders | L2 errors of xi | Orders | L2 & H1 errors of p | Orders |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for i, row in enumerate(report.rows):
        orders = report.orders[i - 1] if i > 0 else {}
        p_orders = f"{rate(orders, 'p_L2')} & {rate(orders, 'p_H1')}" if orders else ""
        e = row.errors
        lines.append(
            f"| {_fraction(row.h)} | {_fraction(row.dt)} | {err(e.u_H1)} | {rate(orders, 'u_H1')} "
            f"| {err(e.xi_L2)} | {rate(orders, 'xi_L2')} | {err(e.p_L2)} & {err(e.p_H1)} | {p_orders} |"
        )
    return "\n".join(lines) + "\n"


class StudyService:
    """
    Executes runs, studies, self-tests and dumps

    Args:
        max_workers: Cap on parallel study rows (environment setting)
        output_dir: Default directory for written tables
    """

    def __init__(self, max_workers: int = 1, output_dir: str = "results"):
        self.max_workers = max(1, max_workers)
        self.output_dir = output_dir

    def execute(self, config: RunConfig) -> ConvergenceReport:
        """Run the configured single run or study and return its report"""
        case = make_case(config.case, nu=config.nu, K=config.K)
        k, l = config.k, config.pressure_degree
        workers = min(config.workers, self.max_workers)
        if config.study == "temporal":
            return temporal_study(case, config.method, config.n, k, l, config.dts, workers=workers)
        if config.study == "spatial":
            return spatial_study(case, config.method, config.pairs, k, l, workers=workers)
        scheme = SchemeConfig(method=config.method, dt=config.dt, T=case.T, k=k, l=l)
        row = solve_case(case, scheme, config.n)
        return ConvergenceReport.from_rows([row], "time", case.name, config.method, k, l)

    def run_study(self, config: RunConfig) -> CommandResult:
        """
        Execute config and write <stem>.csv and <stem>.md under config.out.

        The markdown table is returned as the result message.
        """
        report = self.execute(config)
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{config.stem}.csv"
        md_path = out / f"{config.stem}.md"
        markdown = format_markdown(report)
        csv_path.write_text(format_csv(report), encoding="utf-8")
        md_path.write_text(markdown, encoding="utf-8")
        logger.info("tables_written", csv=str(csv_path), markdown=str(md_path), rows=len(report.rows))
        return CommandResult(
            success=True,
            command="run",
            files=[str(csv_path), str(md_path)],
            message=markdown,
        )

    def selftest(self, samples: int = 50, seed: int = 0, n: int = 2) -> CommandResult:
        """
        Finite-difference checks of the built-in cases plus the discrete property checks

        Raises:
            SelfTestError: If any check fails; the report holds every result line
        """
        lines = []
        failed = []
        for case in (example1(), example2(0.3, 1.0)):
            report = derived_sources_selftest(case, samples=samples, seed=seed)
            lines.append(f"{report.case}: {'pass' if report.passed else 'FAIL'} (max residual {report.max_residual:.2e})")
            if not report.passed:
                failed.append(report.case)
                for check in report.failures:
                    lines.append(f"  {check.name}: residual {check.max_residual:.2e} at {check.failing_sample}")
        for name, passed, detail in property_checks(n=n):
            lines.append(f"{name}: {'pass' if passed else 'FAIL'} ({detail})")
            if not passed:
                failed.append(name)
        message = "\n".join(lines)
        if failed:
            raise SelfTestError(f"failed: {', '.join(failed)}", report=message)
        return CommandResult(success=True, command="selftest", message=message)

    def dump_mesh(self, n: int, path: str) -> CommandResult:
        written = dump_mesh(unit_square_mesh(n), path)
        return CommandResult(success=True, command="dump mesh", files=[str(written)])

    def dump_matrix(
        self,
        n: int,
        k: int,
        l: int,
        path: str,
        block: str = "coupled",
        case: str = "example1",
        method: Method = Method.BACKWARD_EULER,
        dt: float = 0.25,
        nu: float = 0.3,
        K: float = 1.0,
    ) -> CommandResult:
        """Write one assembled block, or the eliminated coupled matrix, as MatrixMarket"""
        if block not in MATRIX_BLOCKS:
            raise ValueError(f"unknown block {block!r}, expected one of {', '.join(MATRIX_BLOCKS)}")
        manufactured = make_case(case, nu=nu, K=K)
        spaces = build_mixed_spaces(unit_square_mesh(n), k, l)
        operators = assemble_forms(spaces, manufactured.params)
        if block == "coupled":
            config = SchemeConfig(method=method, dt=dt, T=manufactured.T, k=k, l=l)
            u_bc, p_bc = boundary_conditions(manufactured, spaces, manufactured.roles)
            matrix = CoupledSystem(spaces, operators, config, u_bc, p_bc).constrained.matrix
        else:
            matrix = getattr(operators, block)
        comment = f"{block} {case} n={n} k={k} l={l}"
        written = dump_matrix(path, matrix, comment=comment)
        return CommandResult(success=True, command="dump matrix", files=[str(written)])


def property_checks(n: int = 2) -> list[tuple[str, bool, str]]:
    """
    Discrete properties on small meshes: symmetry, quadrature exactness,
    zero-data and stationary fixed points.

    Returns:
        (name, passed, detail) per check
    """
    results = []

    worst = 0.0
    for degree in range(MAX_EXACTNESS + 1):
        rule = triangle_quadrature(degree)
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                approx = float(np.sum(rule.weights * rule.points[:, 0] ** a * rule.points[:, 1] ** b))
                worst = max(worst, abs(approx - monomial_integral(a, b)))
    results.append(("quadrature_exactness", worst < 1e-13, f"max error {worst:.1e}"))

    case = polynomial_case()
    mesh = unit_square_mesh(n)
    spaces = build_mixed_spaces(mesh, 2, 1)
    ops = assemble_forms(spaces, case.params)
    asym = max(abs(m - m.T).max() / abs(m).max() for m in (ops.A1, ops.A2, ops.A3, ops.D))
    results.append(("form_symmetry", asym < 1e-12, f"max relative asymmetry {asym:.1e}"))
    row_sums = float(np.abs(np.asarray(ops.D.sum(axis=1))).max())
    results.append(("stiffness_row_sums", row_sums < 1e-12, f"max |row sum| {row_sums:.1e}"))

    for method in Method:
        config = SchemeConfig(method=method, dt=0.5, T=1.0, k=2, l=1)
        u_bc, p_bc = boundary_conditions(case, spaces, case.roles)
        block = CoupledSystem(spaces, ops, config, u_bc, p_bc).check_symmetry()
        results.append((f"block_symmetry_method{int(method)}", block < 1e-12, f"relative asymmetry {block:.1e}"))

        zero = run(zero_case(), config, mesh).final
        size = float(max(np.abs(zero.u).max(), np.abs(zero.xi).max(), np.abs(zero.p).max()))
        results.append((f"zero_data_method{int(method)}", size == 0.0, f"max |coefficient| {size:.1e}"))

        final = run(case, config, mesh).final
        drift = max(
            np.abs(final.u - interpolate(spaces.V, lambda x, y: case.u(x, y, 0.0))).max(),
            np.abs(final.xi - interpolate(spaces.W, lambda x, y: case.xi(x, y, 0.0))).max(),
            np.abs(final.p - interpolate(spaces.M, lambda x, y: case.p(x, y, 0.0))).max(),
        )
        results.append((f"stationary_method{int(method)}", drift < 1e-9, f"max drift {drift:.1e}"))

    for name, passed, detail in results:
        logger.debug("property_check", name=name, passed=passed, detail=detail)
    return results
