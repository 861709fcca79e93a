"""
Command: run

Single runs and convergence studies, from a preset, a TOML file and flags.
"""

import argparse

import structlog

from biot_th.features.run_study.models import PRESETS, parse_config
from biot_th.shared.models import CommandResult
from biot_th.shared.utils import load_instruction
from biot_th.study_service import StudyService

logger = structlog.get_logger(__name__)

# flag dest -> RunConfig key
FLAG_KEYS = ("preset", "case", "nu", "K", "method", "n", "k", "l", "dt", "study", "dts", "out", "workers")


def register_command(subparsers: argparse._SubParsersAction, service: StudyService) -> None:
    """
    Register the run sub-command

    Args:
        subparsers: Sub-parser collection of the main parser
        service: StudyService executing the run
    """
    parser = subparsers.add_parser(
        "run",
        help="Run a single configuration or a convergence study",
        description=load_instruction("instructions.md", __file__),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="TOML file with RunConfig keys")
    parser.add_argument("--preset", choices=sorted(PRESETS, key=lambda name: int(name[5:])))
    parser.add_argument("--case", choices=["example1", "example2"])
    parser.add_argument("--nu", type=float, help="Poisson ratio (example2)")
    parser.add_argument("--K", type=float, help="Hydraulic conductivity (example2)")
    parser.add_argument("--method", type=int, choices=[1, 2])
    parser.add_argument("--n", type=int, help="Mesh subdivisions per side")
    parser.add_argument("--k", type=int, choices=[2, 3], help="Displacement degree")
    parser.add_argument("--l", type=int, choices=[1, 2], help="Pressure degree (default k - 1)")
    parser.add_argument("--dt", help="Time step, e.g. 0.03125 or 1/32")
    parser.add_argument("--study", choices=["none", "temporal", "spatial"])
    parser.add_argument("--dts", help="Comma-separated time steps of a temporal study")
    parser.add_argument("--out", help="Output directory (default BIOT_OUTPUT_DIR or results)")
    parser.add_argument("--workers", type=int, help="Parallel study rows (capped by BIOT_MAX_WORKERS)")

    def handle(args: argparse.Namespace) -> CommandResult:
        flags = {key: getattr(args, key) for key in FLAG_KEYS}
        config = parse_config(args.config, flags, defaults={"out": service.output_dir})
        logger.info("run_requested", stem=config.stem, study=config.study, case=config.case)
        return service.run_study(config)

    parser.set_defaults(handler=handle)
