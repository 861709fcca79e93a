"""
Command: selftest
"""

import argparse

import structlog

from biot_th.features.selftest.models import SelfTestRequest
from biot_th.shared.models import CommandResult
from biot_th.shared.utils import load_instruction
from biot_th.study_service import StudyService

logger = structlog.get_logger(__name__)


def register_command(subparsers: argparse._SubParsersAction, service: StudyService) -> None:
    """Register the selftest sub-command"""
    parser = subparsers.add_parser(
        "selftest",
        help="Check manufactured data by finite differences and the discrete properties",
        description=load_instruction("instructions.md", __file__),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--samples", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=2)

    def handle(args: argparse.Namespace) -> CommandResult:
        request = SelfTestRequest(samples=args.samples, seed=args.seed, n=args.n)
        return service.selftest(samples=request.samples, seed=request.seed, n=request.n)

    parser.set_defaults(handler=handle)
