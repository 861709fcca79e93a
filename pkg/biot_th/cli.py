"""
biot-th command line

    biot-th run --preset table2 --out results/
    biot-th selftest
    biot-th dump mesh --n 4 --out mesh.txt
"""

import argparse
import sys
from typing import Optional, Sequence

import structlog

from biot_th import __version__
from biot_th.config import get_config
from biot_th.service import CommandService
from biot_th.shared.errors import BiotError, SelfTestError
from biot_th.shared.log import configure_logging
from biot_th.study_service import StudyService

logger = structlog.get_logger(__name__)

EPILOG = """
Environment Variables:
  BIOT_MAX_WORKERS   Cap on parallel study rows (default: CPU count)
  BIOT_OUTPUT_DIR    Default output directory (default: results)
  BIOT_LOG_LEVEL     DEBUG, INFO, WARNING, ... (default: INFO)
  BIOT_LOG_JSON      true for JSON log lines on stderr
"""


def build_parser(service: StudyService) -> argparse.ArgumentParser:
    """Main parser with one sub-command per discovered feature"""
    parser = argparse.ArgumentParser(
        prog="biot-th",
        description="Three-field Biot solver and convergence harness",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    CommandService(service).register_commands(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> None:
    """
    Entry point of the biot-th console script.

    Exits with status 0 when the command completed and every solve met its
    tolerance, 130 when interrupted and 1 otherwise.
    """
    try:
        config = get_config()
        configure_logging(config.logging.level, json=config.logging.json_output)

        service = StudyService(
            max_workers=config.runtime.max_workers,
            output_dir=config.runtime.output_dir,
        )
        parser = build_parser(service)
        args = parser.parse_args(argv)

        result = args.handler(args)
        if result.message:
            print(result.message)
        if not result.success:
            logger.error("command_failed", command=result.command, error=result.error)
            sys.exit(1)
        logger.info("command_finished", command=result.command, files=result.files)

    except KeyboardInterrupt:
        logger.warning("interrupted")
        sys.exit(130)
    except SelfTestError as e:
        print(e.report)
        logger.error("selftest_failed", error=str(e))
        sys.exit(1)
    except BiotError as e:
        logger.error("fatal_error", error=str(e), error_type=type(e).__name__)
        sys.exit(1)
    except Exception as e:
        logger.error("fatal_error", error=str(e), error_type=type(e).__name__, exc_info=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
