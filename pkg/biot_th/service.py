"""
Command registry with automatic feature discovery

Every package under features/ that ships a command.py with a
register_command(subparsers, service) function becomes a sub-command.
"""

import argparse
import importlib
import pkgutil
from pathlib import Path

import structlog

from biot_th.study_service import StudyService

logger = structlog.get_logger(__name__)


class CommandService:
    """
    Wires the feature commands to the study service
    """

    def __init__(self, study_service: StudyService):
        """
        Args:
            study_service: Business logic shared by all commands
        """
        self.study_service = study_service

    def register_commands(self, subparsers: argparse._SubParsersAction) -> list[str]:
        """
        Register the sub-commands of all features.

        Returns:
            Names of the features that registered a command
        """
        features_package = "biot_th.features"
        features_path = Path(__file__).parent / "features"
        registered = []

        if not features_path.exists():
            logger.warning("features_missing", path=str(features_path))
            return registered

        for _, feature_name, is_pkg in pkgutil.iter_modules([str(features_path)]):
            if not is_pkg:
                continue
            module_name = f"{features_package}.{feature_name}.command"
            try:
                command_module = importlib.import_module(module_name)
            except ModuleNotFoundError as e:
                if e.name != module_name:
                    raise
                logger.debug("feature_without_command", feature=feature_name)
                continue

            if hasattr(command_module, "register_command"):
                command_module.register_command(subparsers, self.study_service)
                registered.append(feature_name)
                logger.debug("command_registered", feature=feature_name)
            else:
                logger.warning("feature_without_register_command", feature=feature_name)
        return registered
