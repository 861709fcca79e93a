"""
Run study feature - single runs and convergence tables
"""

from biot_th.features.run_study.models import PRESETS, RunConfig, parse_config

__all__ = ["PRESETS", "RunConfig", "parse_config"]
