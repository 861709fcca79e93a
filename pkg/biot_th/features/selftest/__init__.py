"""
Self-test feature - manufactured-solution and discrete property checks
"""

from biot_th.features.selftest.models import SelfTestRequest

__all__ = ["SelfTestRequest"]
