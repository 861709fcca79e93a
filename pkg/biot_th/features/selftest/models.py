"""
Data models for the selftest feature
"""

from pydantic import BaseModel, Field


class SelfTestRequest(BaseModel):
    """Options of the self-test command"""
    samples: int = Field(default=50, ge=1, description="Random (x, y, t) samples per case")
    seed: int = Field(default=0, description="Seed of the sample generator")
    n: int = Field(default=2, ge=1, description="Mesh subdivisions for the property checks")
