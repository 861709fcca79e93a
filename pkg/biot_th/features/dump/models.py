"""
Data models for the dump feature
"""

from typing import Literal

from pydantic import BaseModel, Field

from biot_th.biot_schemes import Method


class DumpMeshRequest(BaseModel):
    n: int = Field(ge=1)
    out: str


class DumpMatrixRequest(BaseModel):
    """Which matrix to assemble and where to write it"""
    n: int = Field(ge=1)
    k: int = Field(default=2, ge=2, le=3)
    l: int = Field(default=1, ge=1, le=2)
    block: Literal["coupled", "A1", "B", "A2", "C", "A3", "D"] = "coupled"
    case: Literal["example1", "example2"] = "example1"
    method: Method = Method.BACKWARD_EULER
    dt: float = Field(default=0.25, gt=0)
    nu: float = Field(default=0.3, gt=0, lt=0.5)
    K: float = Field(default=1.0, gt=0)
    out: str
