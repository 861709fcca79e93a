"""
Data models for the run_study feature
"""

import sys
from pathlib import Path
from typing import Any, Literal, Optional

import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from biot_th.biot_schemes import Method
from biot_th.shared.errors import ConfigError
from biot_th.shared.utils import parse_number

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = structlog.get_logger(__name__)

TEMPORAL_DTS = [0.25, 0.125, 0.0625, 0.03125]


def _spatial(method: int, k: int, l: int, dts: list[float], nu: float, K: float) -> dict[str, Any]:
    return {
        "case": "example2",
        "nu": nu,
        "K": K,
        "method": method,
        "k": k,
        "l": l,
        "study": "spatial",
        "pairs": [(n, dt) for n, dt in zip((2, 4, 8, 16), dts)],
    }


def _robust_pair(nu: float, K: float) -> dict[str, dict[str, Any]]:
    return {
        "m1_k2": _spatial(1, 2, 1, [1 / 4, 1 / 16, 1 / 64, 1 / 256], nu, K),
        "m1_k3": _spatial(1, 3, 2, [1 / 8, 1 / 64, 1 / 512, 1 / 4096], nu, K),
        "m2_k2": _spatial(2, 2, 1, [1 / 2, 1 / 4, 1 / 8, 1 / 16], nu, K),
        "m2_k3": _spatial(2, 3, 2, [1 / 4, 1 / 16, 1 / 64, 1 / 256], nu, K),
    }


_MODERATE = _robust_pair(0.3, 1.0)
_NEARLY_INCOMPRESSIBLE = _robust_pair(0.49999, 1e-6)

PRESETS: dict[str, dict[str, Any]] = {
    "table1": {"case": "example1", "method": 1, "n": 64, "k": 3, "l": 2, "study": "temporal", "dts": TEMPORAL_DTS},
    "table2": {"case": "example1", "method": 2, "n": 64, "k": 3, "l": 2, "study": "temporal", "dts": TEMPORAL_DTS},
    "table3": _MODERATE["m1_k2"],
    "table4": _MODERATE["m1_k3"],
    "table5": _MODERATE["m2_k2"],
    "table6": _MODERATE["m2_k3"],
    "table7": _NEARLY_INCOMPRESSIBLE["m1_k2"],
    "table8": _NEARLY_INCOMPRESSIBLE["m1_k3"],
    "table9": _NEARLY_INCOMPRESSIBLE["m2_k2"],
    "table10": _NEARLY_INCOMPRESSIBLE["m2_k3"],
}


class RunConfig(BaseModel):
    """
    One run or convergence study

    study="none" runs a single (n, dt); "temporal" refines dts on mesh n;
    "spatial" runs the (n, dt) pairs.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    preset: Optional[str] = Field(default=None, description="Name of a built-in table preset")
    case: Literal["example1", "example2"] = "example1"
    nu: float = Field(default=0.3, gt=0, lt=0.5, description="Poisson ratio (example2)")
    K: float = Field(default=1.0, gt=0, description="Hydraulic conductivity (example2)")
    method: Method = Method.BACKWARD_EULER
    n: Optional[int] = Field(default=None, ge=1, description="Mesh subdivisions per side")
    k: int = Field(default=2, ge=2, le=3)
    l: Optional[int] = Field(default=None, ge=1, le=2, description="Pressure degree, k - 1 by default")
    dt: Optional[float] = Field(default=None, gt=0)
    study: Literal["none", "temporal", "spatial"] = "none"
    dts: Optional[list[float]] = None
    pairs: Optional[list[tuple[int, float]]] = None
    out: str = Field(default="results", description="Output directory")
    workers: int = Field(default=1, ge=1)

    @field_validator("dt", mode="before")
    @classmethod
    def _dt_number(cls, value):
        return None if value is None else parse_number(value)

    @field_validator("dts", mode="before")
    @classmethod
    def _dts_numbers(cls, value):
        if value is None:
            return None
        if isinstance(value, str):
            value = [item for item in value.split(",") if item.strip()]
        return [parse_number(item) for item in value]

    @field_validator("pairs", mode="before")
    @classmethod
    def _pair_numbers(cls, value):
        if value is None:
            return None
        return [(int(n), parse_number(dt)) for n, dt in value]

    @model_validator(mode="after")
    def _check_study(self) -> "RunConfig":
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if self.study == "none":
            if self.dt is None:
                raise ValueError("dt required")
            if self.n is None:
                raise ValueError("n required")
        elif self.study == "temporal":
            if not self.dts:
                raise ValueError("dts required for a temporal study")
            if self.n is None:
                raise ValueError("n required")
        elif not self.pairs:
            raise ValueError("pairs required for a spatial study")
        return self

    @property
    def pressure_degree(self) -> int:
        return self.l if self.l is not None else self.k - 1

    @property
    def stem(self) -> str:
        """Base name of the output files"""
        return self.preset or "run"


def _error_keys(error: ValidationError) -> list[str]:
    keys = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item["loc"])
        keys.append(loc or "config")
    return keys


def load_config_file(path: str | Path) -> dict[str, Any]:
    """
    Flat key/value table from a TOML file.

    Raises:
        ConfigError: If the file is missing or not valid TOML
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}", keys=["config"])
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML in {path}: {e}", keys=["config"]) from e


def parse_config(
    path: Optional[str | Path] = None,
    flags: Optional[dict[str, Any]] = None,
    defaults: Optional[dict[str, Any]] = None,
) -> RunConfig:
    """
    Validated RunConfig from a preset, a TOML file and command-line flags.

    Precedence, lowest first: defaults, preset, file, flags. Flags that are
    None are treated as absent.

    Raises:
        ConfigError: With the offending key names
    """
    file_values = load_config_file(path) if path is not None else {}
    flag_values = {key: value for key, value in (flags or {}).items() if value is not None}

    preset = flag_values.get("preset", file_values.get("preset"))
    values: dict[str, Any] = dict(defaults or {})
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}, expected one of {', '.join(PRESETS)}", keys=["preset"])
        values.update(PRESETS[preset])
    values.update(file_values)
    values.update(flag_values)

    try:
        config = RunConfig(**values)
    except ValidationError as e:
        keys = _error_keys(e)
        messages = "; ".join(f"{'.'.join(map(str, item['loc'])) or 'config'}: {item['msg']}" for item in e.errors())
        raise ConfigError(f"invalid run configuration: {messages}", keys=keys) from e

    if config.l is not None and config.l != config.k - 1:
        logger.warning("nonstandard_degree_pairing", k=config.k, l=config.l)
    return config
