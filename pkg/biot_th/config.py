"""
Configuration management for the Biot solver

Environment settings only; per-run choices live in the run_study feature's
RunConfig.
"""

import os
from typing import Optional

from pydantic import BaseModel, Field, ValidationError

from biot_th.shared.errors import ConfigError


def _env_bool(name: str, default: bool) -> bool:
    return os.getenv(name, str(default)).strip().lower() in ("1", "true", "yes", "on")


class RuntimeConfig(BaseModel):
    """
    Execution resources and output location
    """
    max_workers: int = Field(
        default_factory=lambda: os.cpu_count() or 1,
        ge=1,
        description="Upper bound on parallel study rows",
    )
    output_dir: str = Field(
        default="results",
        description="Default directory for CSV and markdown tables",
    )

    @classmethod
    def from_env(cls) -> "RuntimeConfig":
        """Load runtime config from environment variables"""
        values = {}
        if os.getenv("BIOT_MAX_WORKERS"):
            values["max_workers"] = os.environ["BIOT_MAX_WORKERS"]
        if os.getenv("BIOT_OUTPUT_DIR"):
            values["output_dir"] = os.environ["BIOT_OUTPUT_DIR"]
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"invalid runtime environment: {e}", keys=["BIOT_MAX_WORKERS"]) from e


class LoggingConfig(BaseModel):
    """
    Log level and renderer
    """
    level: str = Field(default="INFO", description="Standard logging level name")
    json_output: bool = Field(default=False, description="Render JSON lines instead of console output")

    @classmethod
    def from_env(cls) -> "LoggingConfig":
        """Load logging config from environment variables"""
        level = os.getenv("BIOT_LOG_LEVEL", cls.model_fields["level"].default).upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigError(f"unknown log level {level!r}", keys=["BIOT_LOG_LEVEL"])
        return cls(level=level, json_output=_env_bool("BIOT_LOG_JSON", False))


class AppConfig(BaseModel):
    """
    Complete application configuration

    Aggregates all configuration sections into a single object.
    """
    runtime: RuntimeConfig
    logging: LoggingConfig

    @classmethod
    def from_env(cls) -> "AppConfig":
        """Load complete configuration from environment variables"""
        return cls(runtime=RuntimeConfig.from_env(), logging=LoggingConfig.from_env())


# Global configuration instance
_config: Optional[AppConfig] = None


def get_config() -> AppConfig:
    """Get global application configuration"""
    global _config
    if _config is None:
        _config = AppConfig.from_env()
    return _config


def load_config() -> AppConfig:
    """Load application configuration from environment"""
    global _config
    _config = AppConfig.from_env()
    return _config
