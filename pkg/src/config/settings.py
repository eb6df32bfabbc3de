"""
Configuration settings for the synthetic data engine.

This module provides centralized configuration management using:
1. Environment variables and .env file (log level only)
2. YAML configuration file (defaults of every pipeline stage)
"""

from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..errors import ConfigError
from ..models.generation import GenerationDefaults
from ..models.report import MetricsOptions
from ..models.schema import AnalysisOptions
from ..models.training import TrainConfig

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config" / "engine.yaml"

_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


def load_yaml_config(yaml_path: Path = DEFAULT_CONFIG_PATH) -> Dict[str, Any]:
    """
    Load YAML configuration file.

    Args:
        yaml_path: Path to YAML config file

    Returns:
        Dictionary with configuration data
    """
    yaml_path = Path(yaml_path)
    if not yaml_path.exists():
        raise ConfigError(f"Configuration file not found: {yaml_path}")

    with open(yaml_path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


class LoggingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    level: str = "INFO"
    log_dir: Path = Path("logs")
    console: bool = True

    @field_validator("level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        v = v.upper()
        if v not in _LOG_LEVELS:
            raise ValueError(f"log level must be one of {sorted(_LOG_LEVELS)}")
        return v


class EngineConfig(BaseModel):
    """Typed view of config/engine.yaml."""

    model_config = ConfigDict(extra="forbid")

    analysis: AnalysisOptions = Field(default_factory=AnalysisOptions)
    training: TrainConfig = Field(default_factory=TrainConfig)
    generation: GenerationDefaults = Field(default_factory=GenerationDefaults)
    metrics: MetricsOptions = Field(default_factory=MetricsOptions)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)


def load_engine_config(yaml_path: Path = DEFAULT_CONFIG_PATH) -> EngineConfig:
    """Load and validate the engine YAML; validation errors become ConfigError."""
    try:
        return EngineConfig.model_validate(load_yaml_config(yaml_path))
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration in {yaml_path}: {e}") from e


class Settings(BaseSettings):
    """
    Application settings loaded from:
    1. Environment variables and .env file (LOG_LEVEL)
    2. YAML configuration file (everything else)
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        validate_assignment=True,
        extra="ignore",
    )

    log_level: Optional[str] = None

    def engine(self, yaml_path: Path = DEFAULT_CONFIG_PATH) -> EngineConfig:
        """Engine config with the environment log level applied on top."""
        config = load_engine_config(yaml_path)
        if self.log_level:
            config.logging = config.logging.model_copy(update={"level": self.log_level.upper()})
        return config

    @field_validator("log_level")
    @classmethod
    def validate_level(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v.upper() not in _LOG_LEVELS:
            raise ValueError(f"LOG_LEVEL must be one of {sorted(_LOG_LEVELS)}")
        return v


# Global settings instance
settings = Settings()
