"""Configuration management for periodforge.

Handles environment-based configuration with sensible defaults
and validation. Every numerical tolerance used by the solver, the
quadrature layer and the mesher has its default here.
"""

import json
import logging
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

# Optional YAML support
try:
    import yaml

    HAS_YAML = True
except ImportError:
    HAS_YAML = False
    logger.debug("PyYAML not installed. Install with: pip install periodforge[yaml]")

ENV_PREFIX = "PERIODFORGE_"
_PARSE_ERRORS: tuple = (ValueError, yaml.YAMLError) if HAS_YAML else (ValueError,)


class QuadratureMethod(str, Enum):
    """Quadrature families available for the modulus integrals."""

    GAUSS_KRONROD = "gauss_kronrod"
    DOUBLE_EXPONENTIAL = "double_exponential"

    @classmethod
    def from_string(cls, value: str) -> "QuadratureMethod":
        """Convert string to QuadratureMethod, case-insensitive."""
        try:
            return cls(value.lower())
        except ValueError:
            valid = ", ".join([m.value for m in cls])
            raise ConfigurationError(
                f"Invalid quadrature method '{value}'. Valid methods are: {valid}"
            )


class ExportFormat(str, Enum):
    """Mesh file formats."""

    OBJ = "obj"
    PLY = "ply"

    @classmethod
    def from_string(cls, value: str) -> "ExportFormat":
        """Convert string to ExportFormat, case-insensitive."""
        try:
            return cls(value.lower())
        except ValueError:
            valid = ", ".join([f.value for f in cls])
            raise ConfigurationError(
                f"Invalid export format '{value}'. Valid formats are: {valid}"
            )


class PeriodForgeConfig(BaseModel):
    """Global numerical configuration."""

    # Quadrature
    quad_tol: float = Field(1e-10, gt=0, description="Absolute tolerance per integral")
    quad_limit: int = Field(200, ge=10, description="Max adaptive subintervals")
    quadrature_method: QuadratureMethod = Field(
        QuadratureMethod.GAUSS_KRONROD, description="Primary quadrature family"
    )
    extended_precision: bool = Field(
        False, description="Fall back to mpmath when quad stagnates"
    )
    mp_dps: int = Field(30, ge=15, description="mpmath decimal digits")

    # Curve
    branch_clearance: float = Field(
        1e-6, gt=0, description="Relative clearance from branch points"
    )

    # Period solver
    root_tol: float = Field(1e-12, gt=0, description="Root tolerance on lambda")
    max_iter: int = Field(200, ge=1, description="Root-finder iteration cap")
    lambda_scan_lo: float = Field(1.05, gt=1.0)
    lambda_scan_hi: float = Field(20.0, gt=1.0)
    lambda_scan_points: int = Field(64, ge=2)
    verify_tol: float = Field(1e-7, gt=0, description="Period residual tolerance")

    # Mesh
    grid_grading: float = Field(1.5, gt=1.0, description="Geometric grading ratio")
    eps_end_fraction: float = Field(
        0.05, gt=0, lt=1, description="End cut radius over distance to the boundary"
    )
    weld_tol: float = Field(1e-9, gt=0, description="Weld tolerance in mesh units")

    # Runtime
    threads: Optional[int] = Field(None, ge=1, description="Worker cap, 1 when unset")
    log_level: str = Field("WARNING", description="Root log level for the CLI")

    @field_validator("quadrature_method", mode="before")
    def validate_quadrature_method(cls, v):
        if isinstance(v, str):
            return QuadratureMethod.from_string(v)
        return v

    @field_validator("log_level", mode="before")
    def validate_log_level(cls, v):
        level = str(v).upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ConfigurationError(f"Invalid log level '{v}'")
        return level

    @classmethod
    def env_overrides(cls) -> Dict[str, Any]:
        """Raw ``PERIODFORGE_<FIELD>`` values that are set and non-empty."""
        config_dict: Dict[str, Any] = {}
        for name in cls.model_fields:
            raw = os.getenv(f"{ENV_PREFIX}{name.upper()}")
            if raw is None or raw == "":
                continue
            config_dict[name] = raw

        if "extended_precision" in config_dict:
            config_dict["extended_precision"] = (
                config_dict["extended_precision"].lower() in {"1", "true", "yes"}
            )
        return config_dict

    @classmethod
    def from_env(cls) -> "PeriodForgeConfig":
        """Create configuration from environment variables.

        Environment variable format:
        PERIODFORGE_QUAD_TOL=1e-10
        PERIODFORGE_QUADRATURE_METHOD=gauss_kronrod
        PERIODFORGE_EXTENDED_PRECISION=false
        PERIODFORGE_THREADS=4
        PERIODFORGE_LOG_LEVEL=INFO
        """
        try:
            return cls(**cls.env_overrides())
        except (ValidationError, ValueError) as e:
            raise ConfigurationError(f"Invalid configuration: {str(e)}")

    @classmethod
    def from_file(cls, path: Union[str, Path], apply_env: bool = False) -> "PeriodForgeConfig":
        """Load configuration overrides from a JSON or YAML file.

        Args:
            path: JSON file, or YAML when the suffix is .yaml / .yml
            apply_env: Let ``PERIODFORGE_*`` variables override the file values
        """
        file_path = Path(path).expanduser()
        if not file_path.exists():
            raise ConfigurationError(f"Configuration file does not exist: {file_path}")

        content = file_path.read_text(encoding="utf-8")
        try:
            if file_path.suffix in {".yaml", ".yml"}:
                if not HAS_YAML:
                    raise ConfigurationError(
                        f"YAML file {file_path} requires PyYAML "
                        "(pip install periodforge[yaml])"
                    )
                data = yaml.safe_load(content) or {}
            else:
                data = json.loads(content)
        except _PARSE_ERRORS as e:
            raise ConfigurationError(f"Cannot parse configuration file {file_path}: {e}")

        if not isinstance(data, dict):
            raise ConfigurationError(f"Configuration file {file_path} is not a mapping")
        if apply_env:
            data = {**data, **cls.env_overrides()}

        try:
            return cls(**data)
        except (ValidationError, ValueError) as e:
            raise ConfigurationError(f"Invalid configuration in {file_path}: {e}")

    def max_workers(self) -> int:
        """Worker count for pools, never below one."""
        return max(1, self.threads or 1)


# Global configuration instance
_config: Optional[PeriodForgeConfig] = None


def get_config() -> PeriodForgeConfig:
    """Get the global configuration instance, creating it if needed."""
    global _config
    if _config is None:
        _config = PeriodForgeConfig.from_env()
    return _config


def set_config(config: PeriodForgeConfig) -> None:
    """Install an explicit configuration as the global instance."""
    global _config
    _config = config
    logger.debug(f"Installed configuration: {config!r}")


def reset_config() -> None:
    """Reset the global configuration (useful for testing)."""
    global _config
    _config = None
