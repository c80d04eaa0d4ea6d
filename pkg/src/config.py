"""Configuration management for node-sense."""
import os
from pathlib import Path
from typing import Optional
from dataclasses import dataclass, field

from dotenv import load_dotenv

load_dotenv()


@dataclass
class SamplingConfig:
    """Monte Carlo sampling configuration."""
    default_seed: int = 0
    default_streams: int = 1
    # Points drawn per generator call; bounds memory, does not affect results
    chunk_size: int = 262_144
    max_workers: int = 4


@dataclass
class FitConfig:
    """Tolerances used by the coverage classifier and the fitters."""
    boundary_epsilon: float = 1e-9
    degenerate_tol: float = 1e-12
    zero_rate_tol: float = 1e-12


@dataclass
class SimulationConfig:
    """Cell simulator configuration."""
    base_address: str = "10.0.0.0"
    check_invariants: bool = True


@dataclass
class AppConfig:
    """Main application configuration."""
    project_root: Path = field(default_factory=lambda: Path(__file__).parent.parent)

    # Sub-configs
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)

    # Logging
    log_level: str = "WARNING"
    log_file: Optional[str] = None

    # Environment values that could not be parsed
    env_issues: list[str] = field(default_factory=list)

    def __post_init__(self):
        """Load overrides from the environment if available."""
        if log_level := os.getenv("NODE_SENSE_LOG_LEVEL"):
            self.log_level = log_level
        if log_file := os.getenv("NODE_SENSE_LOG_FILE"):
            self.log_file = log_file
        if (seed := self._env_int("NODE_SENSE_SEED")) is not None:
            self.sampling.default_seed = seed
        if (streams := self._env_int("NODE_SENSE_STREAMS")) is not None:
            self.sampling.default_streams = streams
        if (workers := self._env_int("NODE_SENSE_MAX_WORKERS")) is not None:
            self.sampling.max_workers = workers
        if base := os.getenv("NODE_SENSE_BASE_ADDRESS"):
            self.simulation.base_address = base

    def _env_int(self, name: str) -> Optional[int]:
        if not (raw := os.getenv(name)):
            return None
        try:
            return int(raw)
        except ValueError:
            self.env_issues.append(f"{name} must be an integer, got {raw!r}")
            return None

    def validate(self) -> list[str]:
        """Validate configuration and return list of issues."""
        issues = list(self.env_issues)

        if not 0 <= self.sampling.default_seed < 2**64:
            issues.append("Seed must be a 64-bit unsigned integer")

        if self.sampling.default_streams < 1:
            issues.append("Streams must be at least 1")

        if self.sampling.chunk_size < 1 or self.sampling.max_workers < 1:
            issues.append("Chunk size and worker count must be positive")

        if self.fit.boundary_epsilon < 0:
            issues.append("Boundary epsilon must be non-negative")

        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            issues.append(f"Unknown log level: {self.log_level}")

        return issues


# Global config instance
config = AppConfig()
