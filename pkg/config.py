import logging
import os
from dataclasses import dataclass, field

from dotenv import load_dotenv


load_dotenv()


def _getenv(name: str) -> str:
    return os.getenv(name, "").strip()


@dataclass
class Settings:
    log_level: str = field(
        default_factory=lambda: (_getenv("LOG_LEVEL") or "INFO").upper()
    )
    mc_samples: int = field(
        default_factory=lambda: int(_getenv("MC_SAMPLES") or 1_000_000)
    )
    mc_seed: int = field(default_factory=lambda: int(_getenv("MC_SEED") or 0))
    mc_chunk_size: int = field(
        default_factory=lambda: int(_getenv("MC_CHUNK_SIZE") or 65536)
    )
    mc_workers: int = field(default_factory=lambda: int(_getenv("MC_WORKERS") or 1))
    qfi_step: float = field(
        default_factory=lambda: float(_getenv("QFI_STEP") or 1e-6)
    )
    slope_step: float = field(
        default_factory=lambda: float(_getenv("SLOPE_STEP") or 1e-5)
    )

    def __post_init__(self) -> None:
        if logging.getLevelName(self.log_level) == f"Level {self.log_level}":
            raise ValueError(f"LOG_LEVEL is not a logging level: {self.log_level}")
        if self.mc_samples < 1000:
            raise ValueError("MC_SAMPLES must be at least 1000")
        if not 0 <= self.mc_seed < 2**64:
            raise ValueError("MC_SEED must fit in an unsigned 64-bit integer")
        if self.mc_chunk_size < 1:
            raise ValueError("MC_CHUNK_SIZE must be positive")
        if self.mc_workers < 1:
            raise ValueError("MC_WORKERS must be positive")
        if self.qfi_step <= 0 or self.slope_step <= 0:
            raise ValueError("QFI_STEP and SLOPE_STEP must be positive")
