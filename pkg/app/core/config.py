from pathlib import Path
from typing import List, Optional

import dotenv
from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    PROJECT_NAME: str = "QSC Majorization"
    DEBUG: bool = False

    # Verdict tolerances
    CHANNEL_TOL: float = 1e-8
    HERMITIAN_TOL: float = 1e-9
    RANK_CUTOFF: float = 1e-9
    CLASSICAL_TOL: float = 1e-10

    # Conic solver
    GAP_TOL: float = 1e-7
    FEAS_TOL: float = 1e-8
    QSC_MAX_ITERS: int = 200
    SCS_MAX_ITERS: int = 100000
    SOLVERS: List[str] = ["CLARABEL", "SCS"]
    SDP_DUMP_DIR: str = ""

    # Majorization
    MAJORIZATION_TOL: float = 1e-6
    WITNESS_SEPARATION: float = 1e-4

    # Guessing-probability seesaw
    SEESAW_RESTARTS: int = 50
    SEESAW_TOL: float = 1e-9
    SEESAW_MAX_ROUNDS: int = 500

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = ""

    # Thread fan-out for independent solves
    WORKERS: int = 1

    @field_validator(
        "CHANNEL_TOL", "HERMITIAN_TOL", "RANK_CUTOFF", "CLASSICAL_TOL",
        "GAP_TOL", "FEAS_TOL", "MAJORIZATION_TOL", "WITNESS_SEPARATION", "SEESAW_TOL",
    )
    @classmethod
    def _tolerance_range(cls, value: float) -> float:
        if not 0.0 < value <= 1e-2:
            raise ValueError(f"tolerance must lie in (0, 1e-2], got {value}")
        return value

    @field_validator("QSC_MAX_ITERS", "SCS_MAX_ITERS", "SEESAW_RESTARTS", "SEESAW_MAX_ROUNDS", "WORKERS")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"must be positive, got {value}")
        return value

    class Config:
        env_file = ".env"


dotenv.load_dotenv()
settings = Settings()


class RunConfig(BaseModel):
    """Per-invocation overrides built by the CLI; `settings` itself is never mutated."""
    tol: Optional[float] = Field(None, gt=0.0, le=1e-2)
    seed: Optional[int] = Field(None, ge=0, lt=2 ** 64)
    json_output: bool = False
    certificate: Optional[Path] = None
    output: Optional[Path] = None

    def tolerance(self, default: float) -> float:
        return default if self.tol is None else self.tol
