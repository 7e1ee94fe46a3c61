import math
import os
from typing import Optional
from dotenv import load_dotenv

load_dotenv()


def _default_threads() -> int:
    return os.cpu_count() or 1


class Settings:
    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Sweeps
    RINGLAB_THREADS: int = int(os.getenv("RINGLAB_THREADS", str(_default_threads())))

    # Discretization defaults
    GRID_SIZE: int = int(os.getenv("RINGLAB_GRID_SIZE", "256"))
    DT: float = float(os.getenv("RINGLAB_DT", "1e-3"))
    TOL: float = float(os.getenv("RINGLAB_TOL", "1e-12"))
    MAX_STEPS: int = int(os.getenv("RINGLAB_MAX_STEPS", "200000"))
    POLISH_TOL: float = float(os.getenv("RINGLAB_POLISH_TOL", "1e-10"))
    POLISH_MAX_ITER: int = int(os.getenv("RINGLAB_POLISH_MAX_ITER", "5000"))
    KINETIC_PHASE_LIMIT: float = float(os.getenv("RINGLAB_KINETIC_PHASE_LIMIT", str(4 * math.pi)))

    # Analytic branch
    TIE_TOL: float = float(os.getenv("RINGLAB_TIE_TOL", "1e-12"))
    QUADRATURE_GRID: int = int(os.getenv("RINGLAB_QUADRATURE_GRID", "2048"))

    # Optional default output directory for CLI artifacts
    OUTPUT_DIR: Optional[str] = os.getenv("RINGLAB_OUTPUT_DIR")


settings = Settings()
