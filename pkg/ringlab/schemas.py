import math
from enum import Enum
from typing import List, Optional
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ringlab.config import settings
from ringlab.exceptions import GridError


def is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


def check_grid_size(value: int) -> int:
    if value < 16 or not is_power_of_two(value):
        raise GridError(f"grid size must be a power of two >= 16, got {value}")
    return value


def kinetic_phase(dt: float, grid_size: int, alpha: float) -> float:
    """Largest kinetic phase dt*(l - alpha)^2/2 picked up by a grid mode in one step"""
    return dt * (grid_size / 2 + abs(alpha)) ** 2 / 2


class Branch(str, Enum):
    UNIFORM = "uniform"
    SOLITON = "soliton"


class EvolutionMode(str, Enum):
    REAL_TIME = "real_time"
    IMAGINARY_TIME = "imaginary_time"


class RecordStatus(str, Enum):
    OK = "ok"
    BELOW_CRITICAL = "below_critical"
    NO_CONVERGE = "no_converge"
    NO_LUMP = "no_lump"


class SweepMode(str, Enum):
    LAMBDA = "lambda"
    ALPHA = "alpha"


# Ring particle schemas
class GroundLevelResult(BaseModel):
    levels: List[int]
    energy: float
    degenerate: bool

    @model_validator(mode="after")
    def check_degeneracy(self) -> "GroundLevelResult":
        if len(self.levels) not in (1, 2):
            raise ValueError("a ground level result holds one or two levels")
        if self.degenerate != (len(self.levels) == 2):
            raise ValueError("degenerate must be set exactly when two levels are returned")
        return self


class LevelInfo(BaseModel):
    l: int
    energy: float
    velocity: float


# Analytic stationary solutions
class StationarySolution(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    branch: Branch
    coupling: float = Field(gt=0, alias="lambda")
    m: Optional[float] = Field(default=None, ge=0, le=1)
    m_complement: Optional[float] = Field(default=None, ge=0, le=1)
    r: Optional[float] = Field(default=None, gt=0)
    chem_potential: float
    offset: float = 0.0

    @model_validator(mode="after")
    def check_branch_fields(self) -> "StationarySolution":
        soliton_fields = (self.m, self.m_complement, self.r)
        if self.branch == Branch.SOLITON and any(value is None for value in soliton_fields):
            raise ValueError("soliton branch requires m, m_complement and r")
        if self.branch == Branch.UNIFORM and any(value is not None for value in soliton_fields):
            raise ValueError("uniform branch carries no elliptic parameters")
        return self

    def with_offset(self, offset: float) -> "StationarySolution":
        return self.model_copy(update={"offset": offset})


# Mean-field dynamics
class EvolutionConfig(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    dt: float = Field(gt=0)
    steps: int = Field(gt=0)
    alpha: float = 0.0
    coupling: float = Field(default=0.0, ge=0, alias="lambda")
    mode: EvolutionMode = EvolutionMode.REAL_TIME

    @field_validator("alpha", "dt", "coupling")
    @classmethod
    def check_finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    def check_grid(self, grid_size: int) -> None:
        """Reject step sizes whose kinetic phase per step exceeds the configured limit"""
        phase = kinetic_phase(self.dt, grid_size, self.alpha)
        if phase >= settings.KINETIC_PHASE_LIMIT:
            raise ValueError(
                f"dt={self.dt} on N={grid_size} gives kinetic phase {phase:.3f} per step, "
                f"limit is {settings.KINETIC_PHASE_LIMIT:.3f}"
            )


class Observables(BaseModel):
    norm: float
    energy: float
    chem_potential: float
    current: float
    centroid_angle: float
    centroid_magnitude: float = Field(ge=0)


class DriftFit(BaseModel):
    """Least-squares line through the unwrapped centroid angle"""

    rate: float
    intercept: float
    rms_residual: float
    samples: int


class ProfileAlignment(BaseModel):
    offset: float
    phase: float
    distance: float


# Experiment records
class ScanRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    coupling: float = Field(alias="lambda")
    alpha: float
    N: int
    dt: Optional[float] = None
    seed: str
    m: Optional[float] = None
    r: Optional[float] = None
    mu_analytic: Optional[float] = None
    mu_numeric: Optional[float] = None
    E_uniform: Optional[float] = None
    E_soliton: Optional[float] = None
    branch: Optional[Branch] = None
    drift_rate: Optional[float] = None
    residual: Optional[float] = None
    status: RecordStatus = RecordStatus.OK


class ConvergenceTable(BaseModel):
    records: List[ScanRecord]
    spatial_decay: List[float] = []
    temporal_orders: List[float] = []


class SweepConfig(BaseModel):
    """Numerical settings shared by every record of a sweep"""

    model_config = ConfigDict(frozen=True)

    grid_size: int = settings.GRID_SIZE
    dt: float = Field(default=settings.DT, gt=0)
    tol: float = Field(default=settings.TOL, gt=0)
    max_steps: int = Field(default=settings.MAX_STEPS, gt=0)
    seed: Optional[str] = None
    t_final: float = Field(default=10.0, gt=0)
    snapshot_every: int = Field(default=100, gt=0)

    @field_validator("grid_size")
    @classmethod
    def validate_grid_size(cls, value: int) -> int:
        return check_grid_size(value)


# CLI run configurations
class RunConfig(BaseModel):
    """Base for the per-subcommand settings; unknown keys are rejected"""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    output: Optional[str] = None


class EllipticRunConfig(RunConfig):
    m: Optional[float] = Field(default=None, ge=0, lt=1)
    u: Optional[float] = None
    target: Optional[float] = None

    @model_validator(mode="after")
    def check_query(self) -> "EllipticRunConfig":
        if (self.m is None) == (self.target is None):
            raise ValueError("give exactly one of m or target")
        if self.u is not None and self.m is None:
            raise ValueError("u requires m")
        return self


class RingRunConfig(RunConfig):
    alpha: float
    l: Optional[int] = None
    l_min: Optional[int] = None
    l_max: Optional[int] = None
    tie_tol: float = Field(default=settings.TIE_TOL, ge=0)

    @model_validator(mode="after")
    def check_window(self) -> "RingRunConfig":
        if self.l_min is not None and self.l_max is not None and self.l_min > self.l_max:
            raise ValueError("l_min must not exceed l_max")
        return self


class StationaryRunConfig(RunConfig):
    coupling: float = Field(gt=0, alias="lambda")
    offset: float = 0.0
    grid_size: Optional[int] = None

    @field_validator("grid_size")
    @classmethod
    def check_optional_grid(cls, value: Optional[int]) -> Optional[int]:
        return None if value is None else check_grid_size(value)


class _GridRunConfig(RunConfig):
    coupling: float = Field(ge=0, alias="lambda")
    alpha: float = 0.0
    grid_size: int = settings.GRID_SIZE
    dt: float = Field(default=settings.DT, gt=0)

    @field_validator("grid_size")
    @classmethod
    def validate_grid_size(cls, value: int) -> int:
        return check_grid_size(value)

    @model_validator(mode="after")
    def check_kinetic_phase(self) -> "_GridRunConfig":
        phase = kinetic_phase(self.dt, self.grid_size, self.alpha)
        if phase >= settings.KINETIC_PHASE_LIMIT:
            raise ValueError(
                f"dt={self.dt} on N={self.grid_size} gives kinetic phase {phase:.3f} per step, "
                f"limit is {settings.KINETIC_PHASE_LIMIT:.3f}"
            )
        return self


class RelaxRunConfig(_GridRunConfig):
    tol: float = Field(default=settings.TOL, gt=0)
    max_steps: int = Field(default=settings.MAX_STEPS, gt=0)
    seed: Optional[str] = None


class EvolveRunConfig(_GridRunConfig):
    steps: int = Field(default=10000, gt=0)
    snapshot_every: int = Field(default=1000, gt=0)
    seed: Optional[str] = None
    input: Optional[str] = None


class BoostRunConfig(_GridRunConfig):
    coupling: float = Field(gt=0, alias="lambda")
    level: Optional[int] = None
    t: float = 0.0
    steps: int = Field(default=10000, gt=0)
    snapshot_every: int = Field(default=100, gt=0)
    tol: float = Field(default=settings.TOL, gt=0)
    max_steps: int = Field(default=settings.MAX_STEPS, gt=0)


class ScanRunConfig(RunConfig):
    mode: SweepMode
    lambdas: Optional[List[float]] = None
    alphas: Optional[List[float]] = None
    coupling: Optional[float] = Field(default=None, gt=0, alias="lambda")
    grid_size: int = settings.GRID_SIZE
    dt: float = Field(default=settings.DT, gt=0)
    tol: float = Field(default=settings.TOL, gt=0)
    max_steps: int = Field(default=settings.MAX_STEPS, gt=0)
    seed: Optional[str] = None
    t_final: float = Field(default=10.0, gt=0)
    snapshot_every: int = Field(default=100, gt=0)

    @field_validator("grid_size")
    @classmethod
    def validate_grid_size(cls, value: int) -> int:
        return check_grid_size(value)

    @model_validator(mode="after")
    def check_sweep(self) -> "ScanRunConfig":
        if self.mode == SweepMode.LAMBDA:
            if self.lambdas is None:
                raise ValueError("lambda sweeps need lambdas")
            if any(value <= 0 for value in self.lambdas):
                raise ValueError("lambdas must be positive")
            if list(self.lambdas) != sorted(self.lambdas):
                raise ValueError("lambdas must be sorted")
            alphas = [0.0]
        else:
            if self.alphas is None or self.coupling is None:
                raise ValueError("alpha sweeps need alphas and lambda")
            alphas = self.alphas
        for alpha in alphas:
            phase = kinetic_phase(self.dt, self.grid_size, alpha)
            if phase >= settings.KINETIC_PHASE_LIMIT:
                raise ValueError(f"dt={self.dt} on N={self.grid_size} exceeds the kinetic phase limit")
        return self


class ConvergeRunConfig(RunConfig):
    coupling: float = Field(gt=0, alias="lambda")
    alpha: float = 0.0
    grid_sizes: List[int]
    dts: List[float]
    t_final: float = Field(default=1.0, gt=0)

    @field_validator("grid_sizes")
    @classmethod
    def check_grids(cls, values: List[int]) -> List[int]:
        if not values:
            raise ValueError("at least one grid size is required")
        return [check_grid_size(value) for value in values]

    @field_validator("dts")
    @classmethod
    def check_dts(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("at least one dt is required")
        if any(value <= 0 for value in values):
            raise ValueError("dts must be positive")
        if any(later >= earlier for earlier, later in zip(values, values[1:])):
            raise ValueError("dts must be strictly descending")
        return values

    @model_validator(mode="after")
    def check_kinetic_phase(self) -> "ConvergeRunConfig":
        coarsest = min(self.grid_sizes)
        if kinetic_phase(self.dts[0], coarsest, self.alpha) >= settings.KINETIC_PHASE_LIMIT:
            raise ValueError(f"dt={self.dts[0]} on N={coarsest} exceeds the kinetic phase limit")
        return self
