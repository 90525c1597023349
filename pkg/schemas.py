"""
Pydantic schemas for experiment configs and run outputs
"""
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from exceptions import ConfigError
from services.objectives import SET_KINDS

MATROID_FAMILIES = ("uniform_matroid", "partition_matroid")


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


# =============================================================================
# CONSTRAINTS
# =============================================================================

class BoxSpec(_Spec):
    """Either an explicit upper corner or dim copies of value."""
    family: Literal["box"]
    upper: Optional[List[float]] = None
    dim: Optional[int] = Field(default=None, ge=1)
    value: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def upper_or_dim(self):
        if (self.upper is None) == (self.dim is None):
            raise ValueError("box needs exactly one of 'upper' or 'dim'")
        return self


class ScaledSimplexSpec(_Spec):
    family: Literal["scaled_simplex"]
    budget: float = Field(gt=0)
    dim: int = Field(ge=1)
    caps: Optional[List[float]] = None


class UniformMatroidSpec(_Spec):
    family: Literal["uniform_matroid"]
    rank: int = Field(ge=1)
    dim: int = Field(ge=1)


class PartitionMatroidSpec(_Spec):
    family: Literal["partition_matroid"]
    parts: List[List[int]]
    caps: List[int]


class GraphicMatroidSpec(_Spec):
    """Forest matroid of a graph; LMO-only."""
    family: Literal["graphic_matroid"]
    nodes: int = Field(ge=2)
    edges: List[Tuple[int, int]]


ConstraintSpec = Annotated[
    Union[BoxSpec, ScaledSimplexSpec, UniformMatroidSpec, PartitionMatroidSpec, GraphicMatroidSpec],
    Field(discriminator="family"),
]


def constraint_dim(spec: ConstraintSpec) -> int:
    if isinstance(spec, BoxSpec):
        return len(spec.upper) if spec.upper is not None else spec.dim
    if isinstance(spec, PartitionMatroidSpec):
        return sum(len(p) for p in spec.parts)
    if isinstance(spec, GraphicMatroidSpec):
        return len(spec.edges)
    return spec.dim


# =============================================================================
# OBJECTIVES / ADVERSARY / ORACLE
# =============================================================================

class ObjectiveSpec(_Spec):
    kind: Literal["quadratic", "linear", "coverage", "facility_location", "modular"]
    d: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)
    sigma0: Optional[float] = Field(default=None, ge=0)
    coupling: Optional[float] = Field(default=None, ge=0)
    weights: Optional[List[float]] = None
    universe: Optional[int] = Field(default=None, ge=1)
    density: Optional[float] = Field(default=None, gt=0, le=1)
    clients: Optional[int] = Field(default=None, ge=1)
    extension: Literal["auto", "exact", "mc"] = "auto"
    mc_samples: Optional[int] = Field(default=None, ge=2)


class AdversarySpec(_Spec):
    family: Literal["fixed", "iid", "shifting"] = "fixed"
    objective: ObjectiveSpec
    period: Optional[int] = Field(default=None, ge=1)
    pieces: int = Field(default=2, ge=1)

    @model_validator(mode="after")
    def shifting_needs_period(self):
        if self.family == "shifting" and self.period is None:
            raise ValueError("shifting adversary needs 'period'")
        return self


class OracleSpec(_Spec):
    oracle: Literal["ftpl", "ogd"] = "ftpl"
    eta0: Optional[float] = Field(default=None, gt=0)


class Overrides(_Spec):
    """Replace derived schedule values; checked against algorithm preconditions before the run."""
    delta: Optional[float] = Field(default=None, gt=0)
    K: Optional[int] = Field(default=None, ge=1)
    L: Optional[int] = Field(default=None, ge=1)
    gamma: float = Field(default=1.0, gt=0)
    c2: Optional[float] = Field(default=None, gt=0)


class OutputSpec(_Spec):
    dir: Optional[str] = None
    stem: str = "run"
    plot: bool = True


# =============================================================================
# EXPERIMENT
# =============================================================================

class ExperimentConfig(_Spec):
    algorithm: Literal["mono_fw", "bandit_fw", "responsive_fw"]
    horizon: int = Field(ge=2)
    seed: int = Field(default=0, ge=0)
    constraint: ConstraintSpec
    adversary: AdversarySpec
    oracle: OracleSpec = Field(default_factory=OracleSpec)
    overrides: Overrides = Field(default_factory=Overrides)
    output: OutputSpec = Field(default_factory=OutputSpec)
    audit: bool = False
    validate_objectives: bool = False

    @model_validator(mode="after")
    def cross_checks(self):
        kind = self.adversary.objective.kind
        family = self.constraint.family
        d = self.adversary.objective.d
        if d is not None and d != constraint_dim(self.constraint):
            raise ValueError(f"objective d={d} does not match constraint dimension {constraint_dim(self.constraint)}")

        if self.algorithm == "responsive_fw":
            if kind not in SET_KINDS:
                raise ValueError("responsive_fw needs a set-function objective")
            if family not in MATROID_FAMILIES:
                raise ValueError("responsive_fw needs a uniform or partition matroid constraint")

        if self.algorithm == "mono_fw":
            if self.overrides.delta is not None or self.overrides.L is not None:
                raise ValueError("mono_fw takes no delta or L override")
            if self.overrides.K is not None and self.overrides.K % 2:
                raise ValueError("mono_fw needs an even K")
            if self.overrides.gamma != 1.0:
                raise ValueError("gamma applies to bandit_fw only")

        if self.algorithm == "responsive_fw" and self.overrides.gamma != 1.0:
            raise ValueError("gamma applies to bandit_fw only")

        if self.oracle.oracle == "ogd" and family == "graphic_matroid":
            raise ValueError("ogd needs a projection; graphic_matroid is LMO-only")
        return self


def parse_config(raw: Union[bytes, str, Dict[str, Any]]) -> ExperimentConfig:
    """Validate a config document; every failure surfaces as ConfigError."""
    try:
        data = orjson.loads(raw) if isinstance(raw, (bytes, str)) else raw
        return ExperimentConfig.model_validate(data)
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e.errors(include_url=False)}") from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read config '{path}': {e}") from None
    return parse_config(raw)


# =============================================================================
# OUTPUTS
# =============================================================================

class RunSummary(BaseModel):
    algorithm: str
    seed: int
    rng: Dict[str, Any]
    t_requested: int
    t_effective: int
    rounds_executed: int
    truncated: bool
    plan: Dict[str, Any]
    geometry: Dict[str, Any]
    constants: Dict[str, float]
    grad_variance_empirical: Optional[float] = None
    benchmark: Dict[str, Any]
    total_reward: float
    final_regret: float
    average_regret: float
    regret_bound: Optional[float] = None
    queries: int
    all_feasible: bool
    exploit_feasible: bool
    wall_clock_seconds: float
    files: Dict[str, str] = Field(default_factory=dict)


class BenchmarkSummary(BaseModel):
    algorithm: str
    seed: int
    t_effective: int
    plan: Dict[str, Any]
    benchmark: Dict[str, Any]
    constants: Dict[str, float]


class ErrorReport(BaseModel):
    error: str
    kind: str
    exit_code: int
