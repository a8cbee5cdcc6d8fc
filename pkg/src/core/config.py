"""
Configuration management for Vertical Consensus Inference runs.
"""
from typing import Dict, List, Optional, Union
from pydantic import BaseModel, Field, field_validator, model_validator
from enum import Enum
import os
from pathlib import Path
from dotenv import load_dotenv
import yaml

from src.core.exceptions import ConfigError, DataIOError

load_dotenv()


class MetricType(str, Enum):
    """Ground metrics between partitions."""
    VOI = "voi"
    BINDER = "binder"


class WeightKind(str, Enum):
    """Barycenter weight schemes."""
    UNIFORM = "uniform"
    ENTROPY = "entropy"
    STRUCTURED = "structured"


class ProjectionKind(str, Enum):
    """Projections onto the simplex."""
    POWER = "power"
    SOFTMAX = "softmax"


class SamplerKind(str, Enum):
    """Shard samplers."""
    GAUSSIAN = "gaussian"
    POISSON = "poisson"


class LayoutKind(str, Enum):
    """Vertical shard layouts."""
    CONTIGUOUS = "contiguous"
    EXPLICIT = "explicit"
    ROUND_ROBIN = "round_robin"


class SupportKind(str, Enum):
    """Consensus support strategies."""
    UNION = "union"
    SUBSAMPLE = "subsample"


class ReportMode(str, Enum):
    """Report table modes."""
    DISTANCE = "distance"
    EXPECTED_VOI = "expected_voi"


class ReferenceKind(str, Enum):
    """What the report measures against."""
    FULL = "full"
    SHARD = "shard"
    PARTITION = "partition"


class GaussianDpmConfig(BaseModel):
    """Truncated DP mixture of diagonal Gaussians.

    prior_mean and rate default to the per-dimension data mean and variance.
    """
    truncation: int = Field(20, ge=2)
    concentration: float = Field(1.0, gt=0)
    prior_mean: Optional[float] = None
    mean_precision_scale: float = Field(0.01, gt=0)
    shape: float = Field(2.0, gt=0)
    rate: Optional[float] = Field(None, gt=0)


class PoissonDpmConfig(BaseModel):
    """Truncated DP mixture of Poisson kernels with Gamma(a, b) rates."""
    truncation: int = Field(20, ge=2)
    concentration: float = Field(1.0, gt=0)
    a: float = Field(1.0, gt=0)
    b: float = Field(1.0, gt=0)


class ChainConfig(BaseModel):
    """MCMC chain length, burn-in and thinning."""
    total_iters: int = Field(1000, ge=1)
    burn_in: int = Field(500, ge=0)
    thin: int = Field(1, ge=1)
    seed: int = 0
    prior_only: bool = False

    @model_validator(mode="after")
    def validate_burn_in(self):
        if self.burn_in >= self.total_iters:
            raise ValueError("burn_in must be smaller than total_iters")
        return self

    @property
    def n_kept(self) -> int:
        return len(range(self.burn_in, self.total_iters, self.thin))


class WeightSchemeConfig(BaseModel):
    """Barycenter weight scheme: kind, entropy-control exponent a and projection."""
    kind: WeightKind = WeightKind.UNIFORM
    a: float = 1.0
    projection: ProjectionKind = ProjectionKind.POWER
    t: float = Field(1.0, ge=1.0)
    temperature: float = Field(1.0, gt=0)

    @property
    def label(self) -> str:
        """File-safe name, e.g. 'uniform', 'structured_a10', 'entropy_softmax0.5'."""
        parts = [self.kind.value]
        if self.kind == WeightKind.STRUCTURED:
            parts.append(f"a{self.a:g}")
        if self.kind != WeightKind.UNIFORM:
            if self.projection == ProjectionKind.SOFTMAX:
                parts.append(f"softmax{self.temperature:g}")
            elif self.t != 1:
                parts.append(f"t{self.t:g}")
        return "_".join(parts)


class ShardLayoutConfig(BaseModel):
    """Vertical shard layout."""
    kind: LayoutKind = LayoutKind.CONTIGUOUS
    n_shards: Optional[int] = Field(None, ge=1)
    dims: Optional[List[List[int]]] = None

    @model_validator(mode="after")
    def validate_layout(self):
        if self.kind == LayoutKind.EXPLICIT:
            if not self.dims:
                raise ValueError("explicit layout requires dims")
            for i, dims in enumerate(self.dims):
                if not dims:
                    raise ValueError(f"shard {i} has no dimensions")
        elif self.n_shards is None:
            raise ValueError(f"{self.kind.value} layout requires n_shards")
        return self


class SupportStrategyConfig(BaseModel):
    """Consensus support: union of shard atoms or a random subsample."""
    kind: SupportKind = SupportKind.UNION
    m: int = Field(500, ge=1)
    seed: int = 0


class BarycenterConfig(BaseModel):
    """Iterative Bregman projection settings."""
    epsilon: Union[float, List[float]] = 0.05
    metric: MetricType = MetricType.VOI
    max_iter: int = Field(10000, ge=1)
    tol: float = Field(1e-9, gt=0)
    require_convergence: bool = False

    @field_validator("epsilon")
    def validate_epsilon(cls, v):
        values = v if isinstance(v, list) else [v]
        if not values or any(e <= 0 for e in values):
            raise ValueError("epsilon values must be positive")
        return v

    def epsilons(self, n_shards: int) -> List[float]:
        if isinstance(self.epsilon, list):
            if len(self.epsilon) != n_shards:
                raise ConfigError(f"{len(self.epsilon)} epsilons given for {n_shards} shards")
            return list(self.epsilon)
        return [float(self.epsilon)] * n_shards


class ReportConfig(BaseModel):
    """Report reference, mode and evaluation solver settings."""
    mode: ReportMode = ReportMode.DISTANCE
    reference: ReferenceKind = ReferenceKind.FULL
    reference_shard: int = Field(0, ge=0)
    reference_path: Optional[str] = None
    epsilon: float = Field(0.05, gt=0)
    range_threshold: int = Field(4, ge=1)
    max_iter: int = Field(100000, ge=1)
    tol: float = Field(1e-9, gt=0)

    @model_validator(mode="after")
    def validate_reference(self):
        if self.reference == ReferenceKind.PARTITION and not self.reference_path:
            raise ValueError("partition reference requires reference_path")
        if self.mode == ReportMode.EXPECTED_VOI and self.reference != ReferenceKind.PARTITION:
            raise ValueError("expected_voi mode needs a partition reference")
        return self


def _default_schemes() -> List[WeightSchemeConfig]:
    return [
        WeightSchemeConfig(kind=WeightKind.UNIFORM),
        WeightSchemeConfig(kind=WeightKind.ENTROPY),
        WeightSchemeConfig(kind=WeightKind.STRUCTURED, a=1.0),
    ]


class RunConfig(BaseModel):
    """Full experiment description."""
    data_path: str
    layout: ShardLayoutConfig
    sampler: SamplerKind = SamplerKind.GAUSSIAN
    gaussian: GaussianDpmConfig = Field(default_factory=GaussianDpmConfig)
    poisson: PoissonDpmConfig = Field(default_factory=PoissonDpmConfig)
    chain: ChainConfig = Field(default_factory=ChainConfig)
    weight_schemes: List[WeightSchemeConfig] = Field(default_factory=_default_schemes)
    barycenter: BarycenterConfig = Field(default_factory=BarycenterConfig)
    support: SupportStrategyConfig = Field(default_factory=SupportStrategyConfig)
    report: ReportConfig = Field(default_factory=ReportConfig)
    fit_full: bool = True
    base_seed: int = 0
    output_dir: str = "runs/latest"
    workers: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def validate_reference_source(self):
        if self.report.reference == ReferenceKind.FULL and not self.fit_full:
            raise ValueError("full-data reference requires fit_full")
        if not self.weight_schemes:
            raise ValueError("at least one weight scheme is required")
        labels = [s.label for s in self.weight_schemes]
        if len(set(labels)) != len(labels):
            raise ValueError(f"weight scheme labels must be unique, got {labels}")
        return self

    @property
    def model(self) -> Union[GaussianDpmConfig, PoissonDpmConfig]:
        return self.gaussian if self.sampler == SamplerKind.GAUSSIAN else self.poisson

    def resolved_workers(self) -> int:
        """Worker count: explicit value, then VCI_WORKERS, then available CPUs."""
        if self.workers is not None:
            return self.workers
        env = os.getenv("VCI_WORKERS")
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise ConfigError(f"VCI_WORKERS must be an integer, got {env!r}")
            if workers < 1:
                raise ConfigError("VCI_WORKERS must be positive")
            return workers
        return os.cpu_count() or 1

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """Load a YAML (or JSON) run configuration."""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
        except FileNotFoundError:
            raise DataIOError(f"Configuration file not found: {path}")
        except yaml.YAMLError as e:
            raise ConfigError(f"Error parsing configuration {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Configuration {path} must be a mapping")
        return cls(**data)

    @classmethod
    def default(cls) -> "RunConfig":
        """Scenario-1 shaped configuration: two one-dimensional shards."""
        return cls(
            data_path="data/scenario1/data.csv",
            layout=ShardLayoutConfig(kind=LayoutKind.CONTIGUOUS, n_shards=2),
            chain=ChainConfig(total_iters=1500, burn_in=1000, thin=1),
        )

    def to_dict(self) -> Dict:
        return self.model_dump(mode="json")
