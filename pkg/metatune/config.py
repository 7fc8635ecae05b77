"""
Experiment configuration.

An experiment is a JSON file validated by `ExperimentConfig`. Algorithm settings reuse the
dataclasses of their modules (`PsoConfig`, `GaConfig`, `TrainerConfig`, ...), so their
defaults and `__post_init__` checks apply unchanged.
"""

import json
import logging
from logging import Logger
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from metatune.benchmarks import BenchmarkKind
from metatune.dataset import CsvSchema
from metatune.ga import GaConfig
from metatune.pso import PsoConfig
from metatune.search_space import SearchSpace, default_anxiety_space, extended_anxiety_space
from metatune.synthetic import SynthSpec
from metatune.trainer import ObjectiveSpec, TrainerConfig

log: Logger = logging.getLogger(__name__)

PROJECT_DIR: Path = Path(__file__).parent.parent
OUTPUT_DIR: Path = PROJECT_DIR / "output"

OptimizerName = Literal["pso", "ga", "hybrid", "sh", "hyperband", "feature_select", "baseline"]
OPTIMIZER_NAMES: tuple[str, ...] = ("pso", "ga", "hybrid", "sh", "hyperband", "feature_select", "baseline")


class DataSource(BaseModel):
    """Either a CSV file or a synthetic generator spec"""

    path: Optional[Path] = None
    csv_schema: CsvSchema = Field(default_factory=CsvSchema)
    synthetic: Optional[SynthSpec] = None

    @model_validator(mode="after")
    def _one_source(self) -> "DataSource":
        if (self.path is None) == (self.synthetic is None):
            raise ValueError("dataset needs exactly one of 'path' or 'synthetic'")
        if self.path is not None and not self.path.exists():
            raise ValueError(f"dataset file {self.path} does not exist")
        return self


class BenchmarkSettings(BaseModel):
    """Optimizer-on-benchmark mode: no data, no training"""

    kind: BenchmarkKind = BenchmarkKind.SPHERE
    dims: int = Field(default=2, ge=1)
    lower: Optional[float] = None
    upper: Optional[float] = None


class HybridSettings(BaseModel):
    budget_split: float = Field(default=0.5, gt=0.0, lt=1.0)
    budget: Optional[int] = Field(default=None, ge=1)


class HalvingSettings(BaseModel):
    eta: int = Field(default=3, ge=2)
    min_budget: int = Field(default=1, ge=1)
    max_budget: int = Field(default=9, ge=1)
    n_candidates: int = Field(default=27, ge=1)
    """Candidates of a single successive-halving pass (sh only)"""


class CvSettings(BaseModel):
    k: int = Field(default=5, ge=2)
    kind: Literal["kfold", "loso"] = "kfold"
    stratified: bool = True
    seed: Optional[int] = Field(default=None, ge=0)
    """Plan shuffling seed; the master seed when None. Runs on one plan can be compared"""


class SmoteSettings(BaseModel):
    enabled: bool = False
    k: int = Field(default=5, ge=1)
    target_ratio: float = Field(default=1.0, gt=0.0)


class ExperimentConfig(BaseModel):
    name: str = "experiment"
    dataset: Optional[DataSource] = None
    benchmark: Optional[BenchmarkSettings] = None

    space: Optional[list[dict[str, Any]]] = None
    """Explicit space entries; overrides `default_space`"""

    default_space: Literal["default", "extended"] = "default"

    optimizer: OptimizerName = "hybrid"
    pso: PsoConfig = Field(default_factory=PsoConfig)
    ga: GaConfig = Field(default_factory=GaConfig)
    hybrid: HybridSettings = Field(default_factory=HybridSettings)
    halving: HalvingSettings = Field(default_factory=HalvingSettings)

    trainer: TrainerConfig = Field(default_factory=TrainerConfig)
    """Base trainer settings; searched hyperparameters override them"""

    objective: ObjectiveSpec = Field(default_factory=ObjectiveSpec)
    cv: CvSettings = Field(default_factory=CvSettings)
    smote: SmoteSettings = Field(default_factory=SmoteSettings)
    normalization_clip: Optional[float] = Field(default=None, gt=0.0)

    repeats: int = Field(default=5, ge=1)
    master_seed: int = Field(default=0, ge=0)
    workers: int = Field(default=1, ge=1)
    output_dir: Path = OUTPUT_DIR / "run"
    cache: bool = True
    cache_dir: Optional[Path] = None
    """Checkpoint cache location, `<output_dir>/cache` when unset"""

    @field_validator("space")
    @classmethod
    def _valid_space(cls, entries: Optional[list[dict[str, Any]]]) -> Optional[list[dict[str, Any]]]:
        if entries is not None:
            SearchSpace.from_entries(entries)
        return entries

    @model_validator(mode="after")
    def _one_objective(self) -> "ExperimentConfig":
        if (self.dataset is None) == (self.benchmark is None):
            raise ValueError("config needs exactly one of 'dataset' or 'benchmark'")
        if self.benchmark is not None and self.optimizer in ("feature_select", "baseline"):
            raise ValueError(f"optimizer '{self.optimizer}' needs a dataset")
        if self.halving.max_budget < self.halving.min_budget:
            raise ValueError("halving.max_budget must be >= halving.min_budget")
        return self

    def search_space(self) -> SearchSpace:
        if self.space is not None:
            return SearchSpace.from_entries(self.space)
        if self.default_space == "extended":
            return extended_anxiety_space()
        return default_anxiety_space()

    def resolved_cache_dir(self) -> Path:
        return self.cache_dir if self.cache_dir is not None else self.output_dir / "cache"

    @staticmethod
    def load(path: Path) -> "ExperimentConfig":
        """Reads and validates an experiment file

        Raises:
            FileNotFoundError: if the file does not exist
            pydantic.ValidationError: if the content is invalid
        """
        path = Path(path)
        if not path.exists():
            log.error(f"Experiment config not found: {path}")
            raise FileNotFoundError(f"Experiment config not found: {path}")
        with open(path, encoding="utf-8") as f:
            data: dict = json.load(f)
        # Dataset paths are relative to the config file
        source: Optional[dict] = data.get("dataset")
        if isinstance(source, dict) and source.get("path") and not Path(source["path"]).is_absolute():
            source["path"] = str(path.parent / source["path"])
        config: ExperimentConfig = ExperimentConfig.model_validate(data)
        log.info(f"Loaded experiment '{config.name}' from {path}")
        return config

    def dump(self, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.model_dump_json(indent=2))
