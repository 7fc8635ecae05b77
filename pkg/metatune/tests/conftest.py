from pathlib import Path
from typing import Callable

import pytest

from metatune.config import CvSettings, DataSource, ExperimentConfig, HalvingSettings
from metatune.ga import GaConfig
from metatune.pso import PsoConfig
from metatune.synthetic import SynthSpec
from metatune.trainer import TrainerConfig

TINY_DATA = SynthSpec(n_subjects=8, windows_per_subject=4, n_features=4, n_informative=2, class_sep=2.0, seed=1)


@pytest.fixture
def tiny_config(tmp_path: Path) -> Callable[..., ExperimentConfig]:
    """Factory of small end-to-end experiments on a synthetic dataset"""

    def make(name: str = "tiny", **overrides) -> ExperimentConfig:
        settings: dict = dict(
            name=name,
            dataset=DataSource(synthetic=TINY_DATA),
            optimizer="pso",
            pso=PsoConfig(swarm_size=3, iterations=2),
            ga=GaConfig(population=4, generations=2),
            halving=HalvingSettings(eta=2, min_budget=1, max_budget=2, n_candidates=4),
            trainer=TrainerConfig(epochs=2),
            cv=CvSettings(k=2),
            repeats=2,
            output_dir=tmp_path / name,
        )
        settings.update(overrides)
        return ExperimentConfig(**settings)

    return make
