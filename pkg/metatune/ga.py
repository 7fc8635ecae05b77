"""
Generational genetic algorithm over normalized genotypes.

Each generation keeps the `elitism` best individuals unchanged and fills the rest with
offspring of two tournament-selected parents: uniform crossover with probability
`crossover_rate` (else a clone of the first parent), then, with probability
`mutation_rate`, one uniformly chosen gene is mutated (Gaussian step for numeric genes,
uniform resample for categorical genes).

Binary feature-subset selection reuses the same machinery on categorical {off, on} genes.
"""

import logging
import math
from dataclasses import dataclass
from logging import Logger
from typing import Iterable, Optional, Sequence

import numpy as np

from metatune.errors import EmptyMaskError, InvalidSpaceError
from metatune.optimizer import AskTellOptimizer
from metatune.search_space import Configuration, Genotype, ParamKind, ParamSpec, SearchSpace, clip

log: Logger = logging.getLogger(__name__)


@dataclass
class GaConfig:
    population: int = 30
    """Number of chromosomes"""

    generations: int = 25
    """Ask/tell rounds, the initial population included"""

    crossover_rate: float = 0.8
    """Probability that an offspring is produced by uniform crossover"""

    mutation_rate: float = 0.1
    """Probability that an offspring has one gene mutated"""

    tournament_size: int = 3
    """Contenders drawn (without replacement) per parent selection"""

    elitism: int = 1
    """Best individuals copied unchanged into the next generation"""

    mutation_sigma: float = 0.1
    """Standard deviation of the Gaussian step on numeric genes"""

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not (0.0 <= self.crossover_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise ValueError("crossover_rate and mutation_rate must lie in [0, 1]")
        if not 1 <= self.tournament_size <= self.population:
            raise ValueError("tournament_size must lie in [1, population]")
        if not 0 <= self.elitism <= self.population:
            raise ValueError("elitism must lie in [0, population]")
        if self.elitism == self.population:
            log.warning("elitism == population: every generation is a copy of the first, nothing evolves")
        if self.mutation_sigma <= 0:
            raise ValueError("mutation_sigma must be > 0")


@dataclass
class GaState:
    population: np.ndarray
    values: Optional[np.ndarray] = None
    generation: int = 0
    best_genotype: Optional[Genotype] = None
    best_value: float = math.inf


class GeneticAlgorithm(AskTellOptimizer):
    def __init__(
            self,
            space: SearchSpace,
            config: Optional[GaConfig] = None,
            seed: int = 0,
            initial: Optional[Iterable[Genotype]] = None
    ):
        super().__init__("GeneticAlgorithm", space, seed)
        self.config: GaConfig = config or GaConfig()

        population: np.ndarray = self.rng.random((self.config.population, len(space)))
        if initial is not None:
            for i, g in enumerate(list(initial)[:self.config.population]):
                population[i] = clip(g)
        self.state: GaState = GaState(population=population)
        self._categorical: np.ndarray = np.array(
            [d.kind == ParamKind.CATEGORICAL for d in space.dims], dtype=bool
        )

    @property
    def best_position(self) -> Optional[Genotype]:
        return self.state.best_genotype

    @property
    def best_value(self) -> float:
        return self.state.best_value

    def _tournament(self, values: np.ndarray) -> int:
        contenders: np.ndarray = self.rng.choice(len(values), size=self.config.tournament_size, replace=False)
        return int(min(contenders, key=lambda i: (values[i], i)))

    def _mutate(self, child: np.ndarray):
        j: int = int(self.rng.integers(len(child)))
        if self._categorical[j]:
            child[j] = self.rng.random()
        else:
            child[j] = min(1.0, max(0.0, child[j] + self.rng.normal(0.0, self.config.mutation_sigma)))

    def _breed(self, population: np.ndarray, values: np.ndarray) -> np.ndarray:
        cfg: GaConfig = self.config
        ranking: np.ndarray = np.argsort(values, kind="stable")
        # Elites keep their original order
        elites: np.ndarray = np.sort(ranking[:cfg.elitism])
        children: list[np.ndarray] = [population[i].copy() for i in elites]

        d: int = population.shape[1]
        while len(children) < cfg.population:
            first: np.ndarray = population[self._tournament(values)]
            second: np.ndarray = population[self._tournament(values)]
            if self.rng.random() < cfg.crossover_rate:
                take_first: np.ndarray = self.rng.random(d) < 0.5
                child: np.ndarray = np.where(take_first, first, second)
            else:
                child = first.copy()
            if d > 0 and self.rng.random() < cfg.mutation_rate:
                self._mutate(child)
            children.append(child)
        return np.array(children, dtype=float).reshape(cfg.population, d)

    def _propose(self) -> np.ndarray:
        s: GaState = self.state
        if s.values is not None:
            s.population = self._breed(s.population, s.values)
            s.values = None
        return s.population.copy()

    def _absorb(self, batch: np.ndarray, values: np.ndarray):
        s: GaState = self.state
        s.values = values.copy()
        i: int = int(np.argmin(values))
        if s.best_genotype is None or values[i] < s.best_value:
            s.best_genotype = batch[i].copy()
            s.best_value = float(values[i])
        s.generation += 1


FEATURE_OFF: str = "off"
FEATURE_ON: str = "on"


@dataclass(frozen=True)
class FeatureMask:
    """Selection of input features, one bit per feature"""

    bits: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def n_selected(self) -> int:
        return sum(self.bits)

    @property
    def fraction(self) -> float:
        return self.n_selected / len(self.bits)

    @property
    def indices(self) -> list[int]:
        return [i for i, b in enumerate(self.bits) if b]

    def validate(self):
        if not any(self.bits):
            raise EmptyMaskError("Feature mask selects no feature")

    def apply(self, features: np.ndarray) -> np.ndarray:
        self.validate()
        if features.shape[1] != len(self.bits):
            raise ValueError(f"Mask of {len(self.bits)} bits applied to {features.shape[1]} features")
        return features[:, np.asarray(self.bits, dtype=bool)]

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @staticmethod
    def all(n_features: int) -> "FeatureMask":
        return FeatureMask((True,) * n_features)

    @staticmethod
    def from_configuration(config: Configuration, space: SearchSpace) -> "FeatureMask":
        return FeatureMask(tuple(config[name] == FEATURE_ON for name in space.names))


def feature_selection_space(n_features: int, names: Optional[Sequence[str]] = None) -> SearchSpace:
    """One {off, on} categorical dimension per input feature

    Raises:
        InvalidSpaceError: if there is no feature
    """
    if n_features < 1:
        raise InvalidSpaceError("Feature selection needs at least one feature")
    if names is None:
        names = [f"feature_{i}" for i in range(n_features)]
    if len(names) != n_features:
        raise InvalidSpaceError(f"{len(names)} names given for {n_features} features")
    return SearchSpace(tuple(
        ParamSpec(f"use_{name}", ParamKind.CATEGORICAL, choices=(FEATURE_OFF, FEATURE_ON))
        for name in names
    ))
