"""
Two-stage GA → PSO search.

Stage 1 runs the genetic algorithm over the whole mixed space. The integer and
categorical assignments of its best configuration are then frozen and stage 2 runs a
particle swarm over the continuous dimensions only, with one particle injected at
stage 1's continuous values so the final result can never be worse than stage 1's.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from logging import Logger
from typing import Callable, Optional, Sequence

import numpy as np

from metatune.errors import OptimizationFailedError
from metatune.ga import GaConfig, GeneticAlgorithm
from metatune.pso import ParticleSwarm, PsoConfig
from metatune.search_space import Configuration, Genotype, ParamKind, SearchSpace, decode
from metatune.seeds import derive_seed

log: Logger = logging.getLogger(__name__)

ConfigEvaluator = Callable[[list[Configuration]], Sequence[Optional[float]]]
"""Evaluates a batch of configurations (None or +inf = failed)"""


@dataclass
class HybridConfig:
    ga: GaConfig = field(default_factory=GaConfig)
    """Stage 1 settings (generations are derived from the budget)"""

    pso: PsoConfig = field(default_factory=PsoConfig)
    """Stage 2 settings (iterations are derived from the budget)"""

    budget_split: float = 0.5
    """Fraction of the total evaluations given to stage 1"""

    budget: Optional[int] = None
    """Total objective evaluations; defaults to the GA budget plus the PSO budget"""

    def __post_init__(self):
        if not 0.0 < self.budget_split < 1.0:
            raise ValueError("budget_split must lie in (0, 1)")
        if self.budget is not None and self.budget < self.ga.population:
            raise ValueError("budget must cover at least one GA generation")

    def total_budget(self) -> int:
        if self.budget is not None:
            return self.budget
        return self.ga.population * self.ga.generations + self.pso.swarm_size * self.pso.iterations


@dataclass
class HybridResult:
    stage1_best: tuple[Configuration, float]
    final_best: tuple[Configuration, float]
    evaluations_used: dict[str, int]
    history: list[float] = field(default_factory=list)


def hybrid_run(space: SearchSpace, objective: ConfigEvaluator, cfg: HybridConfig, seed: int) -> HybridResult:
    """Runs GA on the full space, then PSO on the continuous dims with discrete values frozen

    Args:
        space (SearchSpace): the full mixed space
        objective (ConfigEvaluator): batch evaluator, lower is better
        cfg (HybridConfig): stage settings and budget
        seed (int): master seed of the run

    Raises:
        OptimizationFailedError: if every evaluation of a stage failed

    Returns:
        HybridResult: stage 1 best, final best and per-stage evaluation counts
    """
    budget: int = cfg.total_budget()
    generations: int = max(1, round(budget * cfg.budget_split) // cfg.ga.population)
    ga: GeneticAlgorithm = GeneticAlgorithm(
        space, replace(cfg.ga, generations=generations), seed=derive_seed(seed, "hybrid", "ga")
    )

    def evaluate_full(batch: list[Genotype]) -> Sequence[Optional[float]]:
        return objective([decode(space, g) for g in batch])

    stage1_config, stage1_value = ga.run(evaluate_full, generations, desc="Hybrid stage 1 (GA)")
    if math.isinf(stage1_value):
        raise OptimizationFailedError("Every stage 1 evaluation failed")
    stage1_genotype: Genotype = ga.best_position  # type: ignore[assignment]

    used: dict[str, int] = {"ga": ga.evaluations, "pso": 0}
    continuous_space, continuous_idx = space.project([ParamKind.CONTINUOUS])
    iterations: int = (budget - ga.evaluations) // cfg.pso.swarm_size

    if not continuous_idx or iterations < 1:
        log.info("Hybrid stage 2 skipped (no continuous dimension or no budget left)")
        return HybridResult(
            stage1_best=(stage1_config, stage1_value),
            final_best=(stage1_config, stage1_value),
            evaluations_used=used,
            history=list(ga.history),
        )

    frozen: dict = {name: stage1_config[name] for i, name in enumerate(space.names) if i not in continuous_idx}
    log.info(f"Hybrid stage 2: frozen {frozen}, refining {continuous_space.names}")

    def evaluate_continuous(batch: list[Genotype]) -> Sequence[Optional[float]]:
        configs: list[Configuration] = []
        for g in batch:
            refined: Configuration = decode(continuous_space, g)
            config: Configuration = Configuration({
                name: refined[name] if name in refined else frozen[name] for name in space.names
            })
            for name, value in frozen.items():
                if config[name] != value:
                    raise AssertionError(f"Stage 2 altered frozen '{name}'")
            configs.append(config)
        return objective(configs)

    swarm: ParticleSwarm = ParticleSwarm(
        continuous_space,
        replace(cfg.pso, iterations=iterations),
        seed=derive_seed(seed, "hybrid", "pso"),
        initial=[np.asarray(stage1_genotype)[continuous_idx]],
    )
    refined_config, stage2_value = swarm.run(evaluate_continuous, iterations, desc="Hybrid stage 2 (PSO)")
    used["pso"] = swarm.evaluations
    if math.isinf(stage2_value):
        raise OptimizationFailedError("Every stage 2 evaluation failed")

    final: tuple[Configuration, float] = (stage1_config, stage1_value)
    if stage2_value < stage1_value:
        merged: Configuration = refined_config.merged(frozen)
        final = (Configuration({name: merged[name] for name in space.names}), stage2_value)

    return HybridResult(
        stage1_best=(stage1_config, stage1_value),
        final_best=final,
        evaluations_used=used,
        history=list(ga.history) + [min(v, stage1_value) for v in swarm.history],
    )
