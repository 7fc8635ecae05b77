import math

import pytest

from metatune.errors import OptimizationFailedError
from metatune.ga import GaConfig
from metatune.hybrid import HybridConfig, hybrid_run
from metatune.pso import PsoConfig
from metatune.search_space import Configuration, ParamKind, ParamSpec, SearchSpace

TARGET: str = "c"

MIXED = SearchSpace((
    ParamSpec("x", ParamKind.CONTINUOUS, 0.0, 1.0),
    ParamSpec("k", ParamKind.CATEGORICAL, choices=("a", "b", "c", "d")),
))


def separable(configs: list[Configuration]) -> list[float]:
    return [(c["x"] - 0.3) ** 2 + (0.0 if c["k"] == TARGET else 1.0) for c in configs]


def test_budget_split_invariant():
    with pytest.raises(ValueError):
        HybridConfig(budget_split=1.0)
    cfg = HybridConfig()
    assert cfg.total_budget() == 30 * 25 + 20 * 30


def test_finds_the_separable_optimum():
    hits = 0
    for seed in range(20):
        result = hybrid_run(MIXED, separable, HybridConfig(), seed=seed)
        config, value = result.final_best
        assert value <= result.stage1_best[1]
        hits += config["k"] == TARGET and abs(config["x"] - 0.3) <= 0.01
    assert hits >= 18


def test_budget_is_respected_and_split():
    calls = []

    def counting(configs):
        calls.append(len(configs))
        return separable(configs)

    cfg = HybridConfig(ga=GaConfig(population=10), pso=PsoConfig(swarm_size=5), budget=200, budget_split=0.5)
    result = hybrid_run(MIXED, counting, cfg, seed=0)
    assert sum(calls) == result.evaluations_used["ga"] + result.evaluations_used["pso"] <= 200
    assert result.evaluations_used["ga"] == 100
    assert result.evaluations_used["pso"] == 100


def test_stage_two_keeps_discrete_values_frozen():
    stage_two = []

    def tracking(configs):
        stage_two.append([c["k"] for c in configs])
        return separable(configs)

    cfg = HybridConfig(ga=GaConfig(population=10, generations=3), pso=PsoConfig(swarm_size=5, iterations=4))
    result = hybrid_run(MIXED, tracking, cfg, seed=1)
    frozen = result.stage1_best[0]["k"]
    for batch in stage_two[-4:]:
        assert set(batch) == {frozen}
    assert result.final_best[0]["k"] == frozen


def test_no_continuous_dims_skips_stage_two():
    space = SearchSpace((
        ParamSpec("n", ParamKind.INTEGER, 1, 4),
        ParamSpec("k", ParamKind.CATEGORICAL, choices=("a", "b")),
    ))
    result = hybrid_run(space, lambda cs: [abs(c["n"] - 2) + (c["k"] == "b") for c in cs], HybridConfig(), seed=0)
    assert result.final_best == result.stage1_best
    assert result.evaluations_used["pso"] == 0


def test_all_failed_stage():
    with pytest.raises(OptimizationFailedError):
        hybrid_run(MIXED, lambda cs: [math.inf] * len(cs), HybridConfig(ga=GaConfig(population=4, generations=2)), seed=0)
