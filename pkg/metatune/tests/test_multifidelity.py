import math
from collections import defaultdict

import numpy as np
import pytest

from metatune.errors import OptimizationFailedError, ScheduleError
from metatune.multifidelity import (BudgetedResult, Rung, hyperband_brackets, hyperband_run, sh_run,
                                    sh_schedule)
from metatune.search_space import Configuration


def candidates(n: int) -> list[Configuration]:
    return [Configuration({"quality": i}) for i in range(n)]


def by_quality(config: Configuration, budget: int, seed: int) -> BudgetedResult:
    # Higher budgets sharpen the estimate; lower quality is better at every budget
    return BudgetedResult(value=config["quality"] + 1.0 / budget, epochs=budget, trained_epochs=budget)


def test_schedule_examples():
    assert sh_schedule(27, 3, 1, 9).rungs == [Rung(1, 9), Rung(3, 3), Rung(9, 1)]
    assert sh_schedule(1, 3, 1, 9).rungs == [Rung(1, 1)]
    assert sh_schedule(10, 2, 1, 4).rungs == [Rung(1, 5), Rung(2, 2), Rung(4, 1)]


def test_nominal_cost():
    assert sh_schedule(27, 3, 1, 9).nominal_cost() == 27 * 1 + 9 * 3 + 3 * 9 == 81


@pytest.mark.parametrize("args", [(0, 3, 1, 9), (5, 1, 1, 9), (5, 3, 0, 9), (5, 3, 4, 2)])
def test_invalid_schedules(args):
    with pytest.raises(ScheduleError):
        sh_schedule(*args)


def test_budgets_increase_and_survivors_decrease():
    for n in (3, 9, 27, 50, 100):
        rungs = sh_schedule(n, 3, 1, 27).rungs
        assert all(a.budget < b.budget for a, b in zip(rungs, rungs[1:]))
        assert all(a.survivors > b.survivors for a, b in zip(rungs, rungs[1:]))
        assert rungs[-1].survivors >= 1


def test_dominant_candidate_wins():
    result = sh_run(candidates(2), by_quality, sh_schedule(2, 2, 1, 4))
    assert result.winner["quality"] == 0
    assert result.winner_id == 0


def test_ties_promote_lower_id():
    result = sh_run(candidates(9), lambda c, b, s: 1.0, sh_schedule(9, 3, 1, 9))
    assert result.trace[0].promoted == [0, 1, 2]
    assert result.winner_id == 0


def test_full_run_trace_and_costs():
    result = sh_run(candidates(27), by_quality, sh_schedule(27, 3, 1, 9))
    assert [len(r.evaluated) for r in result.trace] == [27, 9, 3]
    assert result.trace[0].promoted == list(range(9))
    assert result.winner["quality"] == 0
    assert result.budget == 9
    assert result.value == pytest.approx(1 / 9)
    assert result.nominal_cost == result.trained_epochs == 81


def test_budgets_are_monotone_and_seeds_stable_per_candidate():
    seen = defaultdict(list)

    def recording(config, budget, seed):
        seen[config["quality"]].append((budget, seed))
        return by_quality(config, budget, seed)

    sh_run(candidates(27), recording, sh_schedule(27, 3, 1, 9), seed=5)
    for calls in seen.values():
        budgets = [b for b, _ in calls]
        assert budgets == sorted(budgets) and len(set(budgets)) == len(budgets)
        assert len({s for _, s in calls}) == 1


def test_reported_epochs_must_match_budget():
    with pytest.raises(RuntimeError):
        sh_run(candidates(3), lambda c, b, s: BudgetedResult(0.0, epochs=b + 1), sh_schedule(3, 3, 1, 3))


def test_failures_score_infinite_and_whole_rung_failure_aborts():
    def flaky(config, budget, seed):
        if config["quality"] == 0:
            raise RuntimeError("diverged")
        return float(config["quality"])

    result = sh_run(candidates(3), flaky, sh_schedule(3, 3, 1, 3))
    assert dict(result.trace[0].evaluated)[0] == math.inf
    assert result.winner["quality"] == 1

    def broken(config, budget, seed):
        raise RuntimeError("no")

    with pytest.raises(OptimizationFailedError):
        sh_run(candidates(3), broken, sh_schedule(3, 3, 1, 3))


def test_hyperband_brackets():
    assert hyperband_brackets(3, 9) == [(2, 9, 1), (1, 5, 3), (0, 3, 9)]
    assert hyperband_brackets(3, 1) == [(0, 1, 1)]
    # Start budgets are floored to whole epochs
    assert hyperband_brackets(3, 10) == [(2, 9, 1), (1, 5, 3), (0, 3, 10)]
    with pytest.raises(ScheduleError):
        hyperband_brackets(3, 0)


def sampler(n: int, rng: np.random.Generator) -> list[Configuration]:
    return [Configuration({"quality": float(q)}) for q in rng.random(n)]


def test_hyperband_returns_the_global_best():
    result = hyperband_run(sampler, by_quality, eta=3, max_budget=9, seed=2)
    assert [b.n for b in result.brackets] == [9, 5, 3]
    assert all(result.value <= b.value for b in result.brackets)
    assert result.value == min(b.value for b in result.brackets)
    # Bracket winners are compared at max_budget
    for b in result.brackets:
        assert b.value == pytest.approx(b.result.winner["quality"] + 1 / 9)


def test_hyperband_single_bracket():
    result = hyperband_run(sampler, by_quality, eta=3, max_budget=1, seed=0)
    assert len(result.brackets) == 1
    assert len(result.brackets[0].result.trace) == 1


def test_hyperband_is_deterministic():
    a = hyperband_run(sampler, by_quality, seed=4)
    b = hyperband_run(sampler, by_quality, seed=4)
    assert a.winner == b.winner and a.value == b.value
