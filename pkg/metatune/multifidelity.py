"""
Successive halving and Hyperband budget allocation.

Budgets are training epochs. Rung r trains the current survivors at
min(min_budget·eta^r, max_budget) epochs and keeps the max(1, floor(n/eta^(r+1))) best,
ranking only values obtained at that rung's budget (ties go to the lower candidate id).
"""

import logging
import math
from dataclasses import dataclass, field
from logging import Logger
from typing import Callable, Optional, TypeVar, Union

import numpy as np
import tqdm

from metatune.errors import OptimizationFailedError, ScheduleError
from metatune.search_space import Configuration
from metatune.seeds import derive_seed

log: Logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")
BatchMap = Callable[[Callable[[T], R], list[T]], list[R]]


@dataclass
class BudgetedResult:
    value: float
    """Objective value at this budget (lower is better, +inf = failed)"""

    epochs: int
    """Epochs the returned value was produced at"""

    trained_epochs: int = 0
    """Epochs actually trained for this call (less than `epochs` when resumed)"""


BudgetedObjective = Callable[[Configuration, int, int], Union[BudgetedResult, float]]
"""(configuration, budget, seed) -> value at that budget"""


@dataclass(frozen=True)
class Rung:
    budget: int
    survivors: int


@dataclass
class HalvingSchedule:
    n: int
    eta: int
    min_budget: int
    max_budget: int
    rungs: list[Rung] = field(default_factory=list)

    def nominal_cost(self) -> int:
        """Candidate-epochs of a cold run (no resume discount)"""
        alive: int = self.n
        cost: int = 0
        for rung in self.rungs:
            cost += alive * rung.budget
            alive = rung.survivors
        return cost


@dataclass
class RungResult:
    rung: int
    budget: int
    evaluated: list[tuple[int, float]]
    promoted: list[int]


@dataclass
class HalvingResult:
    winner: Configuration
    winner_id: int
    value: float
    budget: int
    trace: list[RungResult]
    nominal_cost: int
    trained_epochs: int


def sh_schedule(n: int, eta: int = 3, min_budget: int = 1, max_budget: int = 9) -> HalvingSchedule:
    """Builds the rung ladder of one successive-halving pass

    Raises:
        ScheduleError: on invalid bounds
    """
    if n < 1:
        raise ScheduleError("n must be >= 1")
    if eta < 2:
        raise ScheduleError("eta must be >= 2")
    if min_budget < 1:
        raise ScheduleError("min_budget must be >= 1")
    if max_budget < min_budget:
        raise ScheduleError("max_budget must be >= min_budget")

    rungs: list[Rung] = []
    r: int = 0
    while True:
        budget: int = min(min_budget * eta ** r, max_budget)
        survivors: int = max(1, n // eta ** (r + 1))
        rungs.append(Rung(budget, survivors))
        if budget >= max_budget or survivors == 1:
            break
        r += 1
    return HalvingSchedule(n, eta, min_budget, max_budget, rungs)


def _sequential(fn: Callable[[T], R], items: list[T]) -> list[R]:
    return [fn(item) for item in items]


def _as_result(out: Union[BudgetedResult, float], budget: int) -> BudgetedResult:
    if isinstance(out, BudgetedResult):
        return out
    return BudgetedResult(value=float(out), epochs=budget, trained_epochs=budget)


def _evaluate(objective: BudgetedObjective, config: Configuration, budget: int, seed: int) -> BudgetedResult:
    try:
        result: BudgetedResult = _as_result(objective(config, budget, seed), budget)
    except Exception as e:
        log.warning(f"Evaluation at budget {budget} failed: {e}")
        return BudgetedResult(value=math.inf, epochs=budget, trained_epochs=0)
    if result.epochs != budget:
        raise RuntimeError(f"Objective reported {result.epochs} epochs for a budget of {budget}")
    if math.isnan(result.value):
        result.value = math.inf
    return result


def sh_run(
        candidates: list[Configuration],
        objective: BudgetedObjective,
        schedule: HalvingSchedule,
        seed: int = 0,
        ids: Optional[list[int]] = None,
        map_batch: Optional[BatchMap] = None
) -> HalvingResult:
    """Runs one successive-halving pass over the candidates

    Args:
        candidates (list[Configuration]): configurations to race
        objective (BudgetedObjective): evaluates (configuration, budget, seed)
        schedule (HalvingSchedule): the rung ladder
        seed (int): base seed; each candidate keeps one seed across rungs
        ids (Optional[list[int]]): candidate ids (defaults to 0..n-1), used for tie-breaks
        map_batch (Optional[BatchMap]): order-preserving (parallel) map over a rung

    Raises:
        OptimizationFailedError: if every candidate of a rung fails

    Returns:
        HalvingResult: winner, its value at the last rung and the rung trace
    """
    if len(candidates) == 0:
        raise ScheduleError("No candidate to race")
    if ids is None:
        ids = list(range(len(candidates)))
    by_id: dict[int, Configuration] = dict(zip(ids, candidates))
    mapper: BatchMap = map_batch or _sequential

    alive: list[int] = list(ids)
    trace: list[RungResult] = []
    trained: int = 0
    last_values: dict[int, float] = {}

    for r, rung in enumerate(tqdm.tqdm(schedule.rungs, desc="Successive halving", unit="rung", disable=None, leave=False)):
        results: list[BudgetedResult] = mapper(
            lambda cid: _evaluate(objective, by_id[cid], rung.budget, derive_seed(seed, "candidate", cid)),
            alive,
        )
        trained += sum(res.trained_epochs for res in results)
        evaluated: list[tuple[int, float]] = [(cid, res.value) for cid, res in zip(alive, results)]
        if all(math.isinf(v) for _, v in evaluated):
            raise OptimizationFailedError(f"Every candidate failed at rung {r} (budget {rung.budget})")

        ranked: list[tuple[int, float]] = sorted(evaluated, key=lambda item: (item[1], item[0]))
        promoted: list[int] = [cid for cid, _ in ranked[:rung.survivors]]
        trace.append(RungResult(rung=r, budget=rung.budget, evaluated=evaluated, promoted=promoted))
        log.info(f"Rung {r}: {len(alive)} candidates at {rung.budget} epochs, best {ranked[0][1]:.6g}")

        last_values = dict(evaluated)
        alive = promoted

    winner_id: int = alive[0]
    return HalvingResult(
        winner=by_id[winner_id],
        winner_id=winner_id,
        value=last_values[winner_id],
        budget=schedule.rungs[-1].budget,
        trace=trace,
        nominal_cost=schedule.nominal_cost(),
        trained_epochs=trained,
    )


@dataclass
class BracketTrace:
    s: int
    n: int
    min_budget: int
    result: HalvingResult
    value: float
    """Winner value at max_budget"""


@dataclass
class HyperbandResult:
    winner: Configuration
    value: float
    brackets: list[BracketTrace]


def hyperband_brackets(eta: int, max_budget: int) -> list[tuple[int, int, int]]:
    """(s, n, min_budget) of every bracket, most exploratory first

    Budgets are whole epochs: a bracket starts at floor(max_budget / eta^s), at least 1, so
    when max_budget is not a power of eta the early rungs run slightly below max_budget·eta^-s.
    """
    if max_budget < 1:
        raise ScheduleError("max_budget must be >= 1")
    if eta < 2:
        raise ScheduleError("eta must be >= 2")
    s_max: int = 0
    while eta ** (s_max + 1) <= max_budget:
        s_max += 1
    return [
        (s, -(-(s_max + 1) * eta ** s // (s + 1)), max(1, max_budget // eta ** s))
        for s in range(s_max, -1, -1)
    ]


def hyperband_run(
        sampler: Callable[[int, np.random.Generator], list[Configuration]],
        objective: BudgetedObjective,
        eta: int = 3,
        max_budget: int = 9,
        seed: int = 0,
        map_batch: Optional[BatchMap] = None
) -> HyperbandResult:
    """Runs the Hyperband bracket loop and returns the best bracket winner

    Bracket winners that stopped below `max_budget` are evaluated once more at
    `max_budget` so that brackets are compared at equal fidelity.
    """
    brackets: list[BracketTrace] = []
    next_id: int = 0
    for s, n, min_budget in hyperband_brackets(eta, max_budget):
        rng: np.random.Generator = np.random.default_rng(derive_seed(seed, "bracket", s))
        candidates: list[Configuration] = sampler(n, rng)
        ids: list[int] = list(range(next_id, next_id + n))
        next_id += n

        schedule: HalvingSchedule = sh_schedule(n, eta, min_budget, max_budget)
        result: HalvingResult = sh_run(candidates, objective, schedule, seed=seed, ids=ids, map_batch=map_batch)
        value: float = result.value
        if result.budget < max_budget:
            final: BudgetedResult = (map_batch or _sequential)(
                lambda cid: _evaluate(objective, result.winner, max_budget, derive_seed(seed, "candidate", cid)),
                [result.winner_id],
            )[0]
            value = final.value
        log.info(f"Bracket s={s}: n={n}, min budget {min_budget}, winner value {value:.6g}")
        brackets.append(BracketTrace(s=s, n=n, min_budget=min_budget, result=result, value=value))

    best: BracketTrace = min(brackets, key=lambda b: (b.value, -b.s))
    if math.isinf(best.value):
        raise OptimizationFailedError("Every bracket winner failed at max_budget")
    return HyperbandResult(winner=best.result.winner, value=best.value, brackets=brackets)
