import logging
import math
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from logging import Logger
from typing import Callable, Generic, Optional, Sequence, TypeVar

log: Logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class Outcome(Generic[R]):
    result: Optional[R] = None
    error: Optional[Exception] = None

    @property
    def ok(self) -> bool:
        return self.error is None


class Job(Generic[T, R]):
    """One unit of work; never raises, the error is kept in the outcome"""

    def __init__(self, fn: Callable[[T], R], item: T):
        self.fn = fn
        self.item = item

    def run(self) -> Outcome[R]:
        try:
            return Outcome(result=self.fn(self.item))
        except Exception as e:
            return Outcome(error=e)


def parallel_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[Outcome[R]]:
    """Runs fn over items with up to `workers` threads and returns outcomes in input order

    Raises:
        ValueError: if workers < 1
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs: list[Job[T, R]] = [Job(fn, item) for item in items]
    if workers == 1 or len(jobs) <= 1:
        return [job.run() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures: list[Future] = [pool.submit(job.run) for job in jobs]
        # Generation barrier: collect in submission order
        return [f.result() for f in futures]


def parallel_evaluate(
        batch: Sequence[T],
        evaluator: Callable[[T], float],
        workers: int = 1
) -> list[float]:
    """Evaluates a batch concurrently; a failing candidate scores +inf and the batch goes on"""
    values: list[float] = []
    for i, outcome in enumerate(parallel_map(evaluator, batch, workers)):
        if outcome.ok:
            values.append(float(outcome.result))  # type: ignore[arg-type]
        else:
            log.warning(f"Candidate {i} failed: {outcome.error}")
            values.append(math.inf)
    return values
