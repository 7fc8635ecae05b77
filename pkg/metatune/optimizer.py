import logging
import math
from logging import Logger
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import tqdm

from metatune.errors import InvalidInputError, NoResultError, ProtocolError
from metatune.search_space import Configuration, Genotype, SearchSpace, decode

BatchEvaluator = Callable[[list[Genotype]], Sequence[Optional[float]]]
"""Evaluates a batch of genotypes, returning one value per genotype (None or +inf = failed)"""


def check_values(values: Iterable[Optional[float]], expected: int) -> np.ndarray:
    """Validates told values: failures (None, +inf) become +inf, NaN and -inf are rejected

    Args:
        values (Iterable[Optional[float]]): values told by the caller
        expected (int): size of the last asked batch

    Raises:
        ProtocolError: if the number of values does not match the batch
        InvalidInputError: if a value is NaN or -inf

    Returns:
        np.ndarray: the values as floats
    """
    out: list[float] = []
    for v in values:
        if v is None:
            out.append(math.inf)
            continue
        v = float(v)
        if math.isnan(v) or v == -math.inf:
            raise InvalidInputError(f"Told value {v} is not finite")
        out.append(v)
    if len(out) != expected:
        raise ProtocolError(f"Told {len(out)} values for a batch of {expected}")
    return np.asarray(out, dtype=float)


class AskTellOptimizer:
    """Shared ask/tell bookkeeping of the population-based optimizers

    Subclasses implement `_propose` (next batch) and `_absorb` (update from values),
    and expose the incumbent through `best_position` / `best_value`.
    """

    def __init__(self, name: str, space: SearchSpace, seed: int):
        self.logger: Logger = logging.getLogger(name)
        self.space: SearchSpace = space
        self.seed: int = seed
        self.rng: np.random.Generator = np.random.default_rng(seed)

        self.rounds: int = 0
        self.evaluations: int = 0
        self.history: list[float] = []
        self._asked: Optional[np.ndarray] = None

    @property
    def best_position(self) -> Optional[Genotype]:
        raise NotImplementedError

    @property
    def best_value(self) -> float:
        raise NotImplementedError

    def _propose(self) -> np.ndarray:
        raise NotImplementedError

    def _absorb(self, batch: np.ndarray, values: np.ndarray):
        raise NotImplementedError

    def ask(self) -> list[Genotype]:
        if self._asked is not None:
            raise ProtocolError("Previous batch has not been told yet")
        batch: np.ndarray = self._propose()
        self._asked = batch
        return [row.copy() for row in batch]

    def tell(self, values: Iterable[Optional[float]]):
        if self._asked is None:
            raise ProtocolError("Nothing was asked")
        told: np.ndarray = check_values(values, len(self._asked))
        self._absorb(self._asked, told)
        self._asked = None
        self.rounds += 1
        self.evaluations += len(told)
        self.history.append(self.best_value)
        self.logger.debug(f"Round {self.rounds}: best {self.best_value:.6g}")

    def best(self) -> tuple[Configuration, float]:
        """Decoded incumbent and its value

        Raises:
            NoResultError: if nothing was told yet
        """
        position: Optional[Genotype] = self.best_position
        if self.rounds == 0 or position is None:
            raise NoResultError("No batch has been told yet")
        return decode(self.space, position), self.best_value

    def run(self, evaluate: BatchEvaluator, rounds: int, desc: str = "Search") -> tuple[Configuration, float]:
        """Runs `rounds` ask/tell rounds against a batch evaluator"""
        for _ in tqdm.tqdm(range(rounds), desc=desc, unit="round", disable=None, leave=False):
            batch: list[Genotype] = self.ask()
            self.tell(evaluate(batch))
        self.logger.info(f"{desc}: {self.evaluations} evaluations, best {self.best_value:.6g}")
        return self.best()
