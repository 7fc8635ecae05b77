"""
Analytic test functions for validating the optimizers without any training.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from metatune.search_space import Genotype, ParamKind, ParamSpec, SearchSpace


class BenchmarkKind(Enum):
    SPHERE = "sphere"
    RASTRIGIN = "rastrigin"
    ROSENBROCK = "rosenbrock"


def sphere(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * x))


def rastrigin(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(10.0 * len(x) + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def rosenbrock(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


FUNCTIONS: dict[BenchmarkKind, Callable[[np.ndarray], float]] = {
    BenchmarkKind.SPHERE: sphere,
    BenchmarkKind.RASTRIGIN: rastrigin,
    BenchmarkKind.ROSENBROCK: rosenbrock,
}

DOMAINS: dict[BenchmarkKind, tuple[float, float]] = {
    BenchmarkKind.SPHERE: (-5.12, 5.12),
    BenchmarkKind.RASTRIGIN: (-5.12, 5.12),
    BenchmarkKind.ROSENBROCK: (-2.048, 2.048),
}


def benchmark(kind: BenchmarkKind | str, x: Sequence[float] | np.ndarray) -> float:
    """Value of a benchmark function; global minimum 0 at the origin (sphere, rastrigin)
    or at all-ones (rosenbrock)"""
    return FUNCTIONS[BenchmarkKind(kind)](np.asarray(x, dtype=float))


@dataclass
class BenchmarkObjective:
    """Evaluates genotypes on a benchmark, mapping [0, 1]^d onto a box

    The box defaults to the function's customary domain.
    """

    kind: BenchmarkKind
    dims: int
    lower: Optional[float] = None
    upper: Optional[float] = None

    def __post_init__(self):
        self.kind = BenchmarkKind(self.kind)
        if self.dims < 1:
            raise ValueError("dims must be >= 1")
        default_lo, default_hi = DOMAINS[self.kind]
        self.lower = default_lo if self.lower is None else self.lower
        self.upper = default_hi if self.upper is None else self.upper
        if self.upper <= self.lower:
            raise ValueError("upper must be > lower")

    def space(self) -> SearchSpace:
        return SearchSpace(tuple(
            ParamSpec(f"x{i}", ParamKind.CONTINUOUS, lower=self.lower, upper=self.upper)
            for i in range(self.dims)
        ))

    def __call__(self, genotype: Genotype) -> float:
        x: np.ndarray = self.lower + np.asarray(genotype, dtype=float) * (self.upper - self.lower)
        return benchmark(self.kind, x)

    def batch(self, genotypes: list[Genotype]) -> list[float]:
        return [self(g) for g in genotypes]
