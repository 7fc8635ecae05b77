"""
Particle swarm optimization over normalized genotypes.

Synchronous global-best swarm: a generation is asked as a whole, evaluated (possibly
in parallel) and told back, then velocities and positions are updated with

    v' = w·v + c1·r1⊙(pbest − x) + c2·r2⊙(gbest − x)
    x' = clip(x + clamp(v', ±v_max), 0, 1)

Engine convention: values are minimized.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from metatune.optimizer import AskTellOptimizer
from metatune.search_space import Genotype, SearchSpace, clip


@dataclass
class PsoConfig:
    swarm_size: int = 20
    """Number of particles"""

    iterations: int = 30
    """Ask/tell rounds, the initial swarm included"""

    c1: float = 1.5
    """Cognitive coefficient (pull towards the personal best)"""

    c2: float = 1.5
    """Social coefficient (pull towards the global best)"""

    w: float = 0.7
    """Inertia weight"""

    v_max: float = 0.5
    """Maximum speed per dimension, as a fraction of the normalized range"""

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if min(self.c1, self.c2, self.w) < 0:
            raise ValueError("c1, c2 and w must be >= 0")
        if self.v_max <= 0:
            raise ValueError("v_max must be > 0")


@dataclass
class PsoState:
    positions: np.ndarray
    velocities: np.ndarray
    pbest_positions: np.ndarray
    pbest_values: np.ndarray
    gbest_position: Optional[Genotype] = None
    gbest_value: float = math.inf
    iteration: int = 0


class ParticleSwarm(AskTellOptimizer):
    def __init__(
            self,
            space: SearchSpace,
            config: Optional[PsoConfig] = None,
            seed: int = 0,
            initial: Optional[Iterable[Genotype]] = None
    ):
        super().__init__("ParticleSwarm", space, seed)
        self.config: PsoConfig = config or PsoConfig()

        n: int = self.config.swarm_size
        d: int = len(space)
        positions: np.ndarray = self.rng.random((n, d))
        if initial is not None:
            for i, g in enumerate(list(initial)[:n]):
                positions[i] = clip(g)

        self.state: PsoState = PsoState(
            positions=positions,
            velocities=np.zeros((n, d)),
            pbest_positions=positions.copy(),
            pbest_values=np.full(n, math.inf),
        )

    @property
    def best_position(self) -> Optional[Genotype]:
        return self.state.gbest_position

    @property
    def best_value(self) -> float:
        return self.state.gbest_value

    def _propose(self) -> np.ndarray:
        s: PsoState = self.state
        if s.iteration == 0:
            return s.positions.copy()

        cfg: PsoConfig = self.config
        r1: np.ndarray = self.rng.random(s.positions.shape)
        r2: np.ndarray = self.rng.random(s.positions.shape)
        v: np.ndarray = (
            cfg.w * s.velocities
            + cfg.c1 * r1 * (s.pbest_positions - s.positions)
            + cfg.c2 * r2 * (s.gbest_position - s.positions)
        )
        s.velocities = np.clip(v, -cfg.v_max, cfg.v_max)
        s.positions = np.clip(s.positions + s.velocities, 0.0, 1.0)
        return s.positions.copy()

    def _absorb(self, batch: np.ndarray, values: np.ndarray):
        s: PsoState = self.state
        improved: np.ndarray = values < s.pbest_values
        s.pbest_positions[improved] = batch[improved]
        s.pbest_values[improved] = values[improved]

        # np.argmin returns the lowest index among ties
        i: int = int(np.argmin(s.pbest_values))
        if s.gbest_position is None or s.pbest_values[i] < s.gbest_value:
            s.gbest_position = s.pbest_positions[i].copy()
            s.gbest_value = float(s.pbest_values[i])
        s.iteration += 1
