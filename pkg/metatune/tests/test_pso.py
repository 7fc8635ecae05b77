import math

import numpy as np
import pytest

from metatune.errors import InvalidInputError, NoResultError, ProtocolError
from metatune.pso import ParticleSwarm, PsoConfig
from metatune.search_space import ParamKind, ParamSpec, SearchSpace, decode


def unit_space(d: int) -> SearchSpace:
    return SearchSpace(tuple(ParamSpec(f"x{i}", ParamKind.CONTINUOUS, 0.0, 1.0) for i in range(d)))


def centered_sphere(g: np.ndarray) -> float:
    return float(np.sum((np.asarray(g) - 0.5) ** 2))


def test_defaults():
    cfg = PsoConfig()
    assert (cfg.swarm_size, cfg.iterations, cfg.c1, cfg.c2, cfg.w) == (20, 30, 1.5, 1.5, 0.7)
    assert cfg.v_max == 0.5


@pytest.mark.parametrize("kwargs", [dict(swarm_size=1), dict(iterations=0), dict(w=-0.1), dict(v_max=0.0)])
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        PsoConfig(**kwargs)


def test_protocol_errors():
    swarm = ParticleSwarm(unit_space(2), PsoConfig(swarm_size=3), seed=0)
    with pytest.raises(ProtocolError):
        swarm.tell([1.0, 2.0, 3.0])
    swarm.ask()
    with pytest.raises(ProtocolError):
        swarm.ask()
    with pytest.raises(ProtocolError):
        swarm.tell([1.0, 2.0])


@pytest.mark.parametrize("bad", [-math.inf, math.nan])
def test_non_finite_values_rejected(bad):
    swarm = ParticleSwarm(unit_space(2), PsoConfig(swarm_size=3), seed=0)
    swarm.ask()
    with pytest.raises(InvalidInputError):
        swarm.tell([1.0, bad, 3.0])


def test_failed_values_count_as_infinite():
    swarm = ParticleSwarm(unit_space(1), PsoConfig(swarm_size=3), seed=0)
    batch = swarm.ask()
    swarm.tell([None, math.inf, 4.0])
    config, value = swarm.best()
    assert value == 4.0
    assert config == decode(swarm.space, batch[2])


def test_best_before_tell():
    with pytest.raises(NoResultError):
        ParticleSwarm(unit_space(2), seed=0).best()


def test_best_is_argmin_with_index_tie_break():
    swarm = ParticleSwarm(unit_space(2), PsoConfig(swarm_size=3), seed=1)
    batch = swarm.ask()
    swarm.tell([3.0, 1.0, 2.0])
    assert swarm.best() == (decode(swarm.space, batch[1]), 1.0)

    tied = ParticleSwarm(unit_space(2), PsoConfig(swarm_size=3), seed=1)
    batch = tied.ask()
    tied.tell([5.0, 5.0, 5.0])
    assert tied.best()[0] == decode(tied.space, batch[0])


def test_worse_values_keep_global_best():
    swarm = ParticleSwarm(unit_space(2), PsoConfig(swarm_size=4), seed=2)
    swarm.ask()
    swarm.tell([1.0, 2.0, 3.0, 4.0])
    best = swarm.best()
    swarm.ask()
    swarm.tell([10.0] * 4)
    assert swarm.best() == best


def test_stationary_particle():
    swarm = ParticleSwarm(unit_space(2), PsoConfig(swarm_size=2), seed=0, initial=[[0.4, 0.6], [0.4, 0.6]])
    swarm.ask()
    swarm.tell([1.0, 1.0])
    again = swarm.ask()
    assert np.array_equal(again[0], [0.4, 0.6])
    assert np.array_equal(swarm.state.velocities, np.zeros((2, 2)))


def test_pure_social_pull_moves_towards_global_best():
    cfg = PsoConfig(swarm_size=5, w=0.0, c1=0.0, c2=1.0, v_max=1.0)
    swarm = ParticleSwarm(unit_space(3), cfg, seed=4)
    start = np.array(swarm.ask())
    swarm.tell([5.0, 1.0, 4.0, 3.0, 2.0])
    gbest = start[1]
    moved = np.array(swarm.ask())
    lo = np.minimum(start, gbest)
    hi = np.maximum(start, gbest)
    assert np.all(moved >= lo - 1e-15) and np.all(moved <= hi + 1e-15)
    assert np.array_equal(moved[1], gbest)


def test_positions_stay_in_box_and_velocities_clamped():
    corners = [[0.0, 1.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0]]
    cfg = PsoConfig(swarm_size=4, v_max=0.2)
    swarm = ParticleSwarm(unit_space(2), cfg, seed=9, initial=corners)
    rng = np.random.default_rng(0)
    for _ in range(15):
        batch = np.array(swarm.ask())
        assert np.all((batch >= 0.0) & (batch <= 1.0))
        assert np.all(np.abs(swarm.state.velocities) <= cfg.v_max)
        swarm.tell(rng.random(4).tolist())


def test_global_best_is_monotone():
    swarm = ParticleSwarm(unit_space(2), PsoConfig(swarm_size=10), seed=7)
    swarm.run(lambda batch: [centered_sphere(g) for g in batch], rounds=20)
    assert all(a >= b for a, b in zip(swarm.history, swarm.history[1:]))
    assert swarm.history[-1] <= swarm.history[0]
    assert swarm.evaluations == 200


def test_trajectory_is_reproducible():
    def trajectory(seed: int) -> list[np.ndarray]:
        swarm = ParticleSwarm(unit_space(3), PsoConfig(swarm_size=6), seed=seed)
        out = []
        for _ in range(5):
            batch = swarm.ask()
            out.extend(batch)
            swarm.tell([centered_sphere(g) for g in batch])
        return out

    assert all(np.array_equal(a, b) for a, b in zip(trajectory(13), trajectory(13)))


def test_sphere_convergence():
    hits = 0
    for seed in range(20):
        swarm = ParticleSwarm(unit_space(2), PsoConfig(iterations=50), seed=seed)
        _, value = swarm.run(lambda batch: [centered_sphere(g) for g in batch], rounds=50)
        hits += value <= 1e-6
    assert hits >= 18
