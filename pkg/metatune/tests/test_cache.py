import numpy as np
import pytest

from metatune.cache import CacheEntry, CacheKey, CheckpointCache
from metatune.metrics import ConfusionCounts, metrics_from_counts
from metatune.trainer import Checkpoint, OptimizerState


def entry(epochs: int, objective: float = -0.5) -> CacheEntry:
    params = [np.full((2, 2), float(epochs)), np.zeros(2)]
    return CacheEntry(
        checkpoint=Checkpoint("cfg", "data", epochs, params, OptimizerState.create("adam", params)),
        objective=objective,
        metrics=metrics_from_counts(ConfusionCounts(1, 0, 1, 0)),
    )


def test_key_token_format():
    assert CacheKey("abc", 2, 7, 9).token() == "abc-f2-s7-e9"


def test_memory_cache_counts_hits():
    cache = CheckpointCache()
    key = CacheKey("abc", 0, 1, 3)
    assert cache.get(key) is None
    cache.put(key, entry(3))
    assert cache.get(key).objective == -0.5
    assert (cache.hits, cache.misses) == (1, 1)


def test_disk_cache_survives_a_new_instance(tmp_path):
    key = CacheKey("abc", 1, 4, 5)
    CheckpointCache(tmp_path).put(key, entry(5, -0.75))
    assert (tmp_path / "abc-f1-s4-e5.pkl").exists()
    assert not list(tmp_path.glob("*.tmp"))

    reloaded = CheckpointCache(tmp_path).get(key)
    assert reloaded.objective == -0.75
    assert reloaded.checkpoint.epochs == 5
    assert np.array_equal(reloaded.checkpoint.params[0], np.full((2, 2), 5.0))


@pytest.mark.parametrize("on_disk", [False, True])
def test_latest_returns_the_longest_shorter_run(tmp_path, on_disk):
    cache = CheckpointCache(tmp_path if on_disk else None)
    for epochs in (1, 3, 9):
        cache.put(CacheKey("abc", 0, 1, epochs), entry(epochs))
    cache.put(CacheKey("abc", 1, 1, 5), entry(5))
    if on_disk:
        cache = CheckpointCache(tmp_path)

    assert cache.latest("abc", 0, 1, max_epochs=9).checkpoint.epochs == 3
    assert cache.latest("abc", 0, 1, max_epochs=27).checkpoint.epochs == 9
    assert cache.latest("abc", 0, 1, max_epochs=1) is None
    assert cache.latest("abc", 0, 2, max_epochs=9) is None
