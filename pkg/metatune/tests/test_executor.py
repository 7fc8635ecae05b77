import math
import threading
import time

import pytest

from metatune.executor import parallel_evaluate, parallel_map


def slow_square(x: int) -> int:
    # Later items finish first
    time.sleep(0.01 * (5 - x % 5))
    return x * x


@pytest.mark.parametrize("workers", [1, 2, 8])
def test_results_keep_input_order(workers):
    outcomes = parallel_map(slow_square, list(range(10)), workers)
    assert [o.result for o in outcomes] == [x * x for x in range(10)]
    assert all(o.ok for o in outcomes)


def test_failures_are_isolated():
    def fragile(x: int) -> float:
        if x == 2:
            raise ZeroDivisionError("boom")
        return float(x)

    assert parallel_evaluate([0, 1, 2, 3], fragile, workers=3) == [0.0, 1.0, math.inf, 3.0]
    outcomes = parallel_map(fragile, [2], workers=1)
    assert isinstance(outcomes[0].error, ZeroDivisionError)


def test_threads_actually_overlap():
    inside = []
    peak = []
    lock = threading.Lock()

    def track(_):
        with lock:
            inside.append(1)
            peak.append(len(inside))
        time.sleep(0.05)
        with lock:
            inside.pop()
        return 0

    parallel_map(track, list(range(4)), workers=4)
    assert max(peak) > 1


def test_invalid_worker_count():
    with pytest.raises(ValueError):
        parallel_map(slow_square, [1], workers=0)
    assert parallel_map(slow_square, [], workers=4) == []
