import time
import random
import pytest

from icefill.backends import TrialPool


@pytest.mark.parametrize("workers", [1, 4])
def test_results_come_back_in_trial_order(workers):
    def fn(i):
        time.sleep(random.uniform(0, 0.002))
        return i * i
    pool = TrialPool(workers)
    assert pool.run(fn, range(20)) == [i * i for i in range(20)]
    metrics = pool.metrics()
    assert metrics["done"] == 20
    assert metrics["failed"] == 0
    assert metrics["workers"] == workers


def test_failures_propagate():
    def fn(i):
        if i == 3:
            raise RuntimeError("boom")
        return i
    pool = TrialPool(2)
    with pytest.raises(RuntimeError):
        pool.run(fn, range(5))
    assert pool.metrics()["failed"] == 1
