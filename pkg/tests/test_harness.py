import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cramer.errors import DomainError
from cramer.harness import (
    ComparisonReport,
    block_sizes,
    csv_text,
    default_workers,
    mc_estimate,
    per_replica,
    run_blocks,
    to_json,
    wilson_interval,
)


def coin(rng, count):
    return int(np.count_nonzero(rng.random(count) < 0.5))


def test_constant_true():
    rep = mc_estimate(lambda rng, c: c, 500, 1)
    assert rep.estimate == 1 and rep.ci_high == 1


def test_fair_coin_examples():
    ok = sum(0.498 <= mc_estimate(coin, 10**6, s).estimate <= 0.502 for s in range(20))
    assert ok >= 19


def test_worker_independence():
    a = mc_estimate(coin, 10**5, 3, workers=1, block_size=1000)
    b = mc_estimate(coin, 10**5, 3, workers=2, block_size=1000)
    c = mc_estimate(coin, 10**5, 3, workers=4, block_size=1000)
    assert a.successes == b.successes == c.successes


def test_per_replica_adapter():
    rep = mc_estimate(per_replica(lambda rng: rng.random() < 0.25), 4000, 0)
    assert abs(rep.estimate - 0.25) < 4 * math.sqrt(0.25 * 0.75 / 4000)


def test_min_replicas():
    with pytest.raises(DomainError):
        mc_estimate(coin, 99, 0)


@given(st.integers(1, 10**6), st.data())
@settings(max_examples=200, deadline=None)
def test_wilson_contains_estimate(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = wilson_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


def test_wilson_reference():
    # textbook value for 8 of 10
    lo, hi = wilson_interval(8, 10)
    assert lo == pytest.approx(0.4901624, abs=1e-6)
    assert hi == pytest.approx(0.9433178, abs=1e-6)


def test_block_layout():
    assert block_sizes(10, 4) == [4, 4, 2]
    assert sum(run_blocks(lambda rng, c: c, 10, 0, block_size=4)) == 10


def test_workers_env(monkeypatch):
    monkeypatch.setenv("CRAMER_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("CRAMER_WORKERS", "zero")
    with pytest.raises(DomainError):
        default_workers()


def test_json_and_csv():
    rep = ComparisonReport("x", {"n": np.int64(3)}, 1, 100, 0.5, 0.4, 0.6, 0.5, "rule", True, 17)
    data = json.loads(to_json(rep))
    assert data["verdict"] == "pass" and data["params"]["n"] == 3
    assert "elapsed_ms" not in json.loads(to_json(rep, drop_elapsed=True))
    text = csv_text(["a", "b"], [(0.1, 2), (1 / 3, True)])
    assert text == "a,b\n0.1,2\n0.3333333333333333,true\n"
