import json
import math

import numpy as np
import pytest

from cramer import experiments as ex
from cramer.errors import DomainError
from cramer.harness import to_json
from cramer.primes import PrimeSet


def test_quasi_random_frequencies():
    t = ex.quasi_random_frequencies(200)
    assert np.all(np.abs(t) < 0.5) and len(np.unique(t)) == 200


def test_quasiprime_guard():
    with pytest.raises(DomainError):
        ex.quasiprime_experiment(10**4, 1.9, 200)
    with pytest.raises(DomainError):
        ex.quasiprime_experiment(10**4, 1000.0, 200)


def test_avoidance_empty_set():
    batch = ex.avoidance_experiment(j_max=6, pset=PrimeSet.empty(), mc_k=(8,), replicas=1000)
    assert all(p == 0 for p in batch.reports[0].details["hit_prob"])
    assert batch.reports[1].estimate == 0


def test_sn_prime_guard():
    with pytest.raises(DomainError):
        ex.sn_prime_experiment(6000, replicas=100)


def test_ou_spectrum_grid_guard():
    with pytest.raises(DomainError):
        ex.ou_spectrum_experiment(z_grid=(0.3,), replicas=100)


def test_mc_vs_exact_meta():
    # |MC - exact| <= 4 sigma in at least 18 of 20 master seeds
    exact = None
    ok = 0
    for seed in range(20):
        rep = ex.delta_prime_hit_experiment(20, 20000, seed)
        exact = rep.predicted
        ok += rep.verdict
    assert ok >= 18 and 0 < exact < 1


def test_nonprime_partial_sums():
    b = ex.nonprime_subsequence_experiment(replicas=200, extra_n=())
    assert b.details["terms_decrease"]
    assert all(np.diff(b.details["partial_sums"]) > 0)


def test_fair_prime_exact_below_bound():
    from cramer import calibration

    K = calibration.get("fair_prime_K")
    n = 10**5
    assert ex.binomial_prime_exact(n) <= 2 * K * math.log(math.log(n)) / math.log(n)


def test_amplitude_prefers_half_lambda():
    rep = ex.amplitude_experiment(replicas=1000)
    assert rep.verdict and rep.details["stretch"]["half_lambda"] < rep.details["stretch"]["lambda"]


def test_walk_transfer():
    assert ex.walk_transfer_experiment(replicas=600).verdict


def test_determinism_helper():
    assert ex.determinism_check(lambda w: ex.delta_chisquare(5, 2 * 10**5, 3, w))


def test_batch_serializes():
    b = ex.exact_law_checks((100,))
    data = json.loads(to_json(b))
    assert data["verdict"] == "pass" and len(data["reports"]) == 2


def test_sn_prime_mc_beyond_exact_guard():
    rep = ex.sn_prime_mc_experiment(8000, replicas=4000, seed=3)
    assert rep.verdict
    assert rep.params["n"] == 8000
    again = ex.sn_prime_mc_experiment(8000, replicas=4000, seed=3, workers=2)
    assert again.estimate == rep.estimate
