import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cramer.errors import DomainError
from cramer.primes import (
    PrimeSet,
    PrimeTable,
    gaussian_prime_sum,
    is_quasiprime,
    is_quasiprime_array,
    next_prime_at_least,
    shared_table,
    sieve,
    smallest_prime_factor,
    trial_division_is_prime,
)


def test_prime_counts():
    assert sieve(10).pi(10) == 4
    assert sieve(100).pi(100) == 25
    assert sum(trial_division_is_prime(m) for m in range(101)) == 25
    assert sieve(10**6).pi(10**6) == 78498


def test_segmented_agrees_with_simple():
    big = sieve(10**8 + 10**5)
    assert big.pi(10**8) == 5761455
    lo = 10**8 - 2000
    got = big.primes(lo, 10**8 + 2000)
    want = [m for m in range(lo, 10**8 + 2001) if trial_division_is_prime(m)]
    assert list(got) == want


def test_random_sample_against_trial_division():
    table = shared_table(10**6)
    rng = np.random.default_rng(5)
    sample = rng.integers(0, 10**6, size=3000)
    assert np.array_equal(table.is_prime_array(sample), [trial_division_is_prime(int(m)) for m in sample])


def test_pi_steps():
    table = shared_table(10**4)
    counts = np.array([table.pi(x) for x in range(10**4)])
    assert set(np.diff(counts)) <= {0, 1}
    assert counts[-1] == len(table.primes(2, 10**4 - 1))


def test_dump_load(tmp_path):
    table = sieve(123457)
    path = tmp_path / "t.bin"
    table.dump(path)
    back = PrimeTable.load(path)
    assert back.limit == table.limit
    assert np.array_equal(back.primes(), table.primes())
    assert path.read_bytes()[:4] == b"CRPT"


def test_smallest_factor():
    t = shared_table(1000)
    assert smallest_prime_factor(25, t) == 5
    assert smallest_prime_factor(97, t) == 97
    assert smallest_prime_factor(1, t) is None


def test_quasiprime_examples():
    t = shared_table(1000)
    assert is_quasiprime(25, 3, t)
    assert not is_quasiprime(25, 5, t)
    assert is_quasiprime(1, 100, t)
    assert is_quasiprime(30, 1.5, t)
    assert not is_quasiprime(30, 2, t)


@given(st.integers(0, 5000), st.floats(1.1, 60), st.floats(1.1, 60))
@settings(max_examples=200, deadline=None)
def test_quasiprime_monotone(m, z1, z2):
    t = shared_table(6000)
    lo, hi = sorted((z1, z2))
    if is_quasiprime(m, hi, t):
        assert is_quasiprime(m, lo, t)
    assert bool(is_quasiprime_array(np.array([m]), hi, t)[0]) == is_quasiprime(m, hi, t)


def test_gaussian_prime_sum():
    t = shared_table(1000)
    assert gaussian_prime_sum(25, 1.0, 0.5, t) == 0.0  # no prime in [24.5, 25.5]
    assert gaussian_prime_sum(5, 1.0, 0.5, t) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    direct = math.fsum(math.exp(-((p - 100) ** 2) / 50) / math.sqrt(50 * math.pi)
                       for p in range(71, 128) if trial_division_is_prime(p))
    assert gaussian_prime_sum(100, 25, 30, t) == pytest.approx(direct, rel=1e-13)


def test_gaussian_prime_sum_monotone_and_bounded():
    t = shared_table(10**5)
    vals = [gaussian_prime_sum(5000, 400, h, t) for h in (10, 40, 80, 160, 400)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] <= 1.01


def test_prime_sets():
    s = PrimeSet([2, 5, 11])
    assert 5 in s and 7 not in s
    assert list(s.members_in(3, 20)) == [5, 11]
    with pytest.raises(DomainError):
        PrimeSet([4])
    assert next_prime_at_least(1024) == 1031
    odd = PrimeSet(predicate=lambda p: p % 4 == 1)
    assert list(odd.members_in(1, 30)) == [5, 13, 17, 29]
