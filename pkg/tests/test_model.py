import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cramer.errors import DomainError, ResourceError
from cramer.model import (
    ModelSpec,
    Trajectory,
    convolve_step,
    exact_law,
    exact_law_mod,
    jump_instants,
    moments,
    moments_sweep,
    sample_fair_jump_instants,
    sample_sums,
    sample_trajectory,
    make_generator,
)


def enumerate_law(weights):
    """Brute-force law of a Bernoulli sum over all 2^n outcomes."""
    out = np.zeros(len(weights) + 1)
    for bits in itertools.product((0, 1), repeat=len(weights)):
        p = 1.0
        for b, w in zip(bits, weights):
            p *= w if b else 1 - w
        out[sum(bits)] += p
    return out


class TestSpec:
    def test_start_index_guards(self):
        with pytest.raises(DomainError):
            ModelSpec.cramer(2)
        with pytest.raises(DomainError):
            ModelSpec.cramer_doubled(7)
        with pytest.raises(DomainError):
            ModelSpec.general([0.5, 1.0])

    def test_weights(self):
        assert ModelSpec.cramer().weight(3) == 1 / math.log(3)
        assert ModelSpec.cramer_doubled().weight(8) == 2 / math.log(8)
        assert ModelSpec.fair_coin().weight(17) == 0.5
        w = ModelSpec.cramer().weights(10**5)
        assert np.all((w > 0) & (w < 1))

    def test_general_range(self):
        spec = ModelSpec.general([0.1, 0.2, 0.3], start_index=5)
        assert list(spec.weights(7)) == [0.1, 0.2, 0.3]
        with pytest.raises(DomainError):
            spec.weights(8)


class TestMoments:
    def test_single_term(self):
        m = moments(ModelSpec.cramer(), 3)
        p = 1 / math.log(3)
        assert m.m_n == pytest.approx(p, abs=0, rel=1e-15)
        assert m.B_n == pytest.approx(p * (1 - p), rel=1e-15)

    def test_fair(self):
        m = moments(ModelSpec.fair_coin(), 10)
        assert (m.m_n, m.B_n) == (5.0, 2.5)

    def test_sweep_matches_fsum_at_million(self):
        spec = ModelSpec.cramer()
        sweep = moments_sweep(spec, 10**6)
        direct = moments(spec, 10**6)
        assert abs(sweep.at(10**6).m_n - direct.m_n) <= 1e-6
        assert abs(sweep.at(10**6).B_n - direct.B_n) <= 1e-6

    @given(st.integers(4, 5000))
    @settings(max_examples=30, deadline=None)
    def test_increment_is_weight(self, n):
        spec = ModelSpec.cramer()
        diff = moments(spec, n).m_n - moments(spec, n - 1).m_n
        assert diff == pytest.approx(spec.weight(n), rel=1e-9)
        assert 0 < moments(spec, n).B_n <= moments(spec, n).m_n


class TestTrajectory:
    def test_deterministic(self):
        a = sample_trajectory(ModelSpec.cramer(), 10**4, 7)
        b = sample_trajectory(ModelSpec.cramer(), 10**4, 7)
        assert np.array_equal(a.bits, b.bits)
        assert np.array_equal(jump_instants(a).instants, jump_instants(b).instants)

    def test_increments_and_counts(self):
        t = sample_trajectory(ModelSpec.cramer(), 5000, 3)
        steps = np.diff(np.concatenate(([0], t.partial_sums)))
        assert set(np.unique(steps)) <= {0, 1}
        assert t.S(2) == 0
        assert len(jump_instants(t)) == t.S(t.n_max)

    def test_jump_examples(self):
        t = Trajectory.from_bits(ModelSpec.cramer(), [0, 0, 1, 0, 1])
        assert list(jump_instants(t).instants) == [5, 7]
        f = Trajectory.from_bits(ModelSpec.fair_coin(), [1, 0, 0, 1])
        js = jump_instants(f)
        assert list(js.gaps) == [1, 3]
        assert list(js.cumulative) == [1, 4]

    def test_fair_fraction(self):
        ok = 0
        for seed in range(20):
            t = sample_trajectory(ModelSpec.fair_coin(), 10**6, seed)
            ok += 0.498 <= t.bits.mean() <= 0.502
        assert ok >= 19

    def test_cramer_ratio(self):
        spec = ModelSpec.cramer()
        m = moments(spec, 10**6).m_n
        ok = sum(0.98 <= sample_trajectory(spec, 10**6, s).S(10**6) / m <= 1.02 for s in range(20))
        assert ok >= 19


class TestExactLaw:
    def test_fair_two(self):
        assert list(exact_law(ModelSpec.fair_coin(), 2).probabilities) == [0.25, 0.5, 0.25]

    def test_enumeration_oracle(self):
        spec = ModelSpec.cramer()
        for n in (4, 8, 12):
            got = exact_law(spec, n).probabilities
            assert np.allclose(got, enumerate_law(spec.weights(n)), atol=1e-15, rtol=0)

    def test_moments_n2000(self):
        spec = ModelSpec.cramer()
        law, mom = exact_law(spec, 2000), moments(spec, 2000)
        assert abs(law.probabilities.sum() - 1) <= 1e-12
        assert abs(law.mean() - mom.m_n) <= 1e-9
        assert abs(law.variance() - mom.B_n) <= 1e-6 * mom.B_n

    def test_one_step_push_forward(self):
        spec = ModelSpec.cramer()
        a = exact_law(spec, 300).probabilities
        b = exact_law(spec, 301).probabilities
        assert np.max(np.abs(convolve_step(a, spec.weight(301)) - b)) <= 1e-14

    def test_trimmed_law(self):
        spec = ModelSpec.cramer()
        law, mom = exact_law(spec, 6000), moments(spec, 6000)
        assert abs(law.mean() - mom.m_n) <= 1e-9
        assert abs(law.probabilities.sum() - 1) <= 1e-12

    def test_guard(self):
        with pytest.raises(ResourceError):
            exact_law(ModelSpec.fair_coin(), 10**6)

    def test_mod(self):
        assert list(exact_law_mod(ModelSpec.fair_coin(), 2, 2)) == [0.5, 0.5]
        assert list(exact_law_mod(ModelSpec.cramer(), 50, 1)) == [1.0]
        spec = ModelSpec.cramer()
        fold = exact_law(spec, 1000).fold(7)
        assert np.max(np.abs(exact_law_mod(spec, 1000, 7) - fold)) <= 1e-12


class TestSamplers:
    def test_histogram_chisquare(self):
        spec = ModelSpec.fair_coin()
        rng = make_generator(11)
        s = np.concatenate([sample_sums(spec, 30, 10**5, rng) for _ in range(10)])
        exact = exact_law(spec, 30).probabilities * len(s)
        obs = np.bincount(s, minlength=31).astype(float)
        keep = exact >= 5
        obs_k = np.append(obs[keep], obs[~keep].sum())
        exp_k = np.append(exact[keep], exact[~keep].sum())
        assert stats.chisquare(obs_k, exp_k).pvalue > 0.001

    def test_sample_sums_start(self):
        spec = ModelSpec.cramer(8)
        s = sample_sums(spec, 5000, 4000, make_generator(1))
        mom = moments(spec, 5000)
        assert abs(s.mean() - mom.m_n) <= 4 * math.sqrt(mom.B_n / 4000)

    def test_jump_instants_law(self):
        d = sample_fair_jump_instants(5, 10**5, make_generator(2))
        assert d.min() >= 5
        assert abs(d.mean() - 10) <= 4 * math.sqrt(10 / 10**5)
