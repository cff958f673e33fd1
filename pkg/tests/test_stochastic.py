import math

import numpy as np
import pytest
from scipy import stats

from cramer.errors import DomainError
from cramer.model import ModelSpec, Trajectory, moments_sweep, sample_trajectory
from cramer.stochastic import (
    AmplitudeWindow,
    GapConfig,
    SubseqNormalizer,
    fit_log_slope,
    gap_event_prob,
    gap_statistics,
    lil_subseq_statistic,
    ou_amplitude_counts,
    ou_survival_curve,
    ou_survival_prob,
    power_sum,
    simulate_ou,
    subseq_normalizer,
    walk_amplitude_event,
    walk_amplitude_frequency,
)


class TestOU:
    def test_stationary_moments(self):
        path = simulate_ou(0.01, 1e4, 1)
        u = path.samples
        assert len(u) == 10**6 + 1
        assert abs(u.var() - 1) <= 0.08  # integrated autocorrelation of U^2 is 2
        r1 = np.corrcoef(u[:-1], u[1:])[0, 1]
        assert abs(r1 - math.exp(-0.005)) <= 4e-4

    def test_deterministic(self):
        assert np.array_equal(simulate_ou(0.05, 10, 3).samples, simulate_ou(0.05, 10, 3).samples)

    def test_endpoint_is_standard_normal(self):
        ends = [simulate_ou(0.1, 3.0, s).samples[-1] for s in range(2000)]
        assert stats.kstest(ends, "norm").pvalue > 0.001

    def test_survival_examples(self):
        assert ou_survival_prob(20, 5, 0.01, 1000, 0).estimate >= 0.999
        rep = ou_survival_prob(1, 0, 0.01, 10**5, 0)
        target = stats.norm.cdf(1) - stats.norm.cdf(-1)
        assert abs(rep.estimate - target) <= 4 * math.sqrt(target * (1 - target) / 10**5)
        assert rep.ci_low <= rep.estimate <= rep.ci_high

    def test_slope_z1(self):
        T = [5.0, 10.0, 15.0, 20.0]
        pts = ou_survival_curve(1.0, T, 0.01, 3 * 2**14, 0, "splitting", "shifted")
        slope, _ = fit_log_slope(T, [p.log_estimate for p in pts])
        assert slope == pytest.approx(-1.0, abs=0.05)

    def test_refinement_halves_dt(self):
        rep = ou_survival_prob(1, 1.0, 0.1, 20000, 0, refine=True, max_halvings=2)
        assert rep.params["dt"] < 0.1

    def test_domain(self):
        with pytest.raises(DomainError):
            simulate_ou(0.5, 1, 0)


class TestAmplitude:
    def setup_method(self):
        self.spec = ModelSpec.cramer()
        self.sweep = moments_sweep(self.spec, 2 * 10**4)
        self.window = AmplitudeWindow(0.5, 1.0, 5)

    def test_event_extremes(self):
        huge = AmplitudeWindow(0.5, 1e6, 5)
        zero = AmplitudeWindow(0.5, 0.0, 5)
        hits = 0
        for seed in range(100):
            traj = sample_trajectory(self.spec, 2 * 10**4, seed)
            assert walk_amplitude_event(traj, self.sweep, huge)
            hits += walk_amplitude_event(traj, self.sweep, zero)
        assert hits == 0

    def test_monotone_in_z(self):
        traj = sample_trajectory(self.spec, 2 * 10**4, 9)
        flags = [walk_amplitude_event(traj, self.sweep, AmplitudeWindow(0.5, z, 5)) for z in np.linspace(0, 4, 41)]
        assert flags == sorted(flags)

    def test_frequency_report(self):
        rep = walk_amplitude_frequency(self.sweep, self.window, 300, 0)
        assert 0 < rep.estimate < 1 and rep.replicas == 300

    def test_short_sweep(self):
        with pytest.raises(DomainError):
            AmplitudeWindow(0.5, 1.0, 20).walk_indices(self.sweep)

    def test_ou_counts(self):
        counts = ou_amplitude_counts(0.5, [0.5, 1.0, 50.0], 2, 12, 500, 0)
        assert np.all(counts[2] == 11)
        assert np.all(counts[0] <= counts[1]) and np.all(counts[1] <= counts[2])

    def test_power_sum(self):
        assert power_sum(1, 4, 0.5) == pytest.approx(1 + 2**-0.5 + 3**-0.5 + 0.5, rel=1e-12)
        assert power_sum(3, 100, 2.0) == pytest.approx(sum(k**-2.0 for k in range(3, 101)))


class TestNormalizer:
    def test_all_integers(self):
        members = np.arange(3, 10**5)
        norm = SubseqNormalizer(members, math.e)
        for k in (1, 2, 5, 10):
            n = int(math.exp(k)) + 1
            assert norm.rank(n) == k
            assert norm(n) == pytest.approx(math.sqrt(2 * math.log(k + 2)))

    def test_double_exponential(self):
        members = [2 ** (2**k) for k in range(1, 6)]
        norm = SubseqNormalizer(members, 2.0)
        assert [int(norm.rank(m)) for m in members] == [1, 2, 3, 4, 5]

    def test_locality(self):
        a = SubseqNormalizer([4, 16, 256], 2.0)
        b = SubseqNormalizer([8, 16, 256], 2.0)
        assert a(16) == b(16) and a(256) == b(256)

    def test_pattern_invariance(self):
        a = SubseqNormalizer([5, 9, 40, 41], 3.0)
        b = SubseqNormalizer([4, 8, 30, 80], 3.0)  # same intervals I_1 and I_3 are hit
        assert a(9) == b(8) and a(41) == b(80)

    def test_membership(self):
        with pytest.raises(DomainError):
            subseq_normalizer([3, 5, 9], math.e, 4)
        with pytest.raises(DomainError):
            SubseqNormalizer([3, 5], 1.0)

    def test_lil_statistic(self):
        spec = ModelSpec.cramer()
        traj = sample_trajectory(spec, 10**5, 4)
        sweep = moments_sweep(spec, 10**5)
        members = np.arange(3, 10**5 + 1)
        n, run = lil_subseq_statistic(traj, sweep, members, math.e, running=True)
        assert np.all(run >= 0) and np.all(np.diff(run) >= 0)
        one = lil_subseq_statistic(traj, sweep, members, math.e)
        two = lil_subseq_statistic(traj, sweep, members, math.e, scale=2.0)
        assert two == one / 2


class TestGaps:
    def test_examples(self):
        assert gap_event_prob(3, 1.0) == pytest.approx(1 - 1 / math.log(4), rel=1e-15)
        assert abs(gap_event_prob(3, 1.0) - 0.27865) < 1e-5
        assert gap_event_prob(3, 0.5) == 1.0  # 0.5 (log 3)^2 < 1

    def test_monotone_in_c(self):
        for m in (10, 1000, 10**5):
            vals = [gap_event_prob(m, c) for c in (0.25, 0.5, 1.0, 2.0)]
            assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_scaling(self):
        from cramer import calibration

        K = calibration.get("gap_K")
        for m in (10**3, 10**4, 10**5, 10**6):
            assert K / 2 <= m * gap_event_prob(m, 1.0) <= 2 * K

    def test_m_sequence(self):
        seq = GapConfig(1.0, 10**4).m_sequence()
        assert seq[0] == 2 and np.all(np.diff(seq) > 0)
        m = int(seq[5])
        assert seq[6] == m + math.floor(math.log(m) ** 2) + 1

    def test_single_gap(self):
        traj = Trajectory.from_bits(ModelSpec.cramer(), [0, 0, 1, 0, 1])
        g = gap_statistics(traj, 1.0)
        assert g.max_ratio == pytest.approx(2 / math.log(5) ** 2)
        assert g.argmax_instant == 5

    def test_too_few_jumps(self):
        with pytest.raises(DomainError):
            gap_statistics(Trajectory.from_bits(ModelSpec.cramer(), [0, 0, 1]), 1.0)

    def test_counts_match_direct(self):
        traj = sample_trajectory(ModelSpec.cramer(), 10**5, 8)
        g = gap_statistics(traj, 0.5)
        count = 0
        for m in GapConfig(0.5, 10**5).m_sequence():
            L = math.floor(0.5 * math.log(m) ** 2)
            count += traj.S(int(m) + L) == traj.S(int(m))
        assert g.count == count
