"""Path-level simulation: Ornstein-Uhlenbeck survival, amplitude events,
subsequence LIL statistics and gap events."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError
from .harness import DEFAULT_BLOCK, McReport, block_sizes, run_blocks, wilson_interval
from .model import MomentSweep, Trajectory, jump_instants, make_generator
from .analytic import zeta_partial_sum

# Continuity correction for discretely monitored barriers (Broadie, Glasserman, Kou):
# -zeta(1/2)/sqrt(2 pi).
BARRIER_SHIFT = 0.5825971579390106


# ------------------------------------------------------------------ OU


@dataclass(frozen=True)
class OUPath:
    dt: float
    horizon: float
    seed: int
    samples: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.samples))


def ou_coefficients(dt: float) -> tuple[float, float]:
    """Exact one-step map ``U -> a U + s Z`` of the unit-variance OU with rate 1/2."""
    a = math.exp(-dt / 2.0)
    return a, math.sqrt(-math.expm1(-dt))


def _check_ou(dt: float, T: float) -> int:
    if not 0 < dt <= 0.1:
        raise DomainError("dt must lie in (0, 0.1]")
    if not 0 <= T <= 1e4:
        raise DomainError("horizon must lie in [0, 1e4]")
    return int(round(T / dt))


def simulate_ou(dt: float, T: float, seed: int) -> OUPath:
    """Stationary OU sampled exactly on the grid ``0, dt, ..., T``."""
    steps = _check_ou(dt, T)
    rng = make_generator(seed)
    a, s = ou_coefficients(dt)
    u0 = rng.standard_normal()
    drive = np.empty(steps + 1)
    drive[0] = u0
    drive[1:] = rng.standard_normal(steps) * s
    # first-order recursion u[i] = a u[i-1] + drive[i]
    u = lfilter([1.0], [1.0, -a], drive)
    return OUPath(dt, steps * dt, seed, u)


def _effective_barrier(z: float, dt: float, monitoring: str) -> float:
    if monitoring == "grid":
        return z
    if monitoring == "shifted":
        return z - BARRIER_SHIFT * math.sqrt(dt)
    raise DomainError("monitoring must be 'grid' or 'shifted'")


def _checkpoint_steps(T_grid: Sequence[float], dt: float) -> list[int]:
    steps = [_check_ou(dt, T) for T in T_grid]
    if any(b < a for a, b in zip(steps, steps[1:])):
        raise DomainError("horizons must be nondecreasing")
    return steps


def _direct_block(z: float, z_path: float, a: float, s: float, steps: list[int]):
    """Block worker: survivor counts at every checkpoint (all particles start stationary)."""

    def run(rng: np.random.Generator, count: int) -> np.ndarray:
        u = rng.standard_normal(count)
        u = u[np.abs(u) <= z]
        out = np.zeros(len(steps), dtype=np.int64)
        done = 0
        for i, target in enumerate(steps):
            while done < target and len(u):
                u *= a
                u += s * rng.standard_normal(len(u))
                u = u[np.abs(u) <= z_path]
                done += 1
            out[i] = len(u)
        return out

    return run


def _splitting_block(z: float, z_path: float, a: float, s: float, steps: list[int]):
    """Block worker: log survival probability at every checkpoint by population resampling.

    Dead particles are discarded each step and the running log-probability
    gains ``log(alive / before)``; when fewer than half the initial population
    remain, survivors are resampled back up to full size.
    """

    def run(rng: np.random.Generator, count: int) -> np.ndarray:
        u = rng.standard_normal(count)
        u = u[np.abs(u) <= z]
        logp = math.log(len(u) / count) if len(u) else -math.inf
        out = np.full(len(steps), -math.inf)
        done = 0
        for i, target in enumerate(steps):
            while done < target and len(u):
                before = len(u)
                u *= a
                u += s * rng.standard_normal(before)
                u = u[np.abs(u) <= z_path]
                done += 1
                if not len(u):
                    logp = -math.inf
                    break
                if len(u) != before:
                    logp += math.log(len(u) / before)
                if 2 * len(u) < count:
                    u = u[rng.integers(0, len(u), size=count)]
            out[i] = logp
        return out

    return run


@dataclass(frozen=True)
class SurvivalPoint:
    T: float
    estimate: float
    ci_low: float
    ci_high: float
    log_estimate: float


def _mean_and_ci(block_logs: np.ndarray, weights: np.ndarray) -> tuple[float, float, float, float]:
    """Weighted mean of block probabilities with a normal-theory 95% interval."""
    finite = np.isfinite(block_logs)
    if not finite.any():
        return 0.0, 0.0, 0.0, -math.inf
    top = block_logs[finite].max()
    scaled = np.where(finite, np.exp(np.where(finite, block_logs, 0.0) - top), 0.0)
    w = weights / weights.sum()
    mean = float(np.sum(w * scaled))
    log_mean = top + math.log(mean)
    if len(block_logs) > 1:
        var = float(np.sum(w * (scaled - mean) ** 2)) / (len(block_logs) - 1)
        half = 1.959963984540054 * math.sqrt(var)
    else:
        half = mean
    est = math.exp(log_mean)
    scale = math.exp(top)
    return est, max(mean - half, 0.0) * scale, (mean + half) * scale, log_mean


def ou_survival_curve(
    z: float,
    T_grid: Sequence[float],
    dt: float,
    replicas: int,
    seed: int,
    method: str = "direct",
    monitoring: str = "grid",
    workers: int | None = None,
    block_size: int = DEFAULT_BLOCK,
    stream: int = 0,
) -> list[SurvivalPoint]:
    """Survival probabilities ``P{sup_{grid in [0,T]} |U| <= z}`` for every ``T`` in the grid.

    ``method="direct"`` counts survivors (Wilson intervals); ``"splitting"``
    keeps a resampled population alive and is the only practical choice for
    probabilities far below ``1/replicas``.  ``monitoring="shifted"`` moves the
    barrier in by ``0.5826 sqrt(dt)`` after time 0, turning grid survival into an
    estimate of continuous-time survival.
    """
    if not z > 0:
        raise DomainError("z must be positive")
    steps = _checkpoint_steps(T_grid, dt)
    a, s = ou_coefficients(dt)
    z_path = _effective_barrier(z, dt, monitoring)
    if method == "direct":
        counts = run_blocks(_direct_block(z, z_path, a, s, steps), replicas, seed, stream, workers, block_size)
        total = np.sum(np.vstack(counts), axis=0)
        out = []
        for T, k in zip(T_grid, total):
            lo, hi = wilson_interval(int(k), replicas)
            p = int(k) / replicas
            out.append(SurvivalPoint(float(T), p, lo, hi, math.log(p) if p > 0 else -math.inf))
        return out
    if method == "splitting":
        logs = np.vstack(run_blocks(_splitting_block(z, z_path, a, s, steps), replicas, seed, stream, workers,
                                    block_size))
        weights = np.asarray(block_sizes(replicas, block_size), dtype=float)
        out = []
        for i, T in enumerate(T_grid):
            est, lo, hi, log_est = _mean_and_ci(logs[:, i], weights)
            out.append(SurvivalPoint(float(T), est, lo, hi, log_est))
        return out
    raise DomainError("method must be 'direct' or 'splitting'")


def ou_survival_prob(
    z: float,
    T: float,
    dt: float,
    replicas: int,
    seed: int,
    method: str = "direct",
    monitoring: str = "grid",
    refine: bool = False,
    max_halvings: int = 4,
    workers: int | None = None,
) -> McReport:
    """Monte Carlo survival probability of ``|U|`` below ``z`` on ``[0, T]``.

    With ``refine=True`` the step is halved until the estimate moves by less
    than one confidence-interval width (grid monitoring overstates survival by
    an amount of order ``sqrt(dt)``).
    """
    start = time.perf_counter()
    point = ou_survival_curve(z, [T], dt, replicas, seed, method, monitoring, workers)[0]
    used_dt = dt
    if refine:
        for _ in range(max_halvings):
            nxt = ou_survival_curve(z, [T], used_dt / 2, replicas, seed, method, monitoring, workers)[0]
            moved = abs(nxt.estimate - point.estimate)
            point, used_dt = nxt, used_dt / 2
            if moved < point.ci_high - point.ci_low:
                break
    params = {"z": z, "T": T, "dt": used_dt, "method": method, "monitoring": monitoring}
    successes = int(round(point.estimate * replicas)) if method == "direct" else None
    return McReport(
        "ou-survival", params, int(seed), int(replicas), successes, point.estimate,
        point.ci_low, point.ci_high, int(round(1000 * (time.perf_counter() - start))),
    )


def fit_log_slope(T: Sequence[float], log_p: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and intercept of ``log p`` against ``T``."""
    slope, intercept = np.polyfit(np.asarray(T, float), np.asarray(log_p, float), 1)
    return float(slope), float(intercept)


# ----------------------------------------------------- amplitude events


@dataclass(frozen=True)
class AmplitudeWindow:
    """Block ``k`` of the amplitude events with ``f_c(t) = (log t)^c``.

    For the walk the window is ``e^k <= B_j < e^k k^c``; for the OU path it is
    the time interval ``[k, k + c log k]``.
    """

    c: float
    z: float
    k: int

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise DomainError("c must be positive")
        if not self.z >= 0:
            raise DomainError("z must be nonnegative")
        if self.k < 2:
            raise DomainError("k must be >= 2 so that the window is nonempty")

    @property
    def variance_low(self) -> float:
        return math.exp(self.k)

    @property
    def variance_high(self) -> float:
        return math.exp(self.k) * self.k**self.c

    @property
    def ou_length(self) -> float:
        return self.c * math.log(self.k)

    def walk_indices(self, sweep: MomentSweep) -> np.ndarray:
        """Indices ``j`` with ``e^k <= B_j < e^k k^c``."""
        if sweep.B[-1] < self.variance_high:
            raise DomainError("moment sweep too short for this window")
        lo = int(np.searchsorted(sweep.B, self.variance_low, side="left"))
        hi = int(np.searchsorted(sweep.B, self.variance_high, side="left"))
        return np.arange(lo, hi) + sweep.spec.start_index


def walk_amplitude_event(traj: Trajectory, sweep: MomentSweep, window: AmplitudeWindow) -> bool:
    """Whether ``|S_j - m_j| <= z sqrt(B_j)`` for every ``j`` in the window."""
    if traj.n_max > sweep.n_max or sweep.spec != traj.spec:
        raise DomainError("moment sweep must match the trajectory")
    idx = window.walk_indices(sweep)
    if len(idx) and idx[-1] > traj.n_max:
        raise DomainError("trajectory too short for this window")
    i = idx - traj.spec.start_index
    dev = np.abs(traj.partial_sums[i] - sweep.m[i])
    return bool(np.all(dev <= window.z * np.sqrt(sweep.B[i])))


def walk_amplitude_frequency(
    sweep: MomentSweep, window: AmplitudeWindow, replicas: int, seed: int, workers: int | None = None,
    block_size: int = 256,
) -> McReport:
    """Frequency of the walk amplitude event across independent trajectories."""
    idx = window.walk_indices(sweep)
    if not len(idx):
        raise DomainError("empty window")
    n_max = int(idx[-1])
    p = sweep.spec.weights(n_max)
    i = idx - sweep.spec.start_index
    m, root_B = sweep.m[i], np.sqrt(sweep.B[i])
    rows = 16

    def block(rng: np.random.Generator, count: int) -> int:
        hits = 0
        for lo in range(0, count, rows):
            r = min(rows, count - lo)
            bits = rng.random((r, len(p))) < p
            sums = np.cumsum(bits, axis=1, dtype=np.int64)[:, i]
            hits += int(np.sum(np.all(np.abs(sums - m) <= window.z * root_B, axis=1)))
        return hits

    start = time.perf_counter()
    hits = sum(run_blocks(block, replicas, seed, 0, workers, block_size))
    params = {"c": window.c, "z": window.z, "k": window.k, "model": sweep.spec.kind.value}
    return McReport.from_counts("walk-amplitude", params, seed, hits, replicas,
                                int(round(1000 * (time.perf_counter() - start))))


def power_sum(lo: int, hi: int, s: float) -> float:
    """``sum_{k=lo}^{hi} k^{-s}``; uses the zeta partial sums when ``0 < s <= 1``."""
    if hi < lo:
        return 0.0
    if 0 < s <= 1:
        upper = zeta_partial_sum(hi, s).partial
        lower = zeta_partial_sum(lo - 1, s).partial if lo > 1 else 0.0
        return upper - lower
    k = np.arange(lo, hi + 1, dtype=float)
    return math.fsum(k ** (-s))


@dataclass(frozen=True)
class AmplitudeCounts:
    c: float
    z: float
    k_min: int
    k_max: int
    counts: np.ndarray  # one count per replica
    lam: float | None
    series_full: float | None  # sum k^{-c lambda}
    series_half: float | None  # sum k^{-c lambda / 2}

    @property
    def mean(self) -> float:
        return float(np.mean(self.counts))


def ou_amplitude_counts(
    c: float, z_values: Sequence[float], k_min: int, k_max: int, replicas: int, seed: int,
    dt: float = 0.01, monitoring: str = "shifted", workers: int | None = None, block_size: int = 1024,
) -> np.ndarray:
    """Counts of blocks ``k`` whose OU window ``[k, k + c log k]`` stays within ``z``.

    One stationary OU path per replica covers every window; the result has
    shape ``(len(z_values), replicas)`` so counts for different ``z`` share paths.
    """
    if not c > 0:
        raise DomainError("c must be positive")
    if k_min < 2 or k_max < k_min:
        raise DomainError("need 2 <= k_min <= k_max")
    zs = np.asarray(z_values, dtype=float)
    t0 = float(k_min)
    t1 = k_max + c * math.log(k_max)
    n_steps = int(math.ceil((t1 - t0) / dt))
    a, s = ou_coefficients(dt)
    ks = np.arange(k_min, k_max + 1)
    first = np.round((ks - t0) / dt).astype(np.int64)
    last = np.floor((ks + c * np.log(ks) - t0) / dt + 1e-9).astype(np.int64)
    barriers = np.array([_effective_barrier(float(z), dt, monitoring) for z in zs])

    def block(rng: np.random.Generator, count: int) -> np.ndarray:
        u = rng.standard_normal(count)
        # running |U| maxima over each window, updated as the path is generated
        path_abs = np.empty((n_steps + 1, count), dtype=np.float32)
        path_abs[0] = np.abs(u)
        for i in range(1, n_steps + 1):
            u = a * u + s * rng.standard_normal(count)
            path_abs[i] = np.abs(u)
        out = np.zeros((len(zs), count), dtype=np.int64)
        for f, l in zip(first, last):
            seg = path_abs[f : l + 1]
            peak_inner = seg[1:].max(axis=0) if l > f else np.zeros(count, np.float32)
            start = seg[0]
            for zi, (z, zb) in enumerate(zip(zs, barriers)):
                out[zi] += (start <= z) & (peak_inner <= zb)
        return out

    parts = run_blocks(block, replicas, seed, 0, workers, block_size)
    return np.concatenate(parts, axis=1)


def amplitude_counting(
    c: float, z: float, k_min: int, k_max: int, replicas: int, seed: int, dt: float = 0.01,
    lam: float | None = None, workers: int | None = None,
) -> AmplitudeCounts:
    """Per-replica counts of amplitude events with both comparison series.

    ``lam`` is the principal eigenvalue at ``z`` (computed when omitted).
    """
    counts = ou_amplitude_counts(c, [z], k_min, k_max, replicas, seed, dt, workers=workers)[0]
    if lam is None and 0.01 <= z <= 10:
        from .sturm_liouville import principal_lambda

        lam = principal_lambda(z)
    full = half = None
    if lam is not None:
        full = power_sum(k_min, k_max, c * lam)
        half = power_sum(k_min, k_max, c * lam / 2.0)
    return AmplitudeCounts(c, z, k_min, k_max, counts, lam, full, half)


# -------------------------------------------------- subsequence normalizer


def interval_index(n, M: float):
    """Index ``k`` with ``n`` in ``I_k``, where ``I_0 = (0, M]`` and ``I_k = (M^k, M^{k+1}]``."""
    arr = np.asarray(n, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("members must be positive")
    k = np.maximum(np.ceil(np.log(arr) / math.log(M)) - 1, 0).astype(np.int64)
    # repair rounding at exact powers of M
    k = np.where((k > 0) & (arr <= np.power(M, k.astype(float))), k - 1, k)
    k = np.where(arr > np.power(M, (k + 1).astype(float)), k + 1, k)
    return int(k) if k.ndim == 0 else k


class SubseqNormalizer:
    """``phi(n) = sqrt(2 log(p + 2))`` where ``I_{kappa_p}`` is the ``p``-th interval (from 1) meeting the sequence."""

    def __init__(self, members: Sequence[int] | np.ndarray, M: float):
        if not M > 1:
            raise DomainError("M must exceed 1")
        arr = np.asarray(members, dtype=np.int64)
        if len(arr) and np.any(np.diff(arr) <= 0):
            raise DomainError("sequence must be strictly increasing")
        self.members = arr
        self.M = float(M)
        self.kappa = np.unique(interval_index(arr, M)) if len(arr) else np.empty(0, np.int64)

    def rank(self, n) -> np.ndarray | int:
        k = interval_index(n, self.M)
        return np.searchsorted(self.kappa, k) + 1

    def __call__(self, n):
        arr = np.asarray(n, dtype=np.int64)
        pos = np.searchsorted(self.members, arr)
        ok = (pos < len(self.members)) & (self.members[np.minimum(pos, len(self.members) - 1)] == arr)
        if not np.all(ok):
            raise DomainError("n must belong to the sequence")
        p = self.rank(arr)
        out = np.sqrt(2.0 * np.log(np.asarray(p, dtype=float) + 2.0))
        return float(out) if out.ndim == 0 else out


def subseq_normalizer(members: Sequence[int], M: float, n: int) -> float:
    return SubseqNormalizer(members, M)(n)


def lil_subseq_statistic(
    traj: Trajectory, sweep: MomentSweep, members: Sequence[int] | np.ndarray, M: float,
    scale: float = 1.0, running: bool = False,
):
    """Running maximum over ``n`` in the sequence (``start <= n <= n_max``) of
    ``|S_n - m_n| / (scale * sqrt(B_n) * phi(n))``."""
    arr = np.asarray(members, dtype=np.int64)
    arr = arr[(arr >= traj.spec.start_index) & (arr <= traj.n_max)]
    if not len(arr):
        raise DomainError("no sequence members inside the trajectory")
    phi = SubseqNormalizer(arr, M)(arr)
    i = arr - traj.spec.start_index
    ratio = np.abs(traj.partial_sums[i] - sweep.m[i]) / (scale * np.sqrt(sweep.B[i]) * phi)
    run = np.maximum.accumulate(ratio)
    return (arr, run) if running else float(run[-1])


# ------------------------------------------------------------- gap events


def gap_window(m: int, c: float) -> int:
    """Number of indices after ``m`` that must vanish: ``floor(c (log m)^2)``."""
    return int(math.floor(c * math.log(m) ** 2))


def gap_event_prob(m: int, c: float) -> float:
    """``prod_{1 <= j <= c (log m)^2} (1 - 1/log(m + j))``."""
    if m < 3:
        raise DomainError("m must be >= 3")
    if not c > 0:
        raise DomainError("c must be positive")
    L = gap_window(m, c)
    if L < 1:
        return 1.0
    j = np.arange(m + 1, m + L + 1, dtype=float)
    return math.exp(math.fsum(np.log1p(-1.0 / np.log(j))))


@dataclass(frozen=True)
class GapConfig:
    c: float
    horizon: int

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise DomainError("c must be positive")

    def m_sequence(self) -> np.ndarray:
        """``m_1 = 2, m_{r+1} = m_r + floor(c log^2 m_r) + 1`` while the window fits the horizon."""
        out = []
        m = 2
        while m + gap_window(m, self.c) <= self.horizon:
            out.append(m)
            m = m + gap_window(m, self.c) + 1
        return np.asarray(out, dtype=np.int64)

    def rate(self) -> float:
        """Growth scale ``J^{1-c} (log J)^{-2c}`` of the event count."""
        J = float(self.horizon)
        return J ** (1.0 - self.c) * math.log(J) ** (-2.0 * self.c)


@dataclass(frozen=True)
class GapStatistics:
    max_ratio: float
    argmax_instant: int
    count: int  # N_J
    expected: float
    variance: float
    normalized: float  # (N_J - E N_J) / sqrt(Var N_J)
    rate: float
    events: int  # number of m_r examined


def _gap_probs_cramer(ms: np.ndarray, c: float) -> np.ndarray:
    return np.array([gap_event_prob(int(m), c) if m >= 3 else 1.0 for m in ms])


def gap_statistics(traj: Trajectory, c: float, min_instant: int = 0) -> GapStatistics:
    """Largest normalized gap and the count of gap events along the ``m_r`` grid.

    ``max_ratio`` is the maximum of ``(P_{v+1} - P_v) / (log P_v)^2`` over jump
    instants ``P_v >= max(min_instant, 2)``.
    """
    jumps = jump_instants(traj).instants
    if len(jumps) < 2:
        raise DomainError("need at least two jumps")
    keep = jumps[:-1] >= max(min_instant, 2)
    if not keep.any():
        raise DomainError("no jump instants above min_instant")
    left = jumps[:-1][keep]
    ratio = (jumps[1:][keep] - left) / np.log(left.astype(float)) ** 2
    best = int(np.argmax(ratio))
    cfg = GapConfig(c, traj.n_max)
    ms = cfg.m_sequence()
    ms = ms[ms >= traj.spec.start_index - 1]
    L = np.array([gap_window(int(m), c) for m in ms], dtype=np.int64)
    # event E_m: S_{m+L} - S_m = 0
    hit = np.array([traj.S(int(m + l)) - traj.S(int(m)) == 0 for m, l in zip(ms, L)], dtype=bool)
    probs = _gap_probs_cramer(ms, c)
    expected = float(np.sum(probs))
    variance = float(np.sum(probs * (1 - probs)))
    count = int(hit.sum())
    norm = (count - expected) / math.sqrt(variance) if variance > 0 else 0.0
    return GapStatistics(float(ratio[best]), int(left[best]), count, expected, variance, norm, cfg.rate(), len(ms))


__all__ = [
    "OUPath", "simulate_ou", "ou_survival_prob", "ou_survival_curve", "fit_log_slope", "AmplitudeWindow",
    "walk_amplitude_event", "walk_amplitude_frequency", "amplitude_counting", "ou_amplitude_counts",
    "power_sum", "SubseqNormalizer", "subseq_normalizer", "lil_subseq_statistic", "gap_event_prob",
    "GapConfig", "gap_statistics", "BARRIER_SHIFT",
]
