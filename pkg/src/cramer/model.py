"""Random models of the primes: weights, moments, sample paths and exact laws.

The walk is ``S_n = sum_{j=start}^n xi_j`` with independent ``xi_j`` in {0, 1}
and ``P{xi_j = 1} = p_j``.  Logarithms are natural throughout.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ResourceError

EXACT_LAW_MAX_STEPS = 20_000
EXACT_LAW_MOD_MAX_COST = 10**9
# Above this many DP steps the support is trimmed where tail mass < 1e-18.
EXACT_LAW_TRIM_AFTER = 5_000
EXACT_LAW_TAIL_MASS = 1e-18

_CHUNK = 1 << 20


class ModelKind(str, enum.Enum):
    CRAMER = "cramer"
    CRAMER_DOUBLED = "cramer_doubled"
    FAIR_COIN = "fair_coin"
    GENERAL = "general"


_DEFAULT_START = {
    ModelKind.CRAMER: 3,
    ModelKind.CRAMER_DOUBLED: 8,
    ModelKind.FAIR_COIN: 1,
    ModelKind.GENERAL: 1,
}


@dataclass(frozen=True)
class ModelSpec:
    """Which Bernoulli model drives the walk.

    ``cramer`` uses ``p_j = 1/log j`` and needs ``start_index >= 3``;
    ``cramer_doubled`` uses ``p_j = 2/log j`` and needs ``start_index >= 8``;
    ``fair_coin`` uses ``p_j = 1/2``; ``general`` takes an explicit list with
    ``weights[0]`` the weight of index ``start_index``.
    """

    kind: ModelKind
    start_index: int
    explicit_weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.start_index < 1:
            raise DomainError("start_index must be >= 1")
        if kind is ModelKind.CRAMER and self.start_index < 3:
            raise DomainError("cramer weights 1/log j need start_index >= 3")
        if kind is ModelKind.CRAMER_DOUBLED and self.start_index < 8:
            raise DomainError("doubled weights 2/log j need start_index >= 8")
        if kind is ModelKind.GENERAL:
            if not self.explicit_weights:
                raise DomainError("general model needs explicit weights")
            w = np.asarray(self.explicit_weights, dtype=float)
            if np.any(~(w > 0.0)) or np.any(~(w < 1.0)):
                raise DomainError("general weights must lie strictly inside (0, 1)")
        elif self.explicit_weights is not None:
            raise DomainError(f"{kind.value} weights are implicit")

    @classmethod
    def cramer(cls, start_index: int = 3) -> "ModelSpec":
        return cls(ModelKind.CRAMER, start_index)

    @classmethod
    def cramer_doubled(cls, start_index: int = 8) -> "ModelSpec":
        return cls(ModelKind.CRAMER_DOUBLED, start_index)

    @classmethod
    def fair_coin(cls, start_index: int = 1) -> "ModelSpec":
        return cls(ModelKind.FAIR_COIN, start_index)

    @classmethod
    def general(cls, weights: Sequence[float], start_index: int = 1) -> "ModelSpec":
        return cls(ModelKind.GENERAL, start_index, tuple(float(w) for w in weights))

    @classmethod
    def from_name(cls, name: str, start_index: int | None = None) -> "ModelSpec":
        kind = ModelKind(name)
        if kind is ModelKind.GENERAL:
            raise DomainError("general model cannot be built from a name alone")
        return cls(kind, _DEFAULT_START[kind] if start_index is None else start_index)

    @property
    def last_index(self) -> int | None:
        """Largest index with a defined weight (None when unbounded)."""
        if self.explicit_weights is None:
            return None
        return self.start_index + len(self.explicit_weights) - 1

    def weight(self, j: int) -> float:
        return float(self.weights(j, j)[0])

    def weights(self, stop: int, first: int | None = None) -> np.ndarray:
        """Weights ``p_j`` for ``j = first..stop`` (``first`` defaults to start)."""
        first = self.start_index if first is None else first
        if first < self.start_index:
            raise DomainError(f"index {first} below start_index {self.start_index}")
        if stop < first:
            return np.empty(0)
        last = self.last_index
        if last is not None and stop > last:
            raise DomainError(f"general weights only defined up to index {last}")
        if self.kind is ModelKind.FAIR_COIN:
            return np.full(stop - first + 1, 0.5)
        if self.kind is ModelKind.GENERAL:
            w = np.asarray(self.explicit_weights, dtype=float)
            return w[first - self.start_index : stop - self.start_index + 1]
        table = _weight_table(self.kind, stop)
        return table[first : stop + 1]

    def description(self) -> dict:
        out = {"kind": self.kind.value, "start_index": self.start_index}
        if self.explicit_weights is not None:
            out["weights"] = list(self.explicit_weights)
        return out


_WEIGHT_CACHE: dict[ModelKind, np.ndarray] = {}
_WEIGHT_LOCK = threading.Lock()


def _weight_table(kind: ModelKind, stop: int) -> np.ndarray:
    """Cached array indexed by j (entries below 2 are unused)."""
    with _WEIGHT_LOCK:
        table = _WEIGHT_CACHE.get(kind)
        if table is None or len(table) <= stop:
            size = max(stop + 1, 2 * (len(table) if table is not None else 0), 1024)
            j = np.arange(size, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.log(j)
                scale = 2.0 if kind is ModelKind.CRAMER_DOUBLED else 1.0
                table = scale / logs
            table[:2] = np.nan
            table.flags.writeable = False
            _WEIGHT_CACHE[kind] = table
        return table


# ---------------------------------------------------------------- moments


@dataclass(frozen=True)
class Moments:
    n: int
    m_n: float
    B_n: float


def moments(spec: ModelSpec, n: int) -> Moments:
    """Mean and variance of ``S_n``, summed with correctly rounded ``fsum``."""
    if n < spec.start_index:
        raise DomainError(f"n={n} below start_index {spec.start_index}")
    p = spec.weights(n)
    return Moments(n, math.fsum(p), math.fsum(p * (1.0 - p)))


@dataclass(frozen=True)
class MomentSweep:
    """``m_j`` and ``B_j`` for every ``j = start..n_max`` (arrays indexed by ``j - start``)."""

    spec: ModelSpec
    n_max: int
    m: np.ndarray
    B: np.ndarray

    def index(self, j: int) -> int:
        return j - self.spec.start_index

    def at(self, j: int) -> Moments:
        i = self.index(j)
        if i < 0 or j > self.n_max:
            raise DomainError(f"index {j} outside sweep")
        return Moments(j, float(self.m[i]), float(self.B[i]))


def _compensated_cumsum(x: np.ndarray, block: int = 4096) -> np.ndarray:
    # Block-local cumsums plus a Neumaier-compensated running offset keeps every
    # prefix within a few ulps of the exact prefix sum.
    out = np.empty_like(x)
    total = 0.0
    comp = 0.0
    for lo in range(0, len(x), block):
        seg = np.cumsum(x[lo : lo + block])
        out[lo : lo + block] = seg + (total + comp)
        s = float(math.fsum(x[lo : lo + block]))
        t = total + s
        if abs(total) >= abs(s):
            comp += (total - t) + s
        else:
            comp += (s - t) + total
        total = t
    return out


def moments_sweep(spec: ModelSpec, n_max: int) -> MomentSweep:
    """All prefix moments up to ``n_max`` in O(n_max)."""
    if n_max < spec.start_index:
        raise DomainError(f"n_max={n_max} below start_index {spec.start_index}")
    p = spec.weights(n_max)
    m = _compensated_cumsum(p)
    B = _compensated_cumsum(p * (1.0 - p))
    m.flags.writeable = False
    B.flags.writeable = False
    return MomentSweep(spec, n_max, m, B)


# ------------------------------------------------------------ trajectories


def make_generator(seed: int | Sequence[int]) -> np.random.Generator:
    """Philox (counter-based) generator keyed by a 64-bit seed or a seed path."""
    if isinstance(seed, (int, np.integer)):
        ss = np.random.SeedSequence(int(seed) & (2**64 - 1))
    else:
        head, *tail = [int(s) for s in seed]
        ss = np.random.SeedSequence(head & (2**64 - 1), spawn_key=tuple(tail))
    return np.random.Generator(np.random.Philox(ss))


def draw_bits(p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One uniform per index compared against ``p_j``; drawn in fixed chunks."""
    bits = np.empty(len(p), dtype=np.uint8)
    for lo in range(0, len(p), _CHUNK):
        hi = min(lo + _CHUNK, len(p))
        bits[lo:hi] = rng.random(hi - lo) < p[lo:hi]
    return bits


@dataclass(frozen=True)
class Trajectory:
    spec: ModelSpec
    seed: int | None
    n_max: int
    bits: np.ndarray
    partial_sums: np.ndarray = field(repr=False)

    @classmethod
    def from_bits(cls, spec: ModelSpec, bits: Sequence[int], seed: int | None = None) -> "Trajectory":
        arr = np.asarray(bits, dtype=np.uint8)
        if np.any(arr > 1):
            raise DomainError("bits must be 0 or 1")
        sums = np.cumsum(arr, dtype=np.int64)
        arr.flags.writeable = False
        sums.flags.writeable = False
        return cls(spec, seed, spec.start_index + len(arr) - 1, arr, sums)

    def S(self, j: int) -> int:
        """Partial sum ``S_j``; zero below the start index."""
        if j < self.spec.start_index:
            return 0
        if j > self.n_max:
            raise DomainError(f"index {j} beyond n_max={self.n_max}")
        return int(self.partial_sums[j - self.spec.start_index])

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.spec.start_index, self.n_max + 1)


def sample_trajectory(spec: ModelSpec, n_max: int, seed: int) -> Trajectory:
    if n_max < spec.start_index:
        raise DomainError(f"n_max={n_max} below start_index {spec.start_index}")
    bits = draw_bits(spec.weights(n_max), make_generator(seed))
    return Trajectory.from_bits(spec, bits, seed=seed)


@dataclass(frozen=True)
class JumpSequence:
    instants: np.ndarray
    gaps: np.ndarray | None = None
    cumulative: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.instants)


def jump_instants(traj: Trajectory) -> JumpSequence:
    """Indices where the walk steps up; for the fair coin also the gaps and their sums."""
    instants = np.flatnonzero(traj.bits) + traj.spec.start_index
    if traj.spec.kind is not ModelKind.FAIR_COIN:
        return JumpSequence(instants)
    origin = traj.spec.start_index - 1
    gaps = np.diff(instants, prepend=origin)
    return JumpSequence(instants, gaps, instants - origin)


# --------------------------------------------------------------- exact laws


@dataclass(frozen=True)
class ExactLaw:
    """``probabilities[k] = P{S_n = k}`` for ``k = 0..n - start + 1``."""

    spec: ModelSpec
    n: int
    probabilities: np.ndarray

    def mean(self) -> float:
        k = np.arange(len(self.probabilities))
        return float(np.dot(k, self.probabilities))

    def variance(self) -> float:
        k = np.arange(len(self.probabilities), dtype=float)
        mu = self.mean()
        return float(np.dot((k - mu) ** 2, self.probabilities))

    def fold(self, d: int) -> np.ndarray:
        """Residue law ``P{S_n = r mod d}`` obtained by folding."""
        out = np.zeros(d)
        np.add.at(out, np.arange(len(self.probabilities)) % d, self.probabilities)
        return out


def convolve_step(q: np.ndarray, p: float) -> np.ndarray:
    """One Bernoulli convolution: ``q'(k) = q(k)(1-p) + q(k-1)p`` (length grows by 1)."""
    out = np.empty(len(q) + 1)
    out[:-1] = q * (1.0 - p)
    out[-1] = 0.0
    out[1:] += q * p
    return out


def exact_law(spec: ModelSpec, n: int) -> ExactLaw:
    if n < spec.start_index:
        raise DomainError(f"n={n} below start_index {spec.start_index}")
    steps = n - spec.start_index + 1
    if steps > EXACT_LAW_MAX_STEPS:
        raise ResourceError(f"exact_law limited to {EXACT_LAW_MAX_STEPS} steps, got {steps}")
    p = spec.weights(n)
    q = np.zeros(steps + 1)
    q[0] = 1.0
    lo, hi = 0, 1  # active window q[lo:hi]
    trim = steps > EXACT_LAW_TRIM_AFTER
    for i, pj in enumerate(p):
        carry = q[lo:hi] * pj
        q[lo:hi] *= 1.0 - pj
        q[lo + 1 : hi + 1] += carry
        hi += 1
        if trim and (i & 63) == 63:
            lo, hi = _trim(q, lo, hi)
    return ExactLaw(spec, n, q)


def _trim(q: np.ndarray, lo: int, hi: int) -> tuple[int, int]:
    half = 0.5 * EXACT_LAW_TAIL_MASS
    head = np.cumsum(q[lo:hi])
    cut = int(np.searchsorted(head, half, side="right"))
    if cut:
        q[lo : lo + cut] = 0.0
        lo += cut
    tail = np.cumsum(q[lo:hi][::-1])
    cut = int(np.searchsorted(tail, half, side="right"))
    if cut:
        q[hi - cut : hi] = 0.0
        hi -= cut
    return lo, hi


def exact_law_mod(spec: ModelSpec, n: int, d: int) -> np.ndarray:
    """``P{S_n = r (mod d)}`` for ``r = 0..d-1`` via a DP over residues."""
    if d < 1:
        raise DomainError("modulus must be >= 1")
    if n < spec.start_index:
        raise DomainError(f"n={n} below start_index {spec.start_index}")
    if n * d > EXACT_LAW_MOD_MAX_COST:
        raise ResourceError(f"n*d={n * d} exceeds {EXACT_LAW_MOD_MAX_COST}")
    r = np.zeros(d)
    r[0] = 1.0
    if d == 1:
        return r
    for pj in spec.weights(n):
        r = r * (1.0 - pj) + np.roll(r, 1) * pj
    return r


def trajectory_from_rng(spec: ModelSpec, n_max: int, rng: np.random.Generator) -> Trajectory:
    """Trajectory drawn from an existing generator (used by replica blocks)."""
    if n_max < spec.start_index:
        raise DomainError(f"n_max={n_max} below start_index {spec.start_index}")
    return Trajectory.from_bits(spec, draw_bits(spec.weights(n_max), rng))


def sample_sums(
    spec: ModelSpec, n: int, count: int, rng: np.random.Generator, first: int | None = None
) -> np.ndarray:
    """``count`` independent draws of ``sum_{j=first}^n xi_j`` (one uniform per summand)."""
    p = spec.weights(n, first)
    out = np.empty(count, dtype=np.int64)
    rows = max(1, min(count, (1 << 22) // max(len(p), 1)))
    for lo in range(0, count, rows):
        r = min(rows, count - lo)
        out[lo : lo + r] = np.count_nonzero(rng.random((r, len(p))) < p, axis=1)
    return out


def sample_fair_jump_instants(k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` draws of the index of the ``k``-th success in fair coin flips."""
    if k < 1:
        raise DomainError("k must be >= 1")
    width = 2 * k + int(10 * math.sqrt(2 * k)) + 32
    out = np.empty(count, dtype=np.int64)
    rows = max(1, (1 << 22) // width)
    for lo in range(0, count, rows):
        r = min(rows, count - lo)
        flips = rng.integers(0, 2, size=(r, width), dtype=np.uint8)
        sums = np.cumsum(flips, axis=1, dtype=np.int32)
        reached = sums[:, -1] >= k
        res = np.argmax(sums >= k, axis=1) + 1
        # rare rows that have not reached k successes keep flipping
        for i in np.flatnonzero(~reached):
            have, pos = int(sums[i, -1]), width
            while have < k:
                pos += 1
                have += int(rng.integers(0, 2))
            res[i] = pos
        out[lo : lo + r] = res
    return out
