"""Prime tables: sieve, counting function, smallest prime factor, quasiprimes.

The table stores one bit per odd integer (bit ``i`` of the little-endian mask
stands for ``2i + 1``); 2 is handled separately.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, ResourceError

SIEVE_MAX = 10**9
SEGMENT_ABOVE = 10**8
_SEGMENT = 1 << 24  # odd numbers per segment

_MAGIC = b"CRPT"
_VERSION = 1
_HEADER = struct.Struct("<4sHHQ")  # magic, version, reserved, limit: 16 bytes


def _simple_odd_sieve(limit: int) -> np.ndarray:
    """Boolean array ``a`` with ``a[i]`` true iff ``2i + 1`` is prime, for ``2i + 1 <= limit``."""
    size = (limit + 1) // 2
    a = np.ones(size, dtype=bool)
    a[0] = False
    for i in range(1, (math.isqrt(limit) - 1) // 2 + 1):
        if a[i]:
            p = 2 * i + 1
            a[p * p // 2 :: p] = False
    return a


def _segmented_odd_sieve(limit: int) -> np.ndarray:
    size = (limit + 1) // 2
    base = _simple_odd_sieve(math.isqrt(limit) + 1)
    small = 2 * np.flatnonzero(base) + 1
    out = np.empty(size, dtype=bool)
    for lo in range(0, size, _SEGMENT):
        hi = min(lo + _SEGMENT, size)
        seg = np.ones(hi - lo, dtype=bool)
        last = 2 * (hi - 1) + 1
        for p in small:
            p = int(p)
            if p * p > last:
                break
            # first odd multiple of p that is >= max(p*p, 2*lo+1)
            start = max(p * p, ((2 * lo + 1 + p - 1) // p) * p)
            if start % 2 == 0:
                start += p
            seg[(start - 1) // 2 - lo :: p] = False
        out[lo:hi] = seg
    out[0] = False
    return out


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """Sieve over ``[2, limit]`` with O(1) membership and prime counting."""

    limit: int
    mask: np.ndarray  # packed odd bits, little-endian bit order, uint8
    _word_counts: np.ndarray  # primes among odd numbers below each 64-bit word

    @property
    def pi_limit(self) -> int:
        return self.pi(self.limit)

    def is_prime(self, m: int) -> bool:
        m = int(m)
        if m < 2 or m > self.limit:
            if m > self.limit:
                raise DomainError(f"{m} beyond sieve limit {self.limit}")
            return False
        if m == 2:
            return True
        if m % 2 == 0:
            return False
        i = m // 2
        return bool((self.mask[i >> 3] >> (i & 7)) & 1)

    def is_prime_array(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.int64)
        if m.size and int(m.max()) > self.limit:
            raise DomainError(f"values beyond sieve limit {self.limit}")
        i = m // 2
        safe = np.clip(i, 0, len(self.mask) * 8 - 1)
        bit = (self.mask[safe >> 3] >> (safe & 7).astype(np.uint8)) & 1
        out = (bit == 1) & (m % 2 == 1) & (m >= 3)
        return out | (m == 2)

    def pi(self, x: float) -> int:
        """Number of primes ``<= x``."""
        x = math.floor(x)
        if x < 2:
            return 0
        if x > self.limit:
            raise DomainError(f"{x} beyond sieve limit {self.limit}")
        # odd indices 1..i inclusive, i = index of the largest odd <= x
        i = (x - 1) // 2
        word, bit = divmod(i + 1, 64)
        count = int(self._word_counts[word])
        if bit:
            w = self._words()[word] & np.uint64((1 << bit) - 1)
            count += int(np.bitwise_count(w))
        return count + 1  # the prime 2

    def _words(self) -> np.ndarray:
        return self.mask.view(np.uint64)

    def primes(self, lo: int = 2, hi: int | None = None) -> np.ndarray:
        """Primes in ``[lo, hi]`` as an int64 array."""
        hi = self.limit if hi is None else int(hi)
        if hi > self.limit:
            raise DomainError(f"{hi} beyond sieve limit {self.limit}")
        lo = max(int(lo), 2)
        if hi < lo:
            return np.empty(0, dtype=np.int64)
        i_lo, i_hi = lo // 2, (hi - 1) // 2
        bits = np.unpackbits(self.mask[i_lo >> 3 : (i_hi >> 3) + 1], bitorder="little")
        base = (i_lo >> 3) << 3
        idx = np.flatnonzero(bits[i_lo - base : i_hi - base + 1]) + i_lo
        odd = 2 * idx.astype(np.int64) + 1
        if lo <= 2 <= hi:
            odd = np.concatenate(([2], odd))
        return odd

    # ----------------------------------------------------------- dump/load

    def dump(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, _VERSION, 0, self.limit))
            fh.write(self.mask.tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "PrimeTable":
        raw = Path(path).read_bytes()
        if len(raw) < _HEADER.size:
            raise ValueError("truncated prime table header")
        magic, version, _, limit = _HEADER.unpack_from(raw)
        if magic != _MAGIC or version != _VERSION:
            raise ValueError("not a prime table dump (bad magic or version)")
        mask = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size).copy()
        if len(mask) != _mask_bytes(limit):
            raise ValueError("prime table payload has the wrong length")
        return _from_mask(limit, mask)


def _mask_bytes(limit: int) -> int:
    n_odd = (limit + 1) // 2
    return ((n_odd + 63) // 64) * 8


def _from_mask(limit: int, mask: np.ndarray) -> PrimeTable:
    counts = np.bitwise_count(mask.view(np.uint64))
    word_counts = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=word_counts[1:])
    mask.flags.writeable = False
    word_counts.flags.writeable = False
    return PrimeTable(limit, mask, word_counts)


def sieve(limit: int) -> PrimeTable:
    """Sieve of Eratosthenes up to ``limit`` (segmented above 1e8)."""
    limit = int(limit)
    if limit < 2:
        raise DomainError("sieve limit must be >= 2")
    if limit > SIEVE_MAX:
        raise ResourceError(f"sieve limit {limit} exceeds {SIEVE_MAX}")
    odd = _segmented_odd_sieve(limit) if limit > SEGMENT_ABOVE else _simple_odd_sieve(limit)
    padded = np.zeros(_mask_bytes(limit) * 8, dtype=bool)
    padded[: len(odd)] = odd
    return _from_mask(limit, np.packbits(padded, bitorder="little"))


_TABLE_CACHE: dict[int, PrimeTable] = {}


def shared_table(limit: int) -> PrimeTable:
    """A process-wide table covering at least ``limit`` (grown by doubling)."""
    for have, table in _TABLE_CACHE.items():
        if have >= limit:
            return table
    size = max(int(limit), 1 << 16)
    table = sieve(size)
    _TABLE_CACHE.clear()
    _TABLE_CACHE[size] = table
    return table


class PrimeSet:
    """An increasing set of primes, either an explicit list or all primes passing a predicate."""

    def __init__(
        self,
        members: Iterable[int] | None = None,
        predicate: Callable[[int], bool] | None = None,
        table: PrimeTable | None = None,
        name: str = "",
    ):
        if members is not None and predicate is not None:
            raise ValueError("give either members or a predicate, not both")
        self.name = name
        self._predicate = predicate
        self._members: np.ndarray | None = None
        if members is not None:
            arr = np.asarray(sorted(set(int(m) for m in members)), dtype=np.int64)
            if arr.size:
                tab = table or shared_table(int(arr[-1]))
                if not np.all(tab.is_prime_array(arr)):
                    raise DomainError("prime set contains a non-prime")
            self._members = arr

    @classmethod
    def all_primes(cls) -> "PrimeSet":
        return cls(predicate=lambda p: True, name="all primes")

    @classmethod
    def empty(cls) -> "PrimeSet":
        return cls(members=(), name="empty")

    @property
    def is_explicit(self) -> bool:
        return self._members is not None

    def members_in(self, lo: int, hi: int, table: PrimeTable | None = None) -> np.ndarray:
        """Members in ``[lo, hi]`` in increasing order."""
        if self._members is not None:
            m = self._members
            return m[(m >= lo) & (m <= hi)]
        tab = table or shared_table(hi)
        cand = tab.primes(lo, hi)
        if self._predicate is None:
            return cand
        keep = np.fromiter((bool(self._predicate(int(p))) for p in cand), dtype=bool, count=len(cand))
        return cand[keep]

    def __contains__(self, p: int) -> bool:
        if self._members is not None:
            i = np.searchsorted(self._members, p)
            return bool(i < len(self._members) and self._members[i] == p)
        return bool(shared_table(int(p)).is_prime(p) and (self._predicate is None or self._predicate(int(p))))


def next_prime_at_least(x: int, table: PrimeTable | None = None) -> int:
    x = max(int(x), 2)
    tab = table or shared_table(2 * x + 64)
    hi = min(tab.limit, 2 * x + 64)
    found = tab.primes(x, hi)
    if not len(found):
        raise DomainError(f"no prime found in [{x}, {hi}]")
    return int(found[0])


# --------------------------------------------------------- factor queries


def _check_reach(m: int, table: PrimeTable) -> None:
    if math.isqrt(m) > table.limit:
        raise DomainError(f"sqrt({m}) exceeds sieve limit {table.limit}")


def smallest_prime_factor(m: int, table: PrimeTable) -> int | None:
    """``P^-(m)``; None for ``m`` in {0, 1} (empty factorization)."""
    m = int(m)
    if m < 0:
        raise DomainError("m must be nonnegative")
    if m < 2:
        return None
    if m <= table.limit:
        if table.is_prime(m):
            return m
    else:
        _check_reach(m, table)
    for p in table.primes(2, math.isqrt(m)):
        if m % int(p) == 0:
            return int(p)
    return m


def is_quasiprime(m: int, zeta: float, table: PrimeTable) -> bool:
    """True iff no prime ``p <= zeta`` divides ``m`` (so 0 and 1 always qualify)."""
    m = int(m)
    if m < 0:
        raise DomainError("m must be nonnegative")
    if m < 2:
        return True
    _check_reach(m, table)
    for p in table.primes(2, min(math.floor(zeta), math.isqrt(m))):
        if m % int(p) == 0:
            return False
    # Remaining factors all exceed min(zeta, sqrt m); a prime m <= zeta is its own factor.
    return not (m <= zeta)


def is_quasiprime_array(values: np.ndarray, zeta: float, table: PrimeTable | None = None) -> np.ndarray:
    """Vectorized :func:`is_quasiprime` for nonnegative integers."""
    v = np.asarray(values, dtype=np.int64)
    tab = table or shared_table(max(int(zeta) + 1, 2))
    out = np.ones(v.shape, dtype=bool)
    for p in tab.primes(2, math.floor(zeta)):
        p = int(p)
        out &= (v % p != 0) | (v < 2)
    # v == 0 is divisible by everything but is treated as quasiprime by convention
    return out | (v < 2)


def gaussian_prime_sum(m: float, B: float, half_width: float, table: PrimeTable) -> float:
    """Sum over primes ``p`` within ``half_width`` of ``m`` of the N(m, B) density at ``p``.

    The lower window edge may fall below 2 (there are no primes there).
    """
    if not B > 0:
        raise DomainError("B must be positive")
    lo, hi = m - half_width, m + half_width
    if hi > table.limit:
        raise DomainError(f"window [{lo}, {hi}] exceeds sieve limit {table.limit}")
    ps = table.primes(max(2, math.ceil(lo)), math.floor(hi)).astype(float)
    if not len(ps):
        return 0.0
    dens = np.exp(-((ps - m) ** 2) / (2.0 * B)) / math.sqrt(2.0 * math.pi * B)
    return math.fsum(dens)


def trial_division_is_prime(m: int) -> bool:
    """Independent slow check used by tests and sanity probes."""
    if m < 2:
        return False
    if m % 2 == 0:
        return m == 2
    return all(m % q for q in range(3, math.isqrt(m) + 1, 2))


__all__: Sequence[str] = [
    "PrimeTable",
    "PrimeSet",
    "sieve",
    "shared_table",
    "smallest_prime_factor",
    "is_quasiprime",
    "is_quasiprime_array",
    "gaussian_prime_sum",
    "next_prime_at_least",
    "trial_division_is_prime",
]
