"""Closed-form laws and Gaussian estimates for the Bernoulli walks.

Everything here is a pure function of its arguments.  Frequencies ``t`` are in
cycles, so ``Phi_n(t) = E exp(2 pi i t S_n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .errors import DomainError, NumericError
from .model import ModelKind, ModelSpec, moments
from .primes import PrimeSet, PrimeTable, gaussian_prime_sum, shared_table

EULER_GAMMA = float("0.57721566490153286061")
THETA_TERM_CUTOFF = 1e-18


# ------------------------------------------------- characteristic function


@dataclass(frozen=True)
class CharFuncValue:
    t: float
    value: complex
    modulus_bound: float
    phase_error_bound: float
    log_value: complex | None = None


def _char_bounds(spec: ModelSpec, n: int, t: float) -> tuple[float, float, float, float]:
    mom = moments(spec, n)
    bound = math.exp(-2.0 * mom.B_n * math.sin(math.pi * t) ** 2)
    phase = 12.0 * mom.m_n * (math.pi * abs(t)) ** 3
    return mom.m_n, mom.B_n, bound, phase


def _check_t(t: float) -> None:
    if abs(t) > 0.5:
        raise DomainError("frequency must satisfy |t| <= 1/2")


def _unit(t: float) -> complex:
    """``e^{2 pi i t}``, exact at multiples of 1/4."""
    if (4 * t).is_integer():
        return (1 + 0j, 1j, -1 + 0j, -1j)[int(4 * t) % 4]
    return complex(math.cos(2 * math.pi * t), math.sin(2 * math.pi * t))


def char_func_exact(spec: ModelSpec, n: int, t: float) -> CharFuncValue:
    """``prod_j (1 - p_j + p_j e^{2 pi i t})`` evaluated as a sum of per-factor logs."""
    _check_t(t)
    _, _, bound, phase = _char_bounds(spec, n, t)
    p = spec.weights(n)
    factors = (1.0 - p + p * _unit(t)).astype(complex)
    if np.any(factors == 0):
        return CharFuncValue(t, 0j, bound, phase, None)
    logs = np.log(factors)
    log_value = complex(math.fsum(logs.real), math.fsum(logs.imag))
    return CharFuncValue(t, complex(np.exp(log_value)), bound, phase, log_value)


def char_func_gaussian(spec: ModelSpec, n: int, t: float) -> CharFuncValue:
    """``exp(2 pi i t m_n - 2 B_n (pi t)^2)`` with the cubic phase-error bound."""
    _check_t(t)
    m, B, bound, phase = _char_bounds(spec, n, t)
    log_value = complex(-2.0 * B * (math.pi * t) ** 2, 2.0 * math.pi * t * m)
    return CharFuncValue(t, complex(np.exp(log_value)), bound, phase, log_value)


def char_func_log_gap(spec: ModelSpec, n: int, t: float) -> float:
    """``|log Phi_n(t) - log Gaussian(t)|`` using the continuous branch near 0."""
    ex = char_func_exact(spec, n, t)
    ga = char_func_gaussian(spec, n, t)
    if ex.log_value is None:
        return math.inf
    return abs(ex.log_value - ga.log_value)


# ------------------------------------------------------- local limit laws


@dataclass(frozen=True)
class LltEstimate:
    kappa: int
    density: float
    error_scale: float
    in_validity_window: bool


def llt_window_halfwidth(n: int, c_win: float = 1.0) -> float:
    return c_win * n**0.75 / math.log(n)


def llt_gaussian(spec: ModelSpec, n: int, kappa: int, c_win: float = 1.0) -> LltEstimate:
    mom = moments(spec, n)
    dens = math.exp(-((kappa - mom.m_n) ** 2) / (2.0 * mom.B_n)) / math.sqrt(2.0 * math.pi * mom.B_n)
    scale = math.log(n) ** 1.5 / n
    inside = abs(kappa - mom.m_n) <= llt_window_halfwidth(n, c_win)
    return LltEstimate(int(kappa), dens, scale, bool(inside))


def llt_density_array(m: float, B: float, kappa: np.ndarray) -> np.ndarray:
    return np.exp(-((kappa - m) ** 2) / (2.0 * B)) / math.sqrt(2.0 * math.pi * B)


def lattice_span_characteristic(points: Sequence[float], masses: Sequence[float]) -> float:
    """Sum over adjacent lattice points of the smaller of the two masses.

    The lattice is the one generated by the support, so gaps in the support
    contribute nothing.
    """
    pts = np.asarray(points, dtype=float)
    w = np.asarray(masses, dtype=float)
    keep = w > 0
    pts, w = pts[keep], w[keep]
    if len(pts) < 2:
        return 0.0
    order = np.argsort(pts)
    pts, w = pts[order], w[order]
    diffs = np.diff(pts)
    span = diffs.min()
    for dlt in diffs:
        r = dlt / span
        if abs(r - round(r)) > 1e-9:
            raise DomainError("support is not contained in a lattice")
    adjacent = np.isclose(diffs, span)
    return float(np.sum(np.minimum(w[:-1], w[1:])[adjacent]))


# ---------------------------------------------- fair-coin jump instants


def delta_law(k: int, m):
    """``P{Delta_k = m} = C(m-1, k-1) / 2^m`` (zero for ``m < k``); vectorized in ``m``."""
    if k < 1:
        raise DomainError("k must be >= 1")
    m_arr = np.asarray(m, dtype=float)
    with np.errstate(invalid="ignore"):
        logp = gammaln(m_arr) - gammaln(k) - gammaln(m_arr - k + 1) - m_arr * math.log(2.0)
        out = np.where(m_arr >= k, np.exp(logp), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DeltaLlt:
    k: int
    n: int
    density: float
    error_scale: float


def delta_llt(k: int, n) -> DeltaLlt:
    """Gaussian approximation ``e^{-(n-2k)^2/(4k)} / (2 sqrt(pi k))`` with ``1/k`` error scale."""
    if k < 1:
        raise DomainError("k must be >= 1")
    n_arr = np.asarray(n, dtype=float)
    dens = np.exp(-((n_arr - 2 * k) ** 2) / (4.0 * k)) / (2.0 * math.sqrt(math.pi * k))
    return DeltaLlt(k, n, float(dens) if dens.ndim == 0 else dens, 1.0 / k)


# ---------------------------------------------------------- theta series


@dataclass(frozen=True)
class ThetaValue:
    d: int
    location: float
    scale: float
    value: float
    truncation_bound: float
    terms: int
    two_sided: bool


def theta(d: int, location: float, scale: float, two_sided: bool = False) -> ThetaValue:
    """Theta series ``sum_l cos(2 pi location l / d) exp(-scale pi^2 l^2 / (2 d^2))``.

    One-sided (default) sums ``l >= 0`` with ``l = 0`` once; two-sided sums over
    all integers, pairing ``l`` with ``-l`` so the result is real.  Terms are
    added until the next Gaussian factor falls below 1e-18.
    """
    if d < 1:
        raise DomainError("d must be >= 1")
    if not scale > 0:
        raise DomainError("scale must be positive")
    a = scale * math.pi**2 / (2.0 * d * d)
    last = int(math.ceil(math.sqrt(-math.log(THETA_TERM_CUTOFF) / a)))
    if last > 50_000_000:
        raise NumericError("theta series too long", {"d": d, "scale": scale, "terms": last})
    mult = 2.0 if two_sided else 1.0
    # reduce the phase mod d exactly enough for large locations
    phase = 2.0 * math.pi * math.fmod(location, d) / d
    total = [1.0]
    for lo in range(1, last + 1, 1 << 16):
        ell = np.arange(lo, min(lo + (1 << 16), last + 1), dtype=float)
        g = np.exp(-a * ell * ell)
        total.append(mult * math.fsum(np.cos(phase * ell) * g))
    nxt = math.exp(-a * (last + 1) ** 2)
    tail = mult * nxt / (1.0 - math.exp(-a * (2 * last + 3)))
    return ThetaValue(d, float(location), float(scale), math.fsum(total), tail, last, two_sided)


def theta_bernoulli(d: int, n: int) -> ThetaValue:
    """Two-sided ``sum_l exp(i pi n l / d - n pi^2 l^2 / (2 d^2))``."""
    return theta(d, n / 2.0, float(n), two_sided=True)


def theta_poisson_dual(d: int, n: int) -> float:
    """``sqrt(2/(pi n)) sum_{z = 0 mod d} exp(-(2z - n)^2 / (2n))`` over all integers ``z``.

    This equals ``theta_bernoulli(d, n) / d`` by Poisson summation.
    """
    width = math.sqrt(2.0 * n * 45.0)
    j_lo = math.floor((n / 2.0 - width) / d) - 1
    j_hi = math.ceil((n / 2.0 + width) / d) + 1
    z = d * np.arange(j_lo, j_hi + 1, dtype=float)
    terms = np.exp(-((2 * z - n) ** 2) / (2.0 * n))
    return math.sqrt(2.0 / (math.pi * n)) * math.fsum(terms)


def theta_bound_excess(d: int, n: int) -> float:
    """``|Theta(d,n)/d - 1/d|`` divided by ``e^{-n pi^2/(2 d^2)}/d``.

    Computed from the series with the leading factor divided out, so it stays
    finite when the exponential underflows.
    """
    a = n * math.pi**2 / (2.0 * d * d)
    last = max(1, int(math.ceil(math.sqrt(1.0 + 45.0 / a))))
    ell = np.arange(1, last + 1, dtype=float)
    phase = math.pi * math.fmod(n, 2 * d) / d
    terms = 2.0 * np.cos(phase * ell) * np.exp(-a * (ell * ell - 1.0))
    return abs(math.fsum(terms))


def divisibility_estimate(spec: ModelSpec, d: int, n: int, literal: bool = False) -> float:
    """Gaussian-periodization estimate of ``P{d | S_n}``.

    The default is the periodized normal law of ``S_n`` reduced mod ``d``,
    ``(1/d) sum_{l in Z} e^{2 pi i l m_n/d} e^{-2 pi^2 B_n l^2/d^2}``; for the fair
    coin it coincides with ``theta_bernoulli(d, n)/d``.  ``literal=True`` uses
    the one-sided series with exponent ``B_n pi^2 l^2 / (2 d^2)`` instead.
    """
    if not 2 <= d <= n:
        raise DomainError("need 2 <= d <= n")
    mom = moments(spec, n)
    if literal:
        return theta(d, mom.m_n, mom.B_n).value / d
    if spec.kind is ModelKind.FAIR_COIN and spec.start_index == 1:
        return theta_bernoulli(d, n).value / d
    return theta(d, mom.m_n, 4.0 * mom.B_n, two_sided=True).value / d


# ------------------------------------------------------- prime estimates


def quasiprime_asymptotic(zeta: float) -> float:
    """Mertens-type density ``e^{-gamma} / log zeta`` of ``zeta``-quasiprimes."""
    if not zeta > 1:
        raise DomainError("zeta must exceed 1")
    return math.exp(-EULER_GAMMA) / math.log(zeta)


def sn_prime_halfwidth(spec: ModelSpec, n: int, b: float) -> float:
    mom = moments(spec, n)
    return math.sqrt(2.0 * b * mom.B_n * math.log(n))


def sn_prime_error_scale(n: int) -> float:
    return math.log(n) ** 1.5 / math.sqrt(n)


def sn_prime_estimate(spec: ModelSpec, n: int, b: float, table: PrimeTable) -> float:
    """Gaussian-weighted prime sum over ``|p - m_n| <= sqrt(2 b B_n log n)``."""
    if not b > 0.5:
        raise DomainError("b must exceed 1/2")
    mom = moments(spec, n)
    hw = sn_prime_halfwidth(spec, n, b)
    if mom.m_n + hw > table.limit:
        raise DomainError("sieve too small for the estimate window")
    return gaussian_prime_sum(mom.m_n, mom.B_n, hw, table)


def delta_prime_hit_prob(
    k: int, pset: PrimeSet, tail_eps: float = 1e-15, table: PrimeTable | None = None
) -> float:
    """``P{Delta_k in pset} = (1/2) sum_{nu in pset, nu >= k} P{Bin(nu-1, 1/2) = k-1}``.

    Summation stops at the first ``N`` with ``P{Delta_k > N} < tail_eps``.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    # P{Delta_k > N} = P{Bin(N, 1/2) <= k - 1}
    hi = 2 * k + 16
    while binom.cdf(k - 1, hi, 0.5) >= tail_eps:
        hi = int(hi * 1.25) + 16
    tab = table if table is not None and table.limit >= hi else shared_table(hi)
    nus = pset.members_in(k, hi, tab)
    if not len(nus):
        return 0.0
    return math.fsum(np.atleast_1d(delta_law(k, nus.astype(float))))


# ----------------------------------------------------------- zeta sums


@dataclass(frozen=True)
class ZetaSum:
    n: int
    s: float
    partial: float
    asymptotic: float

    @property
    def residual(self) -> float:
        return self.partial - self.asymptotic


def _power_sum(n: int, s: float) -> float:
    parts = []
    for lo in range(1, n + 1, 1 << 20):
        k = np.arange(lo, min(lo + (1 << 20), n + 1), dtype=float)
        parts.append(math.fsum(k ** (-s)))
    return math.fsum(parts)


def zeta_constant(s: float, tol: float = 1e-10) -> float:
    """``lim_n (sum_{k<=n} k^{-s} - n^{1-s}/(1-s))`` for ``0 < s < 1``.

    The differences ``D(n)`` are evaluated at ``n = 16 * 2^j`` and the limit is
    Richardson-extrapolated.  The two leading Euler–Maclaurin corrections
    (orders ``n^{-s}`` and ``n^{-s-1}``) are subtracted in closed form, which
    leaves error exponents ``s+3, s+5, ...`` and keeps the extrapolation
    well conditioned for small ``s``.
    """
    if not 0 < s < 1:
        raise DomainError("zeta_constant needs 0 < s < 1")
    exps = [s + 2.0 * i + 1.0 for i in range(1, 10)]
    n0, levels = 16, 7
    ns = [n0 << j for j in range(levels)]
    # incremental partial sums
    partial, prev, D = 0.0, 0, []
    for n in ns:
        k = np.arange(prev + 1, n + 1, dtype=float)
        partial = math.fsum([partial, math.fsum(k ** (-s))])
        prev = n
        D.append(partial - n ** (1.0 - s) / (1.0 - s) - 0.5 * n**-s + s / 12.0 * n ** (-s - 1.0))
    row = D
    for e in exps[: levels - 2]:
        f = 2.0**e
        row = [(f * row[i + 1] - row[i]) / (f - 1.0) for i in range(len(row) - 1)]
    change = abs(row[-1] - row[-2])
    if change >= tol:
        raise NumericError(
            "zeta constant extrapolation did not reach tolerance", {"s": s, "last_change": change}
        )
    return row[-1]


def zeta_partial_sum(n: int, s: float) -> ZetaSum:
    """``sum_{k=1}^n k^{-s}`` with its two-term asymptotic form."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not 0 < s <= 1:
        raise DomainError("need 0 < s <= 1")
    partial = _power_sum(n, s)
    if s == 1:
        asym = math.log(n) + EULER_GAMMA
    else:
        asym = n ** (1.0 - s) / (1.0 - s) + zeta_constant(s)
    return ZetaSum(n, s, partial, asym)
