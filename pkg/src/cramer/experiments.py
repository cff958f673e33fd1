"""Comparison experiments tying simulation, exact oracles and closed forms together.

Each experiment returns a :class:`ComparisonReport` (or a :class:`Batch` of
them) whose verdict follows the stated rule.  Calibrated constants are read
from :mod:`cramer.calibration` unless passed explicitly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import analytic as an
from . import calibration as cal
from .errors import DomainError
from .harness import ComparisonReport, McReport, mc_estimate, run_blocks, wilson_interval
from .model import (
    ModelSpec,
    exact_law,
    exact_law_mod,
    moments,
    moments_sweep,
    sample_fair_jump_instants,
    sample_sums,
    trajectory_from_rng,
)
from .primes import PrimeSet, is_quasiprime_array, next_prime_at_least, shared_table
from .stochastic import (
    AmplitudeWindow,
    GapConfig,
    amplitude_counting,
    fit_log_slope,
    gap_event_prob,
    gap_statistics,
    lil_subseq_statistic,
    ou_survival_curve,
    ou_survival_prob,
    walk_amplitude_frequency,
)
from .sturm_liouville import EigenProblem, lambda_asymptotic, lambda_curve, principal_eigenvalue

FOUR_SIGMA = 4.0


@dataclass
class Batch:
    """A named group of reports; passes when every member passes."""

    experiment: str
    reports: list[ComparisonReport]
    elapsed_ms: int = 0
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return all(r.verdict for r in self.reports)

    def to_dict(self) -> dict:
        out = {
            "experiment": self.experiment,
            "verdict": "pass" if self.verdict else "fail",
            "elapsed_ms": self.elapsed_ms,
            "reports": [r.to_dict() for r in self.reports],
        }
        if self.details:
            out["details"] = self.details
        return out


def _ms(start: float) -> int:
    return int(round(1000 * (time.perf_counter() - start)))


def _exact(experiment: str, params: dict, estimate: float, predicted: float, rule: str, verdict: bool,
           start: float, **kw) -> ComparisonReport:
    return ComparisonReport(experiment, params, None, None, float(estimate), None, None, float(predicted), rule,
                            bool(verdict), _ms(start), **kw)


def within_sigmas(mc: McReport, exact: float, k: float = FOUR_SIGMA) -> bool:
    sigma = math.sqrt(max(exact * (1 - exact), 0.0) / mc.replicas)
    return abs(mc.estimate - exact) <= k * sigma


# ------------------------------------------------------- exact-law checks


def exact_law_checks(n_grid: Sequence[int] = (100, 1000, 2000)) -> Batch:
    start = time.perf_counter()
    out = []
    t0 = time.perf_counter()
    fair = exact_law(ModelSpec.fair_coin(), 2).probabilities
    target = np.array([0.25, 0.5, 0.25])
    out.append(_exact("exact-law-fair-2", {"model": "fair_coin", "n": 2}, float(np.max(np.abs(fair - target))),
                      0.0, "probabilities == (1/4, 1/2, 1/4) exactly", bool(np.array_equal(fair, target)), t0))
    spec = ModelSpec.cramer()
    for n in n_grid:
        t0 = time.perf_counter()
        law, mom = exact_law(spec, n), moments(spec, n)
        dm = abs(law.mean() - mom.m_n)
        dv = abs(law.variance() - mom.B_n)
        ok = dm <= 1e-9 and dv <= 1e-6 * mom.B_n and abs(law.probabilities.sum() - 1) <= 1e-12
        out.append(_exact("exact-law-moments", {"model": "cramer", "n": n}, law.mean(), mom.m_n,
                          "|mean - m_n| <= 1e-9 and |var - B_n| <= 1e-6 B_n", ok, t0,
                          details={"variance": law.variance(), "B_n": mom.B_n, "mean_error": dm,
                                   "variance_error": dv}))
    return Batch("exact-law", out, _ms(start))


# ---------------------------------------------------- characteristic fn


def quasi_random_frequencies(count: int) -> np.ndarray:
    """Golden-ratio additive sequence folded into ``(-1/2, 1/2)``."""
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    u = np.mod(0.5 + golden * np.arange(1, count + 1), 1.0)
    return u - 0.5


def char_func_suite(n: int = 1000, count: int = 200, small_t: float = 0.005, small_count: int = 101,
                    model: str = "cramer") -> Batch:
    start = time.perf_counter()
    spec = ModelSpec.from_name(model)
    t0 = time.perf_counter()
    worst = 0.0
    for t in quasi_random_frequencies(count):
        v = an.char_func_exact(spec, n, float(t))
        worst = max(worst, abs(v.value) / v.modulus_bound)
    mod = _exact("charfunc-modulus", {"model": model, "n": n, "frequencies": count}, worst, 1.0,
                 "max |Phi_n(t)| / exp(-2 B_n sin^2 pi t) <= 1 + 1e-12", worst <= 1 + 1e-12, t0)
    t0 = time.perf_counter()
    worst = 0.0
    for t in np.linspace(-small_t, small_t, small_count):
        v = an.char_func_exact(spec, n, float(t))
        gap = an.char_func_log_gap(spec, n, float(t))
        if v.phase_error_bound > 0:
            worst = max(worst, gap / v.phase_error_bound)
        elif gap > 0:
            worst = math.inf
    phase = _exact("charfunc-gaussian", {"model": model, "n": n, "t_max": small_t, "points": small_count}, worst,
                   1.0, "max |log Phi_n - log Gaussian| / (12 m_n (pi|t|)^3) <= 1", worst <= 1.0, t0)
    return Batch("charfunc", [mod, phase], _ms(start))


# ------------------------------------------------------------- LLT suites


def llt_sup_error(spec: ModelSpec, n: int, c_win: float = 1.0) -> float:
    """Largest ``|P{S_n = k} - Gaussian(k)|`` over ``k`` in the validity window."""
    law = exact_law(spec, n).probabilities
    mom = moments(spec, n)
    half = an.llt_window_halfwidth(n, c_win)
    k = np.arange(max(0, math.ceil(mom.m_n - half)), min(len(law) - 1, math.floor(mom.m_n + half)) + 1)
    return float(np.max(np.abs(law[k] - an.llt_density_array(mom.m_n, mom.B_n, k.astype(float)))))


def llt_scaled_error(n: int, c_win: float = 1.0, model: str = "cramer") -> float:
    return llt_sup_error(ModelSpec.from_name(model), n, c_win) * n / math.log(n) ** 1.5


def llt_suite(n_grid: Sequence[int] = (500, 1000, 2000, 4000), c_win: float = 1.0,
              K: float | None = None) -> Batch:
    """Scaled LLT error within ``[K/2, 2K]`` with ``K`` from the first grid point."""
    start = time.perf_counter()
    scaled = {}
    for n in n_grid:
        scaled[n] = llt_scaled_error(n, c_win)
    K = scaled[n_grid[0]] if K is None else K
    out = []
    for n in n_grid:
        ok = K / 2 <= scaled[n] <= 2 * K
        out.append(_exact("llt-rate", {"model": "cramer", "n": n, "c_win": c_win}, scaled[n], K,
                          "sup-error * n / (log n)^1.5 in [K/2, 2K]", ok, start))
    return Batch("llt", out, _ms(start), {"K": K})


def fair_llt_scaled_error(n: int) -> float:
    law = exact_law(ModelSpec.fair_coin(), n).probabilities
    z = np.arange(len(law), dtype=float)
    approx = math.sqrt(2.0 / (math.pi * n)) * np.exp(-((2 * z - n) ** 2) / (2.0 * n))
    return float(np.max(np.abs(law - approx))) * n**1.5


def fair_llt_suite(n_grid: Sequence[int] = (100, 1000, 10000), K: float | None = None) -> Batch:
    start = time.perf_counter()
    scaled = {n: fair_llt_scaled_error(n) for n in n_grid}
    K = scaled[n_grid[0]] if K is None else K
    out = [_exact("fair-llt-rate", {"n": n}, scaled[n], K, "sup-error * n^1.5 <= 2K", scaled[n] <= 2 * K, start)
           for n in n_grid]
    return Batch("fair-llt", out, _ms(start), {"K": K})


def clt_check(n: int = 4000, limit: float = 0.02) -> ComparisonReport:
    """Kolmogorov distance between the standardized exact law and the normal law."""
    start = time.perf_counter()
    spec = ModelSpec.cramer()
    law = exact_law(spec, n).probabilities
    mom = moments(spec, n)
    k = np.arange(len(law), dtype=float)
    cdf = np.cumsum(law)
    phi = stats.norm.cdf((k - mom.m_n) / math.sqrt(mom.B_n))
    below = np.concatenate(([0.0], cdf[:-1]))
    dist = float(max(np.max(np.abs(cdf - phi)), np.max(np.abs(below - phi))))
    return _exact("clt-kolmogorov", {"model": "cramer", "n": n}, dist, limit, f"distance <= {limit}",
                  dist <= limit, start)


# --------------------------------------------------------- jump instants


def delta_law_moments(k: int, span: int = 400) -> tuple[float, float, float]:
    m = np.arange(k, k + span + 1, dtype=float)
    p = an.delta_law(k, m)
    mass = math.fsum(p)
    mean = math.fsum(p * m) / mass
    var = math.fsum(p * (m - mean) ** 2) / mass
    return mass, mean, var


def delta_law_suite(k_grid: Sequence[int] = (1, 5, 20, 60)) -> Batch:
    start = time.perf_counter()
    out = []
    for k in k_grid:
        mass, mean, var = delta_law_moments(k)
        ok = abs(mass - 1) <= 1e-12 and abs(mean / (2 * k) - 1) <= 1e-9 and abs(var / (2 * k) - 1) <= 1e-8
        out.append(_exact("delta-law-moments", {"k": k}, mean, 2 * k,
                          "mass 1 within 1e-12; mean 2k within 1e-9 rel; variance 2k within 1e-8 rel", ok, start,
                          details={"mass": mass, "variance": var}))
    return Batch("delta-law", out, _ms(start))


def delta_chisquare(k: int = 10, replicas: int = 10**6, seed: int = 0, workers: int | None = None,
                    alpha: float = 1e-3) -> ComparisonReport:
    """Chi-square goodness of fit of simulated ``k``-th jump instants against the exact law."""
    start = time.perf_counter()
    parts = run_blocks(lambda rng, c: np.bincount(sample_fair_jump_instants(k, c, rng)), replicas, seed, 0,
                       workers, 1 << 16)
    width = max(len(p) for p in parts)
    counts = np.zeros(width, dtype=np.int64)
    for p in parts:
        counts[: len(p)] += p
    m = np.arange(width)
    expected = replicas * np.asarray(an.delta_law(k, m.astype(float)))
    # bins [k, hi) plus an upper tail bin; every bin keeps expectation >= 5
    hi = k
    while hi < width and expected[hi] >= 5:
        hi += 1
    obs = np.append(counts[k:hi], counts[hi:].sum())
    exp_ = np.append(expected[k:hi], replicas - expected[k:hi].sum())
    chi2, pval = stats.chisquare(obs, exp_)
    params = {"k": k, "bins": int(len(obs))}
    return ComparisonReport("delta-chisquare", params, seed, replicas, float(pval), None, None, alpha,
                            "chi-square p-value > 0.001", bool(pval > alpha), _ms(start),
                            details={"chi2": float(chi2)})


def delta_llt_scaled_error(k: int) -> float:
    n = np.arange(k, 2 * k + 40 * int(math.sqrt(k)) + 200, dtype=float)
    err = np.max(np.abs(an.delta_law(k, n) - an.delta_llt(k, n).density))
    return float(err) * k


def delta_llt_suite(k_grid: Sequence[int] = (50, 200), K: float | None = None) -> Batch:
    start = time.perf_counter()
    K = cal.get("delta_llt_K") if K is None else K
    out = []
    for k in k_grid:
        s = delta_llt_scaled_error(k)
        out.append(_exact("delta-llt", {"k": k}, s, K, "k * sup-error <= 2K", s <= 2 * K, start))
    return Batch("delta-llt", out, _ms(start), {"K": K})


# ----------------------------------------------------------- divisibility


def divisibility_scaled_error(n: int, d: int, model: str = "fair_coin") -> float:
    spec = ModelSpec.from_name(model)
    err = abs(exact_law_mod(spec, n, d)[0] - an.divisibility_estimate(spec, d, n))
    if spec.kind.value == "fair_coin":
        return err * n**1.5 / math.log(n) ** 2.5
    return err * n / math.log(n) ** 3


def divisibility_suite(
    poisson_points: Sequence[tuple[int, int]] = ((3, 100), (17, 1000)),
    n_grid: Sequence[int] = (100, 1000, 10000),
    d_grid: Sequence[int] = (2, 3, 5, 17, 97),
    K: float | None = None,
    bound_K: float = 3.0,
) -> Batch:
    start = time.perf_counter()
    out = []
    for d, n in poisson_points:
        t0 = time.perf_counter()
        lhs = an.theta_bernoulli(d, n).value / d
        rhs = an.theta_poisson_dual(d, n)
        out.append(_exact("theta-poisson", {"d": d, "n": n}, lhs, rhs, "|Theta/d - dual sum| <= 1e-12",
                          abs(lhs - rhs) <= 1e-12, t0))
    K = cal.get("divisibility_fair_K") if K is None else K
    t0 = time.perf_counter()
    worst, table = 0.0, {}
    for n in n_grid:
        for d in d_grid:
            s = divisibility_scaled_error(n, d)
            table[f"{n}/{d}"] = s
            worst = max(worst, s)
    out.append(_exact("divisibility-rate", {"model": "fair_coin", "n": list(n_grid), "d": list(d_grid)}, worst, K,
                      "max |P{d | S_n} - Theta/d| n^1.5 / (log n)^2.5 <= 2K", worst <= 2 * K, t0,
                      details={"scaled": table}))
    t0 = time.perf_counter()
    worst, where = 0.0, None
    for n in n_grid:
        for d in range(2, math.isqrt(n) + 1):
            r = an.theta_bound_excess(d, n)
            if r > worst:
                worst, where = r, (d, n)
    out.append(_exact("theta-bound", {"n": list(n_grid), "d": "2..sqrt(n)"}, worst, bound_K,
                      "|Theta/d - 1/d| <= (K/d) exp(-n pi^2 / (2 d^2)) with K = 3", worst <= bound_K, t0,
                      details={"worst_at": list(where) if where else None}))
    return Batch("divisibility", out, _ms(start))


def cramer_divisibility_suite(n_grid: Sequence[int] = (100, 1000, 2000), d_grid: Sequence[int] = (2, 3, 5, 17),
                              K: float | None = None) -> Batch:
    start = time.perf_counter()
    K = cal.get("divisibility_cramer_K") if K is None else K
    out = []
    for n in n_grid:
        worst = max(divisibility_scaled_error(n, d, "cramer") for d in d_grid if d <= n)
        out.append(_exact("divisibility-rate-cramer", {"n": n, "d": list(d_grid)}, worst, K,
                          "max |P{d | S_n} - estimate| n / (log n)^3 <= 2K", worst <= 2 * K, start))
    return Batch("divisibility-cramer", out, _ms(start))


# ------------------------------------------------------------ eigenvalues


def eigen_suite(z_grid: Sequence[float] | None = None) -> Batch:
    start = time.perf_counter()
    out = []
    t0 = time.perf_counter()
    r = principal_eigenvalue(EigenProblem(1.0))
    dev = float(np.max(np.abs(r.eigenfunction - (1 - r.x**2))))
    out.append(_exact("eigen-closed-form", {"z": 1.0}, r.lambda_, 2.0,
                      "|lambda - 2| <= 1e-6 and max |psi - (1 - x^2)| <= 1e-5",
                      abs(r.lambda_ - 2) <= 1e-6 and dev <= 1e-5, t0, details={"eigenfunction_deviation": dev}))
    t0 = time.perf_counter()
    r = principal_eigenvalue(EigenProblem(0.05))
    out.append(_exact("eigen-small-z", {"z": 0.05}, r.asymptotic_ratio, 1.0,
                      "lambda * 4 z^2 / pi^2 in [0.99, 1.01]", 0.99 <= r.asymptotic_ratio <= 1.01, t0,
                      details={"lambda": r.lambda_, "asymptotic": lambda_asymptotic(0.05)}))
    t0 = time.perf_counter()
    zs = list(np.round(np.linspace(0.1, 3.0, 21), 12)) if z_grid is None else list(z_grid)
    curve = [principal_eigenvalue(EigenProblem(float(z))) for z in zs]
    lams = [c.lambda_ for c in curve]
    mono = all(b < a for a, b in zip(lams, lams[1:]))
    out.append(_exact("eigen-monotone", {"z": [float(z) for z in zs]}, float(len(zs)), float(len(zs)),
                      "strictly decreasing on the grid", mono, t0, details={"lambda": lams}))
    return Batch("eigen", out, _ms(start))


# --------------------------------------------------------- OU spectrum


def ou_spectrum_experiment(
    z_grid: Sequence[float] = (0.5, 1.0, 1.5, 2.0),
    T_grid: Sequence[float] = (5.0, 10.0, 15.0, 20.0),
    dt: float = 0.01,
    replicas: int = 10**6,
    seed: int = 0,
    tolerance: float = 0.1,
    method: str = "splitting",
    monitoring: str = "shifted",
    workers: int | None = None,
) -> ComparisonReport:
    """Fitted survival decay rate against ``lambda(z)`` and ``lambda(z)/2``.

    The convention is chosen at ``z = 1`` (whichever lies within the tolerance)
    and must then hold at every ``z`` in the grid.
    """
    start = time.perf_counter()
    zs = [float(z) for z in z_grid]
    if any(not 0.5 <= z <= 2.0 for z in zs):
        raise DomainError("z grid must lie within [0.5, 2]")
    rows = {}
    for i, z in enumerate(zs):
        pts = ou_survival_curve(z, T_grid, dt, replicas, seed, method, monitoring, workers, stream=i + 1)
        slope, _ = fit_log_slope(T_grid, [p.log_estimate for p in pts])
        lam = principal_eigenvalue(EigenProblem(z)).lambda_
        rows[z] = {"rate": -slope, "lambda": lam, "half_lambda": lam / 2,
                   "survival": [p.estimate for p in pts], "log_survival": [p.log_estimate for p in pts]}
    ref = 1.0 if 1.0 in rows else zs[len(zs) // 2]

    def matches(z: float, which: str) -> bool:
        target = rows[z]["lambda"] if which == "lambda" else rows[z]["half_lambda"]
        return abs(rows[z]["rate"] - target) <= tolerance * target

    chosen = next((w for w in ("lambda", "half_lambda") if matches(ref, w)), None)
    uniform = chosen is not None and all(matches(z, chosen) for z in zs)
    for z in zs:
        rows[z]["matches"] = [w for w in ("lambda", "half_lambda") if matches(z, w)]
    predicted = rows[ref][chosen] if chosen else rows[ref]["lambda"]
    params = {"z": zs, "T": list(T_grid), "dt": dt, "method": method, "monitoring": monitoring,
              "tolerance": tolerance}
    return ComparisonReport(
        "ou-spectrum", params, seed, replicas, rows[ref]["rate"], None, None, predicted,
        "rate within 10% of lambda or lambda/2 (chosen at z=1), same choice at every z", uniform, _ms(start),
        note=f"matched convention: {chosen or 'none'}",
        details={"convention": chosen, "per_z": {repr(z): rows[z] for z in zs}},
    )


# ----------------------------------------------------- amplitude events


def amplitude_experiment(c: float = 0.5, z: float = 1.0, k_max_grid: Sequence[int] = (20, 40, 80), k_min: int = 2,
                         replicas: int = 2000, seed: int = 0, dt: float = 0.01, spread: float = 1.25,
                         workers: int | None = None) -> ComparisonReport:
    """Mean amplitude-event count against ``sum k^{-c lambda}`` and ``sum k^{-c lambda / 2}``.

    Passes when, for at least one exponent, the ratio of the mean count to the
    series varies by at most ``spread`` across the ``k_max`` grid.
    """
    start = time.perf_counter()
    lam = principal_eigenvalue(EigenProblem(z)).lambda_
    rows = []
    for k_max in k_max_grid:
        res = amplitude_counting(c, z, k_min, k_max, replicas, seed, dt, lam, workers)
        rows.append({"k_max": k_max, "mean": res.mean, "series_lambda": res.series_full,
                     "series_half_lambda": res.series_half, "ratio_lambda": res.mean / res.series_full,
                     "ratio_half_lambda": res.mean / res.series_half})

    def stretch(key: str) -> float:
        r = [row[key] for row in rows]
        return max(r) / min(r) if min(r) > 0 else math.inf

    stretches = {"lambda": stretch("ratio_lambda"), "half_lambda": stretch("ratio_half_lambda")}
    best = min(stretches, key=stretches.get)
    params = {"c": c, "z": z, "k_min": k_min, "k_max": list(k_max_grid), "dt": dt}
    return ComparisonReport("amplitude-counting", params, seed, replicas, stretches[best], None, None, spread,
                            f"max/min of mean count over series across k_max <= {spread} for one exponent",
                            stretches[best] <= spread, _ms(start), note=f"stable exponent: {best}",
                            details={"lambda": lam, "stretch": stretches, "rows": rows})


def walk_transfer_experiment(k: int = 8, c: float = 0.5, z: float = 1.0, replicas: int = 1000,
                             ou_replicas: int = 10**5, seed: int = 0, dt: float = 0.001,
                             workers: int | None = None) -> ComparisonReport:
    """Walk amplitude-event frequency against OU survival over ``T = c log k``."""
    spec = ModelSpec.cramer()
    window = AmplitudeWindow(c, z, k)
    n_max = 64
    while moments(spec, n_max).B_n < window.variance_high:
        n_max *= 2
    sweep = moments_sweep(spec, n_max)
    walk = walk_amplitude_frequency(sweep, window, replicas, seed, workers)
    ou = ou_survival_prob(z, window.ou_length, dt, ou_replicas, seed, "direct", "shifted", workers=workers)
    sigma = math.sqrt(walk.sigma**2 + ou.sigma**2)
    ok = abs(walk.estimate - ou.estimate) <= FOUR_SIGMA * sigma
    return ComparisonReport.from_mc(walk, ou.estimate, "|walk - OU survival| <= 4 sigma (combined)", ok,
                                    details={"ou_estimate": ou.estimate, "T": window.ou_length,
                                             "sigma": sigma, "dt": dt})


# ------------------------------------------------------ primes and S_n


def sn_prime_exact(n: int, model: str = "cramer") -> float:
    spec = ModelSpec.from_name(model)
    law = exact_law(spec, n).probabilities
    table = shared_table(len(law))
    return math.fsum(law[table.primes(2, len(law) - 1)])


def sn_prime_scaled_error(n: int, b: float = 1.0) -> float:
    spec = ModelSpec.cramer()
    exact = sn_prime_exact(n)
    mom = moments(spec, n)
    table = shared_table(int(mom.m_n + an.sn_prime_halfwidth(spec, n, b)) + 2)
    est = an.sn_prime_estimate(spec, n, b, table)
    return abs(exact - est) / an.sn_prime_error_scale(n)


def sn_prime_experiment(n: int = 3000, b: float = 1.0, replicas: int = 10**5, seed: int = 0, K: float | None = None,
                        workers: int | None = None) -> Batch:
    """Exact prime probability of ``S_n`` versus the Gaussian prime sum and Monte Carlo."""
    start = time.perf_counter()
    if n > 5000:
        raise DomainError("exact mode limited to n <= 5000")
    spec = ModelSpec.cramer()
    K = cal.get("sn_prime_K") if K is None else K
    exact = sn_prime_exact(n)
    mom = moments(spec, n)
    table = shared_table(int(mom.m_n + an.sn_prime_halfwidth(spec, n, b)) + 2)
    est = an.sn_prime_estimate(spec, n, b, table)
    scale = an.sn_prime_error_scale(n)
    t0 = time.perf_counter()
    rule = _exact("sn-prime-analytic", {"n": n, "b": b}, exact, est,
                  "|exact - estimate| <= 2K (log n)^1.5 / sqrt(n), K measured at n = 1000",
                  abs(exact - est) <= 2 * K * scale, t0,
                  details={"K": K, "scaled_error": abs(exact - est) / scale, "error_scale": scale})

    def block(rng: np.random.Generator, count: int) -> int:
        s = sample_sums(spec, n, count, rng)
        return int(np.count_nonzero(table.is_prime_array(s)))

    mc = mc_estimate(block, replicas, seed, "sn-prime-mc", {"n": n, "model": "cramer"}, workers, block_size=1 << 13)
    mc_rep = ComparisonReport.from_mc(mc, exact, "|MC - exact| <= 4 sigma", within_sigmas(mc, exact))
    return Batch("sn-prime", [rule, mc_rep], _ms(start))


def sn_prime_mc_experiment(n: int, b: float = 1.0, replicas: int = 10**4, seed: int = 0, model: str = "cramer",
                           K: float | None = None, workers: int | None = None) -> ComparisonReport:
    """Monte Carlo ``P{S_n prime}`` against the Gaussian prime sum, for ``n`` beyond the exact-law guard."""
    spec = ModelSpec.from_name(model)
    K = cal.get("sn_prime_K") if K is None else K
    mom = moments(spec, n)
    table = shared_table(n + 2)
    est = an.sn_prime_estimate(spec, n, b, table)

    def block(rng: np.random.Generator, count: int) -> int:
        return int(np.count_nonzero(table.is_prime_array(sample_sums(spec, n, count, rng))))

    mc = mc_estimate(block, replicas, seed, "sn-prime-mc", {"n": n, "b": b, "model": model}, workers,
                     block_size=1 << 10)
    slack = 2 * K * an.sn_prime_error_scale(n) + FOUR_SIGMA * mc.sigma
    return ComparisonReport.from_mc(mc, est, "|MC - estimate| <= 2K (log n)^1.5 / sqrt(n) + 4 sigma",
                                    abs(mc.estimate - est) <= slack, details={"m_n": mom.m_n, "K": K})


def sn_prime_sweep(n_grid: Sequence[int] = tuple(range(500, 5001, 500)), threshold: float = 0.24,
                   target_fraction: float = 0.8, b: float = 1.0) -> ComparisonReport:
    """Fraction of ``n`` with ``(log n) P{S_n prime} >= threshold`` (smoke check)."""
    start = time.perf_counter()
    values, grid_K = {}, 0.0
    for n in n_grid:
        exact = sn_prime_exact(n)
        values[n] = math.log(n) * exact
        grid_K = max(grid_K, sn_prime_scaled_error(n, b))
    frac = sum(v >= threshold for v in values.values()) / len(values)
    return _exact("sn-prime-sweep", {"n": list(n_grid), "threshold": threshold}, frac, target_fraction,
                  f"fraction of n with (log n) P{{S_n prime}} >= {threshold} at least {target_fraction}",
                  frac >= target_fraction, start,
                  details={"scaled": {str(k): v for k, v in values.items()}, "max_scaled_error_on_grid": grid_K})


def quasiprime_range(n: int, zeta0: float, c: float) -> tuple[float, float]:
    return zeta0, math.exp(c * math.log(n) / math.log(math.log(n)))


def quasiprime_experiment(n: int = 10**5, zeta: float = 10.0, replicas: int = 10**4, seed: int = 0,
                          zeta0: float = 3.0, c: float = 0.5, model: str = "cramer", start_index: int = 8,
                          workers: int | None = None) -> ComparisonReport:
    """Frequency of ``zeta``-quasiprime values of ``sum_{j=8}^n xi_j`` against ``e^{-gamma}/log zeta``."""
    lo, hi = quasiprime_range(n, zeta0, c)
    if not lo <= zeta <= hi:
        raise DomainError(f"zeta={zeta} outside admissible range [{lo:.4g}, {hi:.4g}]")
    spec = ModelSpec.from_name(model, start_index)
    table = shared_table(int(zeta) + 2)

    def block(rng: np.random.Generator, count: int) -> int:
        s = sample_sums(spec, n, count, rng)
        return int(np.count_nonzero(is_quasiprime_array(s, zeta, table)))

    mc = mc_estimate(block, replicas, seed, "quasiprime", {"n": n, "zeta": zeta, "model": model,
                     "start_index": start_index, "zeta0": zeta0, "c": c}, workers, block_size=1 << 10)
    target = an.quasiprime_asymptotic(zeta)
    ok = 0.8 * target <= mc.estimate <= 1.5 * target
    return ComparisonReport.from_mc(mc, target, "estimate in [0.8, 1.5] e^{-gamma}/log zeta", ok,
                                    details={"admissible_zeta": [lo, hi]})


def binomial_quasiprime_exact(k: int, zeta: float) -> float:
    """``P{Bin(k, 1/2) is zeta-quasiprime}`` by summing the binomial law."""
    v = np.arange(k + 1)
    mask = is_quasiprime_array(v, zeta, shared_table(int(zeta) + 2))
    return math.fsum(stats.binom.pmf(v[mask], k, 0.5))


def fair_quasiprime_experiment(k: int = 10**5, zetas: Sequence[float] = (5.0, 10.0, 20.0), replicas: int = 10**4,
                               seed: int = 0, C0: float | None = None, workers: int | None = None) -> Batch:
    start = time.perf_counter()
    C0 = cal.get("quasiprime_C0") if C0 is None else C0
    out = []
    for i, zeta in enumerate(zetas):
        table = shared_table(int(zeta) + 2)

        def block(rng: np.random.Generator, count: int, zeta=zeta, table=table) -> int:
            return int(np.count_nonzero(is_quasiprime_array(rng.binomial(k, 0.5, size=count), zeta, table)))

        mc = mc_estimate(block, replicas, seed, "fair-quasiprime", {"k": k, "zeta": zeta}, workers, stream=i)
        target = an.quasiprime_asymptotic(zeta)
        bound = 2 * C0 / math.log(zeta) ** 2
        out.append(ComparisonReport.from_mc(mc, target, "|estimate - e^{-gamma}/log zeta| <= 2 C0 / log^2 zeta",
                                            abs(mc.estimate - target) <= bound,
                                            details={"C0": C0, "exact": binomial_quasiprime_exact(k, zeta)}))
    return Batch("fair-quasiprime", out, _ms(start))


def nonprime_bound(n: int, K: float = 5.0, start_index: int = 8) -> tuple[float, float]:
    """``(mu, K log log mu / log mu)`` with ``mu`` the mean of ``sum_{j=start}^n xi_j``."""
    mu = moments(ModelSpec.cramer(start_index), n).m_n
    if mu <= math.e:
        return mu, 1.0
    return mu, K * math.log(math.log(mu)) / math.log(mu)


def nonprime_subsequence_experiment(schedule: Sequence[int] | None = None, replicas: int = 10**4, seed: int = 0,
                                    bound_constant: float = 5.0, extra_n: Sequence[int] = (10**4,),
                                    workers: int | None = None) -> Batch:
    """Monte Carlo ``P{S'_n prime}`` against ``K log log mu / log mu`` along ``n_k = 2^{k^2}``.

    The default schedule keeps ``k = 3, 4``; ``k = 2`` has ``mu < e^e`` where the
    bound is still increasing, and ``k = 5`` is beyond desk scale.
    """
    start = time.perf_counter()
    schedule = [2 ** (k * k) for k in (3, 4)] if schedule is None else list(schedule)
    spec = ModelSpec.cramer(8)
    out, bounds = [], []
    for i, n in enumerate(list(schedule) + list(extra_n)):
        mu, bound = nonprime_bound(n, bound_constant)
        table = shared_table(n + 2)

        def block(rng: np.random.Generator, count: int, n=n, table=table) -> int:
            return int(np.count_nonzero(table.is_prime_array(sample_sums(spec, n, count, rng))))

        mc = mc_estimate(block, replicas, seed, "nonprime-subsequence", {"n": n, "on_schedule": i < len(schedule)},
                         workers, stream=i, block_size=1 << 10)
        if i < len(schedule):
            bounds.append(bound)
        out.append(ComparisonReport.from_mc(mc, bound, f"estimate <= {bound_constant} log log mu / log mu",
                                            mc.estimate <= bound, details={"mu": mu}))
    partial = [float(x) for x in np.cumsum(bounds)]
    terms_decrease = all(b <= a for a, b in zip(bounds, bounds[1:]))
    return Batch("nonprime-subsequence", out, _ms(start),
                 {"bounds": bounds, "partial_sums": partial, "terms_decrease": terms_decrease})


def fair_prime_bound_experiment(n: int = 10**5, replicas: int = 10**4, seed: int = 0, K: float | None = None,
                                workers: int | None = None) -> ComparisonReport:
    K = cal.get("fair_prime_K") if K is None else K
    table = shared_table(n + 2)

    def block(rng: np.random.Generator, count: int) -> int:
        return int(np.count_nonzero(table.is_prime_array(rng.binomial(n, 0.5, size=count))))

    mc = mc_estimate(block, replicas, seed, "fair-prime-bound", {"n": n}, workers)
    rate = math.log(math.log(n)) / math.log(n)
    return ComparisonReport.from_mc(mc, 2 * K * rate, "estimate <= 2K log log n / log n", mc.estimate <= 2 * K * rate,
                                    details={"K": K})


def binomial_prime_exact(n: int) -> float:
    table = shared_table(n + 2)
    return math.fsum(stats.binom.pmf(table.primes(2, n), n, 0.5))


# ------------------------------------------------------- jump-instant hits


def delta_prime_hit_experiment(k: int, replicas: int = 10**6, seed: int = 0, pset: PrimeSet | None = None,
                               workers: int | None = None, stream: int = 0) -> ComparisonReport:
    pset = PrimeSet.all_primes() if pset is None else pset
    exact = an.delta_prime_hit_prob(k, pset)
    table = shared_table(4 * k + 2000)

    def block(rng: np.random.Generator, count: int) -> int:
        d = sample_fair_jump_instants(k, count, rng)
        if pset.is_explicit:
            hit = np.isin(d, pset.members_in(k, int(d.max())))
        else:
            hit = table.is_prime_array(d)
        return int(np.count_nonzero(hit))

    mc = mc_estimate(block, replicas, seed, "delta-prime-hit", {"k": k, "set": pset.name or "explicit"}, workers,
                     stream=stream, block_size=1 << 16)
    return ComparisonReport.from_mc(mc, exact, "|MC - exact| <= 4 sigma", within_sigmas(mc, exact))


def power_of_two_primes(limit: int) -> PrimeSet:
    """Smallest prime at or above each power of two up to ``limit``."""
    members, p = [], 2
    while p <= limit:
        members.append(next_prime_at_least(p))
        p *= 2
    return PrimeSet(members, name="next prime >= 2^i")


def avoidance_experiment(j_max: int = 60, beta: float = 0.4, b: float = 3.0, pset: PrimeSet | None = None,
                         mc_k: Sequence[int] = (64, 512), replicas: int = 10**5, seed: int = 0,
                         K: float | None = None, workers: int | None = None) -> Batch:
    """Hit probabilities of a sparse prime set along ``k = ceil(j^3)``."""
    start = time.perf_counter()
    ks = sorted({int(math.ceil(j**3)) for j in range(1, j_max + 1)})
    limit = 8 * ks[-1] + 4096
    pset = power_of_two_primes(limit) if pset is None else pset
    K = cal.get("avoidance_K") if K is None else K
    table = shared_table(limit)
    # hypothesis: #(P cap [k, bk]) / k^{1/2 - beta} bounded on the grid
    hyp = [len(pset.members_in(k, int(b * k), table)) / k ** (0.5 - beta) for k in ks]
    probs = [an.delta_prime_hit_prob(k, pset, table=table) for k in ks]
    ratios = [p * k**beta for p, k in zip(probs, ks)]
    worst = max(ratios)
    summable = math.fsum(k ** (-beta) for k in ks)
    t0 = time.perf_counter()
    out = [_exact("avoidance-decay", {"j_max": j_max, "beta": beta, "b": b, "set": pset.name}, worst, K,
                  "max_k P{Delta_k in set} k^beta <= 2K", worst <= 2 * K, t0,
                  note="hypothesis holds" if max(hyp) < 10 else "hypothesis violated",
                  details={"k": ks, "hit_prob": probs, "hypothesis_ratio_max": max(hyp),
                           "partial_sum_k_beta": summable, "partial_sum_hits": math.fsum(probs)})]
    for i, k in enumerate(mc_k):
        out.append(delta_prime_hit_experiment(k, replicas, seed, pset, workers, stream=i))
    return Batch("avoidance", out, _ms(start))


# ------------------------------------------------------------- path suites


def gap_scaling_suite(m_grid: Sequence[int] = (10**3, 10**4, 10**5, 10**6), c: float = 1.0) -> ComparisonReport:
    start = time.perf_counter()
    vals = [m**c * gap_event_prob(m, c) for m in m_grid]
    K = vals[0]
    ok = all(K / 2 <= v <= 2 * K for v in vals)
    return _exact("gap-scaling", {"m": list(m_grid), "c": c}, max(vals) / min(vals), K,
                  "m^c P(E_m) in [K/2, 2K] with K at the first m", ok, start, details={"scaled": vals})


def path_suite(seeds: int = 20, n_max: int = 10**7, seed: int = 0, c_gap: float = 1.0, c_count: float = 0.5,
               M: float = math.e, workers: int | None = None,
               lil_range: tuple[float, float] = (0.4, 1.5), gap_range: tuple[float, float] = (0.5, 1.4),
               count_range: tuple[float, float] = (0.1, 10.0)) -> Batch:
    """LIL statistic, largest normalized gap and gap-event counts over independent trajectories."""
    start = time.perf_counter()
    spec = ModelSpec.cramer()
    sweep = moments_sweep(spec, n_max)
    members = np.arange(spec.start_index, n_max + 1)
    min_instant = math.isqrt(n_max)

    def one(rng: np.random.Generator, count: int) -> list[tuple[float, float, int, float]]:
        rows = []
        for _ in range(count):
            traj = trajectory_from_rng(spec, n_max, rng)
            lil = lil_subseq_statistic(traj, sweep, members, M)
            g1 = gap_statistics(traj, c_gap, min_instant=min_instant)
            g2 = gap_statistics(traj, c_count)
            rows.append((lil, g1.max_ratio, g2.count, g2.expected))
        return rows

    rows = [r for part in run_blocks(one, seeds, seed, 0, workers, 1) for r in part]
    lil = [r[0] for r in rows]
    gaps = [r[1] for r in rows]
    counts = [r[2] for r in rows]
    rate = GapConfig(c_count, n_max).rate()
    med_lil, med_gap = float(np.median(lil)), float(np.median(gaps))
    count_ratio = float(np.mean(counts)) / rate
    params = {"n_max": n_max, "trajectories": seeds, "M": M}
    reports = [
        ComparisonReport("lil-subsequence", params, seed, seeds, med_lil, None, None, 1.0,
                         f"median in [{lil_range[0]}, {lil_range[1]}]", lil_range[0] <= med_lil <= lil_range[1],
                         _ms(start), details={"values": lil}),
        ComparisonReport("gap-max-ratio", {**params, "c": c_gap, "min_instant": min_instant}, seed, seeds, med_gap,
                         None, None, 1.0, f"median in [{gap_range[0]}, {gap_range[1]}]",
                         gap_range[0] <= med_gap <= gap_range[1], _ms(start), details={"values": gaps}),
        ComparisonReport("gap-count", {**params, "c": c_count}, seed, seeds, count_ratio, None, None, 1.0,
                         f"mean count / (J^(1-c) (log J)^(-2c)) in [{count_range[0]}, {count_range[1]}]",
                         count_range[0] <= count_ratio <= count_range[1], _ms(start),
                         details={"counts": counts, "expected": rows[0][3], "rate": rate}),
    ]
    return Batch("paths", reports, _ms(start))


# --------------------------------------------------------- determinism


def determinism_check(runner: Callable[[int | None], object], workers: Sequence[int] = (1, 3)) -> bool:
    """Whether ``runner(workers)`` serializes identically for every worker count."""
    from .harness import to_json

    texts = {to_json(runner(w), drop_elapsed=True) for w in workers}
    return len(texts) == 1
