"""Calibrated constants for rate checks whose absolute constants are unspecified.

Each constant is measured once on a fixed small case, frozen in
``constants.json`` and asserted with a factor-2 margin elsewhere.
:func:`measure` recomputes them so the frozen file can be audited.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources

VERSION = 1

# where each constant is measured
CALIBRATION_POINTS = {
    "llt_K": "Cramér walk, n = 500, sup over the validity window (c_win = 1)",
    "fair_llt_K": "fair coin, n = 100",
    "delta_llt_K": "jump instant Delta_k, k = 10",
    "divisibility_fair_K": "fair coin, n = 100, max over d in {2, 3, 5, 17, 97}",
    "divisibility_cramer_K": "Cramér walk, n = 100, max over d in {2, 3, 5, 17}",
    "sn_prime_K": "Cramér walk, n = 1000, b = 1",
    "quasiprime_C0": "Bin(1000, 1/2), max over zeta in {5, 10, 20}",
    "fair_prime_K": "Bin(1000, 1/2), exact prime probability over log log n / log n",
    "avoidance_K": "next prime >= 2^i, k = ceil(j^3) for j <= 10, beta = 0.4",
    "gap_K": "m = 1000, c = 1",
}


def measure() -> dict[str, float]:
    """Recompute every constant from the exact oracles."""
    from . import analytic as an
    from . import experiments as ex
    from .stochastic import gap_event_prob

    zetas = (5.0, 10.0, 20.0)
    c0 = max(abs(ex.binomial_quasiprime_exact(1000, z) - an.quasiprime_asymptotic(z)) * math.log(z) ** 2
             for z in zetas)
    ks = sorted({int(math.ceil(j**3)) for j in range(1, 11)})
    pset = ex.power_of_two_primes(8 * ks[-1] + 4096)
    avoid = max(an.delta_prime_hit_prob(k, pset) * k**0.4 for k in ks)
    return {
        "llt_K": ex.llt_scaled_error(500),
        "fair_llt_K": ex.fair_llt_scaled_error(100),
        "delta_llt_K": ex.delta_llt_scaled_error(10),
        "divisibility_fair_K": max(ex.divisibility_scaled_error(100, d) for d in (2, 3, 5, 17, 97)),
        "divisibility_cramer_K": max(ex.divisibility_scaled_error(100, d, "cramer") for d in (2, 3, 5, 17)),
        "sn_prime_K": ex.sn_prime_scaled_error(1000),
        "quasiprime_C0": c0,
        "fair_prime_K": ex.binomial_prime_exact(1000) * math.log(1000) / math.log(math.log(1000)),
        "avoidance_K": avoid,
        "gap_K": 1000 * gap_event_prob(1000, 1.0),
    }


@lru_cache(maxsize=1)
def frozen() -> dict:
    text = resources.files("cramer").joinpath("constants.json").read_text()
    data = json.loads(text)
    if data.get("version") != VERSION:
        raise ValueError("constants file has an unexpected version")
    return data


def get(name: str) -> float:
    return float(frozen()["constants"][name])


def write(path: str) -> None:
    data = {"version": VERSION, "points": CALIBRATION_POINTS, "constants": measure()}
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
