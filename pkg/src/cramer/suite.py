"""The acceptance battery: twelve numbered criteria, each a :class:`Batch` of reports."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

from . import calibration as cal
from . import experiments as ex
from .harness import to_json


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    budget_s: float
    run: Callable[[int, int | None], ex.Batch]


def _batch(name: str, *parts) -> ex.Batch:
    reports = []
    for p in parts:
        reports.extend(p.reports if isinstance(p, ex.Batch) else [p])
    return ex.Batch(name, reports)


def _c1(seed, workers):
    return ex.exact_law_checks()


def _c2(seed, workers):
    return ex.char_func_suite()


def _c3(seed, workers):
    return ex.llt_suite(K=cal.get("llt_K"))


def _c4(seed, workers):
    return _batch("jump-instants", ex.delta_law_suite(), ex.delta_chisquare(10, 10**6, seed, workers),
                  ex.delta_llt_suite())


def _c5(seed, workers):
    return ex.divisibility_suite()


def _c6(seed, workers):
    return ex.eigen_suite()


def _c7(seed, workers):
    return _batch("ou-spectrum", ex.ou_spectrum_experiment(seed=seed, workers=workers))


def _c8(seed, workers):
    return _batch("sn-prime", ex.sn_prime_experiment(3000, 1.0, 10**5, seed, workers=workers), ex.sn_prime_sweep())


def _c9(seed, workers):
    return _batch("quasiprime", ex.quasiprime_experiment(10**5, 10.0, 10**4, seed, workers=workers),
                  ex.fair_quasiprime_experiment(10**5, seed=seed, workers=workers))


def _c10(seed, workers):
    return _batch("avoidance",
                  ex.delta_prime_hit_experiment(20, 10**6, seed, workers=workers, stream=0),
                  ex.delta_prime_hit_experiment(50, 10**6, seed, workers=workers, stream=1),
                  ex.avoidance_experiment(seed=seed, workers=workers))


def _c11(seed, workers):
    return _batch("gaps", ex.gap_scaling_suite(), ex.path_suite(20, 10**7, seed, workers=workers))


def determinism_battery(seed: int, workers: int | None) -> list:
    """Reduced-size re-runs of every Monte Carlo experiment family."""
    # replica counts span at least two blocks so the worker count actually matters
    return [
        ex.delta_chisquare(10, 10**5, seed, workers),
        ex.delta_prime_hit_experiment(50, 10**5, seed, workers=workers),
        ex.sn_prime_experiment(1000, 1.0, 20000, seed, workers=workers),
        ex.quasiprime_experiment(10**4, 5.0, 3000, seed, workers=workers),
        ex.fair_quasiprime_experiment(10**4, (5.0,), 40000, seed, workers=workers),
        ex.nonprime_subsequence_experiment([512], 3000, seed, extra_n=(), workers=workers),
        ex.avoidance_experiment(j_max=10, mc_k=(64,), replicas=10**5, seed=seed, workers=workers),
        ex.ou_spectrum_experiment((1.0,), (2.0, 4.0), 0.01, 40000, seed, workers=workers),
        ex.amplitude_experiment(k_max_grid=(10, 20), replicas=2500, seed=seed, workers=workers),
        ex.walk_transfer_experiment(4, replicas=600, ou_replicas=40000, seed=seed, dt=0.01, workers=workers),
        ex.path_suite(3, 10**5, seed, workers=workers),
    ]


def _c12(seed, workers):
    start = time.perf_counter()
    texts = {}
    for w in (1, 3):
        texts[w] = [to_json(r, drop_elapsed=True) for r in determinism_battery(seed, w)]
    same = [a == b for a, b in zip(texts[1], texts[3])]
    rep = ex._exact("determinism", {"workers": [1, 3], "experiments": len(same)}, float(sum(same)),
                    float(len(same)), "byte-identical reports (elapsed_ms excluded) across worker counts",
                    all(same), start)
    return ex.Batch("determinism", [rep])


CRITERIA = [
    Criterion(1, "exact-law sanity", 1, _c1),
    Criterion(2, "characteristic-function inequalities", 5, _c2),
    Criterion(3, "local limit rate", 60, _c3),
    Criterion(4, "jump-instant laws", 30, _c4),
    Criterion(5, "theta divisibility", 120, _c5),
    Criterion(6, "principal eigenvalue", 30, _c6),
    Criterion(7, "OU survival spectrum", 300, _c7),
    Criterion(8, "prime probability of S_n", 180, _c8),
    Criterion(9, "quasiprime frequencies", 180, _c9),
    Criterion(10, "prime-set avoidance of jump instants", 120, _c10),
    Criterion(11, "gap events and path statistics", 300, _c11),
    Criterion(12, "determinism across worker counts", 60, _c12),
]


def run_criterion(number: int, seed: int = 0, workers: int | None = None) -> tuple[ex.Batch, float]:
    crit = CRITERIA[number - 1]
    start = time.perf_counter()
    batch = crit.run(seed, workers)
    elapsed = time.perf_counter() - start
    batch.experiment = f"criterion-{crit.number:02d}-{batch.experiment}"
    batch.elapsed_ms = int(round(1000 * elapsed))
    return batch, elapsed


def passed(number: int, batch: ex.Batch, elapsed: float) -> bool:
    return batch.verdict and elapsed <= CRITERIA[number - 1].budget_s


def status_line(number: int, batch: ex.Batch, elapsed: float) -> str:
    crit = CRITERIA[number - 1]
    failed = [r.experiment for r in batch.reports if not r.verdict]
    if elapsed > crit.budget_s:
        failed.append("runtime budget")
    tag = "FAIL" if failed else "PASS"
    extra = f" failed: {', '.join(failed)}" if failed else ""
    return f"criterion {number:2d} {tag} ({crit.title}; {elapsed:.1f}s of {crit.budget_s:g}s){extra}"
