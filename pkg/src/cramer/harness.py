"""Seeded, replica-parallel Monte Carlo plumbing and report serialization.

Replicas are grouped into fixed-size blocks.  Block ``b`` of stream ``s`` draws
from a Philox generator keyed by ``(master_seed, s, b)``, so the output depends
on the master seed and block size only, never on how many workers run it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError
from .model import make_generator

Z95 = 1.959963984540054
DEFAULT_BLOCK = 1 << 14
WORKERS_ENV = "CRAMER_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError as exc:
            raise DomainError(f"{WORKERS_ENV} must be a positive integer") from exc
        if value < 1:
            raise DomainError(f"{WORKERS_ENV} must be a positive integer")
        return value
    return os.cpu_count() or 1


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise DomainError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # guard against rounding pushing the point estimate outside
    return min(lo, p), max(hi, p)


def block_generator(master_seed: int, stream: int, block: int) -> np.random.Generator:
    return make_generator((master_seed, stream, block))


def block_sizes(replicas: int, block_size: int = DEFAULT_BLOCK) -> list[int]:
    full, rest = divmod(replicas, block_size)
    return [block_size] * full + ([rest] if rest else [])


def run_blocks(
    fn: Callable[[np.random.Generator, int], Any],
    replicas: int,
    master_seed: int,
    stream: int = 0,
    workers: int | None = None,
    block_size: int = DEFAULT_BLOCK,
) -> list[Any]:
    """Apply ``fn(rng, count)`` to every block; results come back in block order."""
    if replicas < 1:
        raise DomainError("replicas must be positive")
    sizes = block_sizes(replicas, block_size)
    workers = default_workers() if workers is None else workers

    def one(b: int) -> Any:
        return fn(block_generator(master_seed, stream, b), sizes[b])

    if workers <= 1 or len(sizes) == 1:
        return [one(b) for b in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(len(sizes))))


@dataclass
class McReport:
    experiment: str
    params: dict
    master_seed: int
    replicas: int
    successes: int | None
    estimate: float
    ci_low: float
    ci_high: float
    elapsed_ms: int = 0

    @property
    def sigma(self) -> float:
        p = self.estimate
        return math.sqrt(max(p * (1 - p), 0.0) / self.replicas)

    @classmethod
    def from_counts(
        cls, experiment: str, params: dict, master_seed: int, successes: int, replicas: int, elapsed_ms: int = 0
    ) -> "McReport":
        lo, hi = wilson_interval(successes, replicas)
        return cls(experiment, dict(params), int(master_seed), int(replicas), int(successes),
                   successes / replicas, lo, hi, int(elapsed_ms))


def mc_estimate(
    event: Callable[[np.random.Generator, int], int],
    replicas: int,
    master_seed: int,
    experiment: str = "mc",
    params: dict | None = None,
    workers: int | None = None,
    stream: int = 0,
    block_size: int = DEFAULT_BLOCK,
) -> McReport:
    """Frequency of an event; ``event(rng, count)`` returns the number of hits among ``count`` replicas."""
    if replicas < 100:
        raise DomainError("mc_estimate needs at least 100 replicas")
    start = time.perf_counter()
    hits = run_blocks(event, replicas, master_seed, stream, workers, block_size)
    total = int(sum(int(h) for h in hits))
    if not 0 <= total <= replicas:
        raise ValueError("event returned an impossible hit count")
    elapsed = int(round(1000 * (time.perf_counter() - start)))
    return McReport.from_counts(experiment, params or {}, master_seed, total, replicas, elapsed)


def per_replica(predicate: Callable[[np.random.Generator], bool]) -> Callable[[np.random.Generator, int], int]:
    """Adapt a one-replica predicate to the block interface (draws stay sequential in the block)."""

    def block(rng: np.random.Generator, count: int) -> int:
        return sum(1 for _ in range(count) if predicate(rng))

    return block


# --------------------------------------------------------------- reports


@dataclass
class ComparisonReport:
    experiment: str
    params: dict
    master_seed: int | None
    replicas: int | None
    estimate: float
    ci_low: float | None
    ci_high: float | None
    predicted: float
    rule: str
    verdict: bool
    elapsed_ms: int = 0
    note: str = ""
    details: dict = field(default_factory=dict)

    @classmethod
    def from_mc(cls, mc: McReport, predicted: float, rule: str, verdict: bool, **kw) -> "ComparisonReport":
        return cls(mc.experiment, mc.params, mc.master_seed, mc.replicas, mc.estimate, mc.ci_low,
                   mc.ci_high, predicted, rule, bool(verdict), mc.elapsed_ms, **kw)

    def to_dict(self) -> dict:
        out = {
            "experiment": self.experiment,
            "params": self.params,
            "master_seed": self.master_seed,
            "replicas": self.replicas,
            "estimate": self.estimate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "predicted": self.predicted,
            "rule": self.rule,
            "verdict": "pass" if self.verdict else "fail",
            "elapsed_ms": self.elapsed_ms,
        }
        if self.note:
            out["note"] = self.note
        if self.details:
            out["details"] = self.details
        return out


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return _plain(float(obj))
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def to_json(report: Any, drop_elapsed: bool = False) -> str:
    data = _plain(report.to_dict() if hasattr(report, "to_dict") else report)
    if drop_elapsed:
        data = _strip_elapsed(data)
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def _strip_elapsed(data: Any) -> Any:
    if isinstance(data, dict):
        return {k: _strip_elapsed(v) for k, v in data.items() if k != "elapsed_ms"}
    if isinstance(data, list):
        return [_strip_elapsed(v) for v in data]
    return data


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(list(header))
    for row in rows:
        out.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_text(path: str | Path | None, text: str) -> None:
    if path is None or str(path) == "-":
        print(text, end="")
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)
