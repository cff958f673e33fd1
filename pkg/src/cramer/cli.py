"""Command-line entry point.

Every subcommand shares one flag set; ``--config FILE`` supplies the same keys
as ``key=value`` lines, and flags given on the command line win.  Exit codes:
0 success or pass, 1 verdict fail, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import analytic as an
from . import experiments as ex
from .errors import CramerError, DomainError
from .harness import csv_text, to_json, write_text
from .model import ModelSpec, exact_law, jump_instants, moments, moments_sweep, sample_trajectory
from .stochastic import gap_statistics, lil_subseq_statistic, ou_survival_curve
from .sturm_liouville import EigenProblem, principal_eigenvalue

COMMANDS = (
    "simulate", "moments", "exact-law", "llt", "charfunc", "theta", "divisibility", "delta-law", "prime-prob",
    "quasiprime", "avoidance", "eigen", "ou-survival", "amplitude", "gaps", "lil-subseq", "suite",
)


@dataclass
class RunConfig:
    command: str = ""
    model: str = "cramer"
    n: int = 1000
    d: int = 3
    z: float = 1.0
    c: float = 0.5
    b: float = 1.0
    zeta: float = 10.0
    k: int = 20
    T: float = 10.0
    dt: float = 0.01
    t: float = 0.1
    replicas: int = 10000
    seed: int = 0
    workers: int | None = None
    output: str = "-"
    format: str = "json"
    criteria: str = "all"


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CASTS = {"int": int, "float": float, "str": str, "int | None": int}


def _cast(key: str, raw: str):
    if key not in _TYPES or key == "command":
        raise DomainError(f"unknown config key: {key}")
    try:
        return _CASTS[_TYPES[key]](raw)
    except ValueError as exc:
        raise DomainError(f"bad value for {key}: {raw!r}") from exc


def read_config(path: str) -> dict:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DomainError(f"cannot read config file {path}: {exc}") from exc
    for number, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{number}: expected key=value")
        key, raw = (part.strip() for part in line.split("=", 1))
        out[key] = _cast(key, raw)
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit 2 with usage on stderr
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cramer", description="Cramér random model experiments and formula evaluation.")
    parser.add_argument("command", choices=COMMANDS)
    # defaults are None so that we can tell which flags were given explicitly
    parser.add_argument("--config", help="flat key=value file; command-line flags win")
    parser.add_argument("--model", choices=["cramer", "cramer_doubled", "fair_coin"])
    for name, kind in (("n", int), ("d", int), ("z", float), ("c", float), ("b", float), ("zeta", float),
                       ("k", int), ("T", float), ("dt", float), ("t", float), ("replicas", int), ("seed", int),
                       ("workers", int)):
        parser.add_argument(f"--{name}", type=kind)
    parser.add_argument("--output", "-o", help="output path ('-' for stdout; a directory for suite)")
    parser.add_argument("--format", choices=["json", "csv"])
    parser.add_argument("--criteria", help="suite only: comma-separated criterion numbers or 'all'")
    return parser


def effective_config(args: argparse.Namespace) -> RunConfig:
    values = read_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        given = getattr(args, f.name, None)
        if given is not None:
            values[f.name] = given
    values["command"] = args.command
    return RunConfig(**values)


# ----------------------------------------------------------- subcommands


def _spec(cfg: RunConfig) -> ModelSpec:
    return ModelSpec.from_name(cfg.model)


def _simulate(cfg):
    traj = sample_trajectory(_spec(cfg), cfg.n, cfg.seed)
    jumps = jump_instants(traj)
    rows = [(j, int(s)) for j, s in zip(traj.indices, traj.partial_sums)]
    data = {"S_n": int(traj.partial_sums[-1]), "jumps": len(jumps.instants),
            "first_jumps": [int(x) for x in jumps.instants[:20]]}
    return data, None, (["j", "S_j"], rows)


def _moments(cfg):
    m = moments(_spec(cfg), cfg.n)
    return {"n": cfg.n, "m_n": m.m_n, "B_n": m.B_n}, None, (["n", "m_n", "B_n"], [(cfg.n, m.m_n, m.B_n)])


def _exact_law(cfg):
    law = exact_law(_spec(cfg), cfg.n)
    p = law.probabilities
    data = {"n": cfg.n, "mean": law.mean(), "variance": law.variance(), "support": len(p),
            "mode": int(np.argmax(p))}
    return data, None, (["k", "probability"], list(enumerate(p.tolist())))


def _llt(cfg):
    spec = _spec(cfg)
    if spec.kind.value == "cramer":
        batch = ex.llt_suite()
    else:
        batch = ex.fair_llt_suite()
    est = an.llt_gaussian(spec, cfg.n, int(round(moments(spec, cfg.n).m_n)))
    data = {"point": asdict(est), "batch": batch.to_dict()}
    return data, batch.verdict, None


def _charfunc(cfg):
    v = an.char_func_exact(_spec(cfg), cfg.n, cfg.t)
    g = an.char_func_gaussian(_spec(cfg), cfg.n, cfg.t)
    data = {"t": cfg.t, "re": v.value.real, "im": v.value.imag, "modulus": abs(v.value),
            "modulus_bound": v.modulus_bound, "gaussian_re": g.value.real, "gaussian_im": g.value.imag,
            "log_gap": an.char_func_log_gap(_spec(cfg), cfg.n, cfg.t), "log_gap_bound": v.phase_error_bound}
    return data, abs(v.value) <= v.modulus_bound * (1 + 1e-12), None


def _theta(cfg):
    th = an.theta_bernoulli(cfg.d, cfg.n)
    data = {"d": cfg.d, "n": cfg.n, "theta": th.value, "theta_over_d": th.value / cfg.d,
            "poisson_dual": an.theta_poisson_dual(cfg.d, cfg.n), "terms": th.terms,
            "truncation_bound": th.truncation_bound}
    return data, None, None


def _divisibility(cfg):
    from .model import exact_law_mod

    spec = _spec(cfg)
    exact = float(exact_law_mod(spec, cfg.n, cfg.d)[0])
    est = an.divisibility_estimate(spec, cfg.d, cfg.n)
    data = {"d": cfg.d, "n": cfg.n, "exact": exact, "estimate": est, "error": abs(exact - est)}
    return data, None, None


def _delta_law(cfg):
    m = np.arange(cfg.k, 4 * cfg.k + 40)
    p = an.delta_law(cfg.k, m.astype(float))
    mass, mean, var = ex.delta_law_moments(cfg.k)
    data = {"k": cfg.k, "mass": mass, "mean": mean, "variance": var}
    return data, None, (["m", "probability"], list(zip(m.tolist(), p.tolist())))


def _prime_prob(cfg):
    if cfg.model == "fair_coin":
        rep = ex.fair_prime_bound_experiment(cfg.n, cfg.replicas, cfg.seed, workers=cfg.workers)
    elif cfg.model == "cramer" and cfg.n <= 5000:
        rep = ex.sn_prime_experiment(cfg.n, cfg.b, cfg.replicas, cfg.seed, workers=cfg.workers)
    else:
        rep = ex.sn_prime_mc_experiment(cfg.n, cfg.b, cfg.replicas, cfg.seed, cfg.model, workers=cfg.workers)
    return rep.to_dict(), rep.verdict, None


def _quasiprime(cfg):
    model = cfg.model
    if model == "fair_coin":
        batch = ex.fair_quasiprime_experiment(cfg.n, (cfg.zeta,), cfg.replicas, cfg.seed, workers=cfg.workers)
        return batch.to_dict(), batch.verdict, None
    start = 8
    rep = ex.quasiprime_experiment(cfg.n, cfg.zeta, cfg.replicas, cfg.seed, c=cfg.c, model=model,
                                   start_index=start, workers=cfg.workers)
    return rep.to_dict(), rep.verdict, None


def _avoidance(cfg):
    batch = ex.avoidance_experiment(replicas=cfg.replicas, seed=cfg.seed, workers=cfg.workers)
    return batch.to_dict(), batch.verdict, None


def _eigen(cfg):
    r = principal_eigenvalue(EigenProblem(cfg.z))
    data = {"z": cfg.z, "lambda": r.lambda_, "residual": r.residual, "asymptotic_ratio": r.asymptotic_ratio}
    rows = [(float(x), float(y)) for x, y in zip(r.x[:: max(1, len(r.x) // 200)], r.eigenfunction[:: max(1, len(r.x) // 200)])]
    return data, None, (["x", "psi"], rows)


def _ou_survival(cfg):
    grid = [cfg.T * i / 4 for i in range(1, 5)]
    pts = ou_survival_curve(cfg.z, grid, cfg.dt, cfg.replicas, cfg.seed, "splitting", "shifted", cfg.workers)
    rows = [(p.T, p.estimate, p.ci_low, p.ci_high) for p in pts]
    data = {"z": cfg.z, "points": [dict(zip(("T", "survival", "ci_low", "ci_high"), r)) for r in rows]}
    return data, None, (["T", "survival", "ci_low", "ci_high"], rows)


def _amplitude(cfg):
    rep = ex.amplitude_experiment(cfg.c, cfg.z, replicas=cfg.replicas, seed=cfg.seed, dt=cfg.dt,
                                  workers=cfg.workers)
    rows = [(r["k_max"], r["mean"]) for r in rep.details["rows"]]
    return rep.to_dict(), rep.verdict, (["k_max", "mean_count"], rows)


def _gaps(cfg):
    spec = ModelSpec.cramer()
    traj = sample_trajectory(spec, cfg.n, cfg.seed)
    g = gap_statistics(traj, cfg.c, min_instant=math.isqrt(cfg.n))
    return asdict(g), None, None


def _lil_subseq(cfg):
    spec = ModelSpec.cramer()
    traj = sample_trajectory(spec, cfg.n, cfg.seed)
    sweep = moments_sweep(spec, cfg.n)
    members = np.arange(spec.start_index, cfg.n + 1)
    n, run = lil_subseq_statistic(traj, sweep, members, math.e, running=True)
    step = max(1, len(n) // 200)
    rows = list(zip(n[::step].tolist(), run[::step].tolist()))
    return {"n_max": cfg.n, "statistic": float(run[-1])}, None, (["n", "running_max"], rows)


def _suite(cfg, stream=None):
    from .suite import CRITERIA, passed, run_criterion, status_line

    numbers = [c.number for c in CRITERIA] if cfg.criteria == "all" else \
        [int(x) for x in cfg.criteria.split(",") if x.strip()]
    if any(not 1 <= x <= len(CRITERIA) for x in numbers):
        raise DomainError("criteria must be numbers between 1 and 12")
    out_dir = Path("reports" if cfg.output == "-" else cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary, ok = [], True
    for number in numbers:
        batch, elapsed = run_criterion(number, cfg.seed, cfg.workers)
        good = passed(number, batch, elapsed)
        ok &= good
        line = status_line(number, batch, elapsed)
        print(line, file=stream or sys.stderr, flush=True)
        summary.append(line)
        payload = batch.to_dict()
        payload["config"] = asdict(cfg)
        (out_dir / f"criterion_{number:02d}.json").write_text(to_json(payload))
    (out_dir / "summary.txt").write_text("\n".join(summary) + "\n")
    return {"criteria": numbers, "summary": summary, "directory": str(out_dir)}, ok, None


HANDLERS = {
    "simulate": _simulate, "moments": _moments, "exact-law": _exact_law, "llt": _llt, "charfunc": _charfunc,
    "theta": _theta, "divisibility": _divisibility, "delta-law": _delta_law, "prime-prob": _prime_prob,
    "quasiprime": _quasiprime, "avoidance": _avoidance, "eigen": _eigen, "ou-survival": _ou_survival,
    "amplitude": _amplitude, "gaps": _gaps, "lil-subseq": _lil_subseq, "suite": _suite,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = effective_config(args)
        data, verdict, table = HANDLERS[cfg.command](cfg)
        if cfg.command != "suite":
            if cfg.format == "csv":
                if table is None:
                    raise DomainError(f"{cfg.command} has no CSV table; use --format json")
                text = csv_text(*table)
            else:
                text = to_json({"config": asdict(cfg), "result": data})
            write_text(cfg.output, text)
        else:
            write_text("-", to_json({"config": asdict(cfg), "result": data}))
    except (CramerError, ValueError) as exc:
        print(f"cramer: error: {exc}", file=sys.stderr)
        return 2
    if verdict is None:
        return 0
    return 0 if verdict else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
