"""Principal Dirichlet eigenvalue of ``psi'' - x psi' = -lambda psi`` on ``[-z, z]``.

Multiplying by ``w(x) = exp(-x^2/2)`` gives the self-adjoint form
``(w psi')' = -lambda w psi``.  Central differences turn it into a symmetric
tridiagonal generalized problem ``K v = lambda W v`` with diagonal ``W``; the
substitution ``u = W^{1/2} v`` makes it an ordinary symmetric tridiagonal
problem whose smallest eigenvalue is found by Sturm-sequence bisection.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal, solve_banded

from .errors import DomainError, NumericError

Z_MIN, Z_MAX = 0.01, 10.0
DEFAULT_GRID = 20_001


@dataclass(frozen=True)
class EigenProblem:
    z: float
    grid_points: int = DEFAULT_GRID

    def __post_init__(self) -> None:
        if not Z_MIN <= self.z <= Z_MAX:
            raise DomainError(f"z must lie in [{Z_MIN}, {Z_MAX}]")
        if self.grid_points < 3 or self.grid_points % 2 == 0:
            raise DomainError("grid_points must be odd and >= 3")

    @property
    def h(self) -> float:
        return 2.0 * self.z / (self.grid_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.z, self.z, self.grid_points)


@dataclass(frozen=True)
class EigenResult:
    z: float
    grid_points: int
    lambda_: float
    x: np.ndarray
    eigenfunction: np.ndarray  # on the N-point grid, 1 at x = 0, zero at both ends
    residual: float
    coarse_lambda: float
    fine_lambda: float

    @property
    def asymptotic_ratio(self) -> float:
        return self.lambda_ * 4.0 * self.z**2 / math.pi**2

    @property
    def lam(self) -> float:
        return self.lambda_


def _solve_grid(z: float, n: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Smallest discrete eigenvalue and the eigenfunction on an ``n``-point grid.

    The principal mode is even, so only nodes ``x >= 0`` are kept, with the
    reflection ``psi(-h) = psi(h)`` folded into the first row (halving the
    weight of the centre node keeps the matrix symmetric).
    """
    half = (n - 1) // 2  # unknowns at x = 0, h, ..., z - h
    h = 2.0 * z / (n - 1)
    xs = h * np.arange(half)
    mass = np.exp(-0.5 * xs * xs)
    mass[0] *= 0.5
    w_half = np.exp(-0.5 * (h * (np.arange(half) + 0.5)) ** 2)  # w at x_i + h/2
    stiff_diag = w_half / (h * h)
    stiff_diag[1:] += w_half[:-1] / (h * h)
    stiff_off = -w_half[:-1] / (h * h)
    root = np.sqrt(mass)
    diag = stiff_diag / mass
    off = stiff_off / (root[:-1] * root[1:])
    try:
        vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    except (LinAlgError, ValueError) as exc:
        raise NumericError("tridiagonal eigen-solve failed", {"z": z, "grid_points": n}) from exc
    if not len(vals) or not np.isfinite(vals[0]):
        raise NumericError("no eigenvalue returned", {"z": z, "grid_points": n})
    v = vecs[:, 0]
    # One inverse-iteration step cleans rounding noise out of the vector.
    band = np.zeros((3, half))
    band[0, 1:] = off
    band[1] = diag - vals[0] * (1.0 - 1e-12)
    band[2, :-1] = off
    try:
        v = solve_banded((1, 1), band, v)
    except (LinAlgError, ValueError) as exc:
        raise NumericError("inverse iteration failed", {"z": z, "grid_points": n}) from exc
    phi = v / root
    phi /= phi[0]
    # Rayleigh quotient in difference form: no cancellation, quadratic accuracy.
    jumps = np.diff(np.append(phi, 0.0))
    lam = math.fsum(w_half * jumps * jumps) / (h * h) / math.fsum(mass * phi * phi)
    psi = np.concatenate((phi[:0:-1], phi, [0.0]))
    psi = np.concatenate(([0.0], psi))
    x = np.linspace(-z, z, n)
    return lam, x, psi


def eigenvalue_on_grid(z: float, grid_points: int) -> float:
    """Unextrapolated discrete eigenvalue (second order in the spacing)."""
    EigenProblem(z, grid_points)
    return _solve_grid(z, grid_points)[0]


def _residual(x: np.ndarray, psi: np.ndarray, lam: float) -> float:
    h = x[1] - x[0]
    d2 = (psi[2:] - 2 * psi[1:-1] + psi[:-2]) / (h * h)
    d1 = (psi[2:] - psi[:-2]) / (2 * h)
    return float(np.max(np.abs(d2 - x[1:-1] * d1 + lam * psi[1:-1])))


def principal_eigenvalue(problem: EigenProblem) -> EigenResult:
    """Smallest eigenvalue, Richardson-refined over grids ``N`` and ``2N - 1``."""
    n = problem.grid_points
    lam_c, x, psi = _solve_grid(problem.z, n)
    lam_f, _, _ = _solve_grid(problem.z, 2 * n - 1)
    lam = (4.0 * lam_f - lam_c) / 3.0
    if not lam > 0:
        raise NumericError("non-positive principal eigenvalue", {"z": problem.z, "lambda": lam})
    return EigenResult(
        z=problem.z,
        grid_points=n,
        lambda_=lam,
        x=x,
        eigenfunction=psi,
        residual=_residual(x, psi, lam_c),
        coarse_lambda=lam_c,
        fine_lambda=lam_f,
    )


def principal_lambda(z: float, grid_points: int = DEFAULT_GRID) -> float:
    return principal_eigenvalue(EigenProblem(z, grid_points)).lambda_


def lambda_asymptotic(z: float) -> float:
    """Small-interval limit ``pi^2 / (4 z^2)``."""
    if not z > 0:
        raise DomainError("z must be positive")
    return math.pi**2 / (4.0 * z * z)


def rayleigh_quotient(z: float, trial, nodes: int = 200_001) -> float:
    """``int w phi'^2 / int w phi^2`` by the trapezoid rule, for a callable pair ``(phi, dphi)``."""
    phi, dphi = trial
    x = np.linspace(-z, z, nodes)
    w = np.exp(-0.5 * x * x)
    num = np.trapezoid(w * dphi(x) ** 2, x)
    den = np.trapezoid(w * phi(x) ** 2, x)
    return float(num / den)


def lambda_curve(z_grid: Sequence[float], grid_points: int = DEFAULT_GRID) -> list[EigenResult]:
    zs = [float(z) for z in z_grid]
    if any(b <= a for a, b in zip(zs, zs[1:])):
        raise DomainError("z grid must be strictly increasing")
    results = [principal_eigenvalue(EigenProblem(z, grid_points)) for z in zs]
    lams = [r.lambda_ for r in results]
    if any(b >= a for a, b in zip(lams, lams[1:])):
        raise NumericError("eigenvalue curve is not strictly decreasing", {"z": zs, "lambda": lams})
    return results


def write_lambda_curve_csv(results: Iterable[EigenResult], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["z", "lambda", "residual", "asymptotic_ratio"])
        for r in results:
            out.writerow([repr(r.z), repr(r.lambda_), repr(r.residual), repr(r.asymptotic_ratio)])
