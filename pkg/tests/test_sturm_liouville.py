import csv
import math

import mpmath
import numpy as np
import pytest

from cramer.errors import DomainError
from cramer.sturm_liouville import (
    EigenProblem,
    eigenvalue_on_grid,
    lambda_asymptotic,
    lambda_curve,
    principal_eigenvalue,
    principal_lambda,
    rayleigh_quotient,
    write_lambda_curve_csv,
)


def hypergeometric_lambda(z: float, guess: float) -> float:
    """Smallest lambda with 1F1(-lambda/2; 1/2; z^2/2) = 0 (the even solution vanishing at z)."""
    mpmath.mp.dps = 30
    return float(mpmath.findroot(lambda lam: mpmath.hyp1f1(-lam / 2, 0.5, z * z / 2), guess))


def test_closed_form_z1():
    r = principal_eigenvalue(EigenProblem(1.0))
    assert abs(r.lambda_ - 2.0) <= 1e-6
    assert np.max(np.abs(r.eigenfunction - (1 - r.x**2))) <= 1e-5


@pytest.mark.parametrize("z", [0.3, 0.7, 1.5, 2.5, 4.0])
def test_hypergeometric_oracle(z):
    lam = principal_lambda(z)
    assert lam == pytest.approx(hypergeometric_lambda(z, lam), rel=1e-8)


def test_small_z():
    r = principal_eigenvalue(EigenProblem(0.05))
    assert 0.99 <= r.asymptotic_ratio <= 1.01
    ratios = [principal_eigenvalue(EigenProblem(z)).asymptotic_ratio for z in (0.2, 0.1, 0.05)]
    assert all(abs(b - 1) < abs(a - 1) for a, b in zip(ratios, ratios[1:]))


def test_asymptotic_values():
    assert lambda_asymptotic(1.0) == pytest.approx(math.pi**2 / 4)
    assert lambda_asymptotic(0.5) == pytest.approx(math.pi**2)


def test_monotone():
    assert principal_lambda(3) < principal_lambda(2) < principal_lambda(1)
    zs = np.round(np.linspace(0.1, 3.0, 21), 12)
    lams = [r.lambda_ for r in lambda_curve(zs)]
    assert all(b < a for a, b in zip(lams, lams[1:]))


def test_continuity_smoke():
    # the smoke bound only holds while lambda decays no faster than z^-3; past z ~ 1.5 it does
    zs = np.geomspace(0.1, 1.5, 15)
    ratio = zs[1] / zs[0]
    lams = [r.lambda_ for r in lambda_curve(zs)]
    for z, a, b in zip(zs, lams, lams[1:]):
        assert abs(b - a) / a <= 3 * (ratio - 1) * 2 / z


def test_variational_bound():
    for z in (0.5, 1.0, 2.0):
        trial = (lambda x, z=z: np.cos(np.pi * x / (2 * z)),
                 lambda x, z=z: -np.pi / (2 * z) * np.sin(np.pi * x / (2 * z)))
        assert rayleigh_quotient(z, trial) >= principal_lambda(z) - 1e-6


def test_grid_convergence_order():
    exact = 2.0
    errs = [abs(eigenvalue_on_grid(1.0, n) - exact) for n in (101, 201, 401)]
    assert errs[0] / errs[1] >= 3 and errs[1] / errs[2] >= 3


def test_symmetry_and_residual():
    for z in (0.05, 0.5, 1.0, 2.0):
        r = principal_eigenvalue(EigenProblem(z))
        assert np.max(np.abs(r.eigenfunction - r.eigenfunction[::-1])) <= 1e-10
        assert r.residual <= 1e-4 * r.lambda_


def test_domain():
    with pytest.raises(DomainError):
        EigenProblem(0.001)
    with pytest.raises(DomainError):
        EigenProblem(1.0, 100)


def test_csv(tmp_path):
    path = tmp_path / "curve.csv"
    write_lambda_curve_csv(lambda_curve([0.5, 1.0]), path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["z", "lambda", "residual", "asymptotic_ratio"]
    assert float(rows[2][1]) == pytest.approx(2.0, abs=1e-6)
