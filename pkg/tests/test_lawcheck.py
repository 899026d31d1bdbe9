import math

import numpy as np
import pytest

from llab.counting import CountingCurve, LandscapeCounter, fit_constant_upper, geometric_mu_grid, ids_curve
from llab.errors import CubeUnresolvable, InsufficientMinima, ValidationError
from llab.grid import build_grid, partition
from llab.landscape import LandscapeField, solve_landscape
from llab.lawcheck import (check_doubling, check_lower_general, check_upper, minima_ratio_diagnostic,
                           moser_harnack_probe, run_lawcheck)
from llab.operator import DiscreteOperator, eigen_dense
from llab.potential import constant_potential, smooth_periodic_potential

from helpers import anderson_fixture


@pytest.fixture(scope="module")
def sample():
    grid, V, op, land = anderson_fixture(R0=64, seed=7)
    spec = eigen_dense(op)
    mu = geometric_mu_grid(1 / 64 ** 2, 50, 32)
    return land, spec, ids_curve(spec, mu, 64)


def test_upper_with_fitted_constant(sample):
    land, _, ids = sample
    C4 = fit_constant_upper(ids, land).C
    res = check_upper(ids, land, C4)
    assert res.passed and res.rows


def test_upper_small_constant_fails(sample):
    land, _, ids = sample
    res = check_upper(ids, land, 0.01)
    assert not res.passed
    assert res.excluded_mu  # small C4*mu falls below the coarsest scale


def test_upper_flat_low_energy():
    g = build_grid(1, 32, 4)
    op = DiscreteOperator(g, constant_potential(g, 1.0))
    land = solve_landscape(op)
    mu = np.array([0.01, 0.1, 0.5])
    ids = ids_curve(eigen_dense(op), mu, 32)
    res = check_upper(ids, land, 1.5)
    assert res.passed
    assert all(r["N"] == 0 and r["Nu"] == 0 for r in res.rows)


def test_upper_rejects_nonpositive(sample):
    land, _, ids = sample
    with pytest.raises(ValidationError):
        check_upper(ids, land, 0.0)


def test_lower_degenerate_constants(sample):
    land, _, ids = sample
    assert check_lower_general(ids, land, 1 / 32, 0.0, 32.0 ** 3, 1.0).passed
    # C2 tiny: both reads sit far below the floor of W
    res = check_lower_general(ids, land, 1 / 32, 5.0, 1.0, 1.0,
                              mu_range=(1.0, 50.0))
    assert res.passed


def test_run_lawcheck_fits_pass(sample):
    land, spec, ids = sample
    rep = run_lawcheck(ids, land, spec, s_values=(0.5, 1.0), minima_count=5)
    assert rep.verdicts == {"upper": True, "lower_general": True}
    assert rep.constants["C2"] == 32.0 ** 3
    assert 0 < rep.constants["C2prime_hat"] <= 1
    assert len(rep.diagnostics["minima_ratios"]) == 5
    assert "PASS" in rep.summary()
    assert rep.to_json() == rep.to_json()


@pytest.mark.parametrize("dim,R0,n", [(1, 8, 4), (2, 4, 4), (3, 4, 2)])
def test_doubling_closed_form(dim, R0, n):
    g = build_grid(dim, R0, n)
    land = LandscapeField(g, np.ones(g.shape), 0.0, 0)
    s_values = [s for s in (0.25, 0.5, 1.0, 2.0) if 2 * s * n <= R0 * n and s * n >= 1]
    res = check_doubling(land, s_values)
    for s in s_values:
        assert abs(res.per_s[float(s)] - 2 ** dim / (1 + s ** 4)) <= 1e-12


def test_doubling_limit_small_s():
    g = build_grid(1, 4, 64)
    land = LandscapeField(g, np.ones(g.shape), 0.0, 0)
    vals = [check_doubling(land, [s]).C_D_hat for s in (1 / 4, 1 / 16, 1 / 64)]
    assert all(v < 2 for v in vals)
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] == pytest.approx(2.0, rel=1e-6)


def test_doubling_too_big():
    g = build_grid(1, 4, 2)
    with pytest.raises(CubeUnresolvable):
        check_doubling(LandscapeField(g, np.ones(8), 0.0, 0), [3.0])


def _smooth(n, R0=16):
    g = build_grid(1, R0, n)
    return solve_landscape(DiscreteOperator(g, smooth_periodic_potential(g, 1.0)))


def test_doubling_refinement_stable():
    a = check_doubling(_smooth(8), [0.5, 1.0, 2.0]).C_D_hat
    b = check_doubling(_smooth(16), [0.5, 1.0, 2.0]).C_D_hat
    assert abs(b - a) <= 0.1 * a


@pytest.mark.parametrize("dim", [1, 2])
def test_harnack_unit(dim):
    g = build_grid(dim, 4, 4)
    land = LandscapeField(g, np.ones(g.shape), 0.0, 0)
    res = moser_harnack_probe(land, partition(g, 1.0))
    assert res.C_H_hat == pytest.approx(1 / (2 ** (dim / 2) + 1), rel=1e-14)


def test_harnack_constant_limit():
    g = build_grid(1, 8, 4)
    K = 1e6
    res = moser_harnack_probe(LandscapeField(g, np.full(g.shape, K), 0.0, 0), partition(g, 1.0))
    assert res.C_H_hat == pytest.approx(2 ** -0.5, rel=1e-5)


def test_harnack_refinement_stable():
    vals = []
    for n in (8, 16):
        _, _, _, land = anderson_fixture(R0=32, n=n, seed=3)
        vals.append(moser_harnack_probe(land, partition(land.grid, 1.0)).C_H_hat)
    assert all(math.isfinite(v) for v in vals)
    assert abs(vals[1] - vals[0]) <= 0.1 * vals[0]


@pytest.mark.parametrize("dim", [1, 2])
def test_minima_ratio_flat(dim):
    g = build_grid(dim, 4, 2)
    op = DiscreteOperator(g, constant_potential(g, 0.6))
    land = solve_landscape(op)
    rows = minima_ratio_diagnostic(eigen_dense(op), land, 1)
    assert rows[0]["w"] == pytest.approx(0.6, rel=1e-9)
    assert rows[0]["lambda"] == pytest.approx(0.6, rel=1e-9)
    assert rows[0]["ratio"] == pytest.approx(1 / (1 + dim / 4), rel=1e-9)
    with pytest.raises(InsufficientMinima):
        minima_ratio_diagnostic(eigen_dense(op), land, 2)
