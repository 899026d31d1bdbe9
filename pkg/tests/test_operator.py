import itertools

import numpy as np
import pytest

from llab.errors import GridMismatch, TooLargeForDense
from llab.grid import build_grid
from llab.operator import (DiscreteOperator, count_by_inertia, count_eigenvalues_below, dump_matrix,
                           eigen_dense, quadratic_form_via_apply)
from llab.potential import PotentialField, Uniform01, anderson_realization, constant_potential


def _op(dim, R0, n, c=0.0):
    g = build_grid(dim, R0, n)
    return DiscreteOperator(g, constant_potential(g, c))


def test_constants_in_kernel(kernel_backend):
    op = _op(2, 4, 3)
    assert np.allclose(op.apply(np.ones(op.grid.shape)), 0.0, atol=1e-12)


def test_unit_vector_readout(kernel_backend):
    op = _op(1, 4, 2)
    f = np.zeros(8)
    f[3] = 1.0
    Lf = op.apply(f)
    want = np.zeros(8)
    want[3], want[2], want[4] = 8.0, -4.0, -4.0
    assert np.array_equal(Lf, want)


@pytest.mark.parametrize("dim,R0,n", [(1, 8, 4), (2, 4, 3), (3, 2, 3)])
def test_fourier_eigenfunctions(dim, R0, n, kernel_backend):
    op = _op(dim, R0, n)
    g = op.grid
    h = g.spacing_h
    xs = g.coordinates()
    rng = np.random.default_rng(dim)
    for _ in range(4):
        k = rng.integers(0, R0 * n, size=dim)
        phase = sum(2 * np.pi * ki * x / R0 for ki, x in zip(k, xs))
        f = np.cos(phase) * np.ones(g.shape)
        lam = sum(4 / h ** 2 * np.sin(np.pi * ki / (R0 * n)) ** 2 for ki in k)
        assert np.allclose(op.apply(f), lam * f, atol=1e-10 * max(1.0, lam))


def test_quadratic_form_constants():
    g = build_grid(2, 4, 2)
    V = anderson_realization(g, Uniform01(), 0)
    op = DiscreteOperator(g, V)
    one = np.ones(g.shape)
    assert op.quadratic_form(one) == pytest.approx(g.cell_volume * V.values.sum(), rel=1e-13)
    op_c = DiscreteOperator(g, constant_potential(g, 0.3))
    assert op_c.quadratic_form(one) == pytest.approx(0.3 * 16, rel=1e-13)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_quadratic_form_dual_route(dim, rng):
    g = build_grid(dim, 4, 3)
    op = DiscreteOperator(g, PotentialField(g, rng.random(g.shape)))
    for _ in range(5):
        f = rng.standard_normal(g.shape)
        assert op.quadratic_form(f) == pytest.approx(quadratic_form_via_apply(op, f), rel=1e-12)


def test_symmetric_matrix_and_apply(rng):
    g = build_grid(2, 3, 2)
    op = DiscreteOperator(g, PotentialField(g, rng.random(g.shape)))
    A = op.matrix().toarray()
    assert np.array_equal(A, A.T)
    f = rng.standard_normal(g.shape)
    assert np.allclose(A @ f.ravel(), op.apply(f).ravel(), atol=1e-12)


def test_small_axis_duplicates_summed():
    # 2 points per axis: both neighbours coincide
    op = _op(1, 1, 2)
    A = op.matrix().toarray()
    assert np.allclose(A, [[8.0, -8.0], [-8.0, 8.0]])


def test_closed_form_spectrum():
    spec = eigen_dense(_op(1, 4, 2))
    want = np.sort(16 * np.sin(np.pi * np.arange(8) / 8) ** 2)
    assert np.allclose(spec.eigenvalues, want, atol=1e-12)
    assert spec.eigenvalues[1] == pytest.approx(2.343146, abs=1e-6)


def test_shift_by_constant():
    a = eigen_dense(_op(2, 3, 2)).eigenvalues
    b = eigen_dense(_op(2, 3, 2, c=0.7)).eigenvalues
    assert np.allclose(b, a + 0.7, atol=1e-11)


@pytest.mark.parametrize("dim,R0,n", [(1, 16, 4), (2, 4, 3)])
def test_trace_identity(dim, R0, n):
    g = build_grid(dim, R0, n)
    V = anderson_realization(g, Uniform01(), 3)
    lam = eigen_dense(DiscreteOperator(g, V)).eigenvalues
    want = 2 * dim / g.spacing_h ** 2 * g.total_points + V.values.sum()
    assert abs(lam.sum() - want) <= 1e-9 * abs(want)


def test_monotone_in_potential(rng):
    g = build_grid(1, 8, 2)
    V1 = rng.random(g.shape)
    V2 = V1 + rng.random(g.shape) * 0.5
    a = eigen_dense(DiscreteOperator(g, PotentialField(g, V1))).eigenvalues
    b = eigen_dense(DiscreteOperator(g, PotentialField(g, V2))).eigenvalues
    assert np.all(b >= a - 1e-12)


def test_counts():
    op = _op(1, 4, 2)
    assert count_eigenvalues_below(op, 3.0) == 3
    assert count_eigenvalues_below(op, 3.0, backend="inertia") == 3
    assert count_eigenvalues_below(op, op.spectral_bound()) == 8
    op_c = _op(1, 4, 2, c=1.0)
    assert count_eigenvalues_below(op_c, 0.5) == 0


def test_inertia_matches_dense(rng):
    g = build_grid(2, 4, 3)
    op = DiscreteOperator(g, anderson_realization(g, Uniform01(), 9))
    spec = eigen_dense(op)
    for mu in np.concatenate([rng.uniform(0, spec.eigenvalues[-1], 15), spec.eigenvalues[[0, 5, 40]]]):
        assert count_by_inertia(op, mu) == count_eigenvalues_below(op, mu, spectrum=spec)


def test_dense_limit():
    with pytest.raises(TooLargeForDense):
        eigen_dense(_op(1, 64, 8), dense_dof_limit=100)


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        _op(1, 4, 2).apply(np.ones(9))


def test_dump_matrix(tmp_path):
    op = _op(1, 2, 2, c=1.0)
    p = tmp_path / "m.coo"
    dump_matrix(op, p)
    rows = [ln.split() for ln in p.read_text().splitlines()]
    A = np.zeros((4, 4))
    for r, c, v in rows:
        A[int(r), int(c)] = float(v)
    assert np.array_equal(A, op.matrix().toarray())
