"""The numba kernels and their numpy fallbacks must agree."""
import numpy as np
import pytest

from llab import _kernels

pytestmark = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


@pytest.mark.parametrize("shape", [(17,), (6, 9), (4, 5, 3)])
def test_stencil(shape, rng):
    f = rng.standard_normal(shape)
    V = rng.random(shape)
    a = _kernels.stencil_apply_numba(f, V, 7.0)
    b = _kernels.stencil_apply_numpy(f, V, 7.0)
    assert np.allclose(a, b, rtol=1e-14, atol=1e-12)


@pytest.mark.parametrize("op", ["min", "max", "sum"])
def test_segment_reduce(op, rng):
    vals = rng.standard_normal(120)
    labels = rng.integers(0, 7, size=120)
    labels[:7] = np.arange(7)
    a = _kernels.segment_reduce_numba(vals, labels, 7, op)
    b = _kernels.segment_reduce_numpy(vals, labels, 7, op)
    assert np.allclose(a, b, rtol=1e-13)


@pytest.mark.parametrize("shape", [(40,), (8, 11), (4, 4, 5)])
def test_plateau_minima(shape, rng):
    # coarse levels make plateaus common
    w = rng.integers(0, 4, size=shape).astype(float).ravel()
    a = np.sort(_kernels.plateau_minima_numba(w, shape))
    b = np.sort(_kernels.plateau_minima_numpy(w, shape))
    assert np.array_equal(a, b)


def test_ring_example():
    w = np.array([3, 1, 2, 5, 4, 6, 2, 3], dtype=float)
    for fn in (_kernels.plateau_minima_numba, _kernels.plateau_minima_numpy):
        assert sorted(fn(w, w.shape)) == [1, 4, 6]


def test_set_backend():
    prev = _kernels.backend()
    try:
        _kernels.set_backend("numpy")
        assert _kernels.backend() == "numpy"
        with pytest.raises(ValueError):
            _kernels.set_backend("fortran")
    finally:
        _kernels.set_backend(prev)
