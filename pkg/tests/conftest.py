import numpy as np
import pytest

from llab import _kernels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["numba", "numpy"])
def kernel_backend(request):
    if request.param == "numba" and not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    prev = _kernels.backend()
    _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(prev)
