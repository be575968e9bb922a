import pytest

from stabletrees import sampler
from stabletrees.index import StableIndex


@pytest.fixture(scope="session")
def idx2():
    return StableIndex(2.0)


@pytest.fixture(scope="session")
def idx15():
    return StableIndex(1.5)


@pytest.fixture(scope="session")
def table15(idx15):
    """Small gamma=1.5 CDF table shared by the sampler/laplace tests."""
    return sampler.default_mstar_table(idx15, n_points=48)


@pytest.fixture(scope="session")
def mstar_table2(idx2):
    return sampler.default_mstar_table(idx2)


def pytest_configure(config):
    # compile the numba kernels once up front so per-test timings are honest
    from stabletrees import _kernels

    _kernels.warmup()
