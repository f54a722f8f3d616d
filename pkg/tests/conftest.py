import numpy as np
import pytest
from hypothesis import strategies as st

from temporal_steering import _pykernels

try:
    from temporal_steering import _kernels
except ImportError:  # extension not built
    _kernels = None

KERNEL_MODULES = [_pykernels] + ([_kernels] if _kernels is not None else [])


@pytest.fixture(scope="module", params=KERNEL_MODULES, ids=lambda m: m.BACKEND)
def kernels(request):
    return request.param


def random_density(rng, dim=2, rank=None):
    rank = dim if rank is None else rank
    G = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, dim):
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return A + A.conj().T


seeds = st.integers(min_value=0, max_value=2**32 - 1)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.REPORT:
            terminalreporter.write_line(line)
