import numpy as np
import pytest
from hypothesis import given, settings

from temporal_steering import _backend, _pykernels, dynamics, qmat, steering

from .conftest import KERNEL_MODULES, random_hermitian, seeds

scipy_linalg = pytest.importorskip("scipy.linalg")


def test_backend_is_one_of_the_kernel_modules():
    assert _backend.BACKEND in {m.BACKEND for m in KERNEL_MODULES}


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_jacobi_matches_lapack(kernels, seed):
    rng = np.random.default_rng(seed)
    mats = np.stack([random_hermitian(rng, 4) for _ in range(5)])
    expected = np.linalg.eigvalsh(mats)
    assert np.allclose(kernels.jacobi_eigvalsh(mats), expected, atol=1e-10, rtol=0)


def test_jacobi_degenerate_and_diagonal(kernels):
    mats = np.stack([np.eye(4, dtype=complex), np.diag([3.0, -1.0, 2.0, 0.0]).astype(complex)])
    w = kernels.jacobi_eigvalsh(mats)
    assert np.allclose(w[0], 1.0, atol=1e-14)
    assert np.allclose(w[1], [-1.0, 0.0, 2.0, 3.0], atol=1e-14)


def test_rk4_matches_matrix_exponential(kernels):
    model = dynamics.rabi_model(4.0, 1.0)
    L = model.liouvillian()
    rho0 = qmat.projector("x", 1)
    v0 = rho0.reshape(4, 1)
    h, n_out, sub = 0.001, 50, 20
    out, fail = kernels.rk4_propagate(L, v0, h, n_out, sub, [0, 3], 1e-6)
    assert fail == -1
    for k in (0, 10, 50):
        exact = scipy_linalg.expm(L * k * sub * h) @ v0
        assert np.allclose(out[k], exact, atol=1e-11)


def test_rk4_reports_unstable_step(kernels):
    # a non-trace-preserving generator drifts the trace immediately
    L = -np.eye(4, dtype=complex)
    out, fail = kernels.rk4_propagate(L, np.eye(2).reshape(4, 1), 0.1, 5, 2, [0, 3], 1e-6)
    assert fail == 1
    assert np.isnan(out[1:]).all()


@pytest.mark.skipif(len(KERNEL_MODULES) < 2, reason="compiled extension not built")
def test_backends_agree_on_ancilla_dynamics():
    compiled = KERNEL_MODULES[1]
    model = dynamics.ancilla_model(9.0, 1.0)
    L = model.liouvillian()
    rho0 = np.kron(qmat.projector("y", -1), np.eye(2) / 2).reshape(16, 1)
    a, fa = _pykernels.rk4_propagate(L, rho0, 1e-4, 20, 50, [0, 5, 10, 15], 1e-6)
    b, fb = compiled.rk4_propagate(L, rho0, 1e-4, 20, 50, [0, 5, 10, 15], 1e-6)
    assert fa == fb == -1
    assert np.max(np.abs(a - b)) < 1e-13


def test_pure_python_override():
    import os
    import subprocess
    import sys

    code = ("import numpy as np; import temporal_steering as t; print(t.BACKEND); "
            "m = t.rabi_model(9, 1); g = t.TimeGrid(0, 1, 10); "
            "print(t.steering_curve(m, np.eye(2) / 2, g).values[-1])")
    env = dict(os.environ, TEMPORAL_STEERING_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.splitlines()
    assert out[0] == "python"
    direct = steering.steering_curve(dynamics.rabi_model(9, 1), np.eye(2) / 2,
                                     dynamics.TimeGrid(0, 1, 10)).values[-1]
    assert abs(float(out[1]) - direct) < 1e-12
