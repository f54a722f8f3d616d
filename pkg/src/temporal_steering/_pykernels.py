"""Pure numpy implementations of the numerical hot loops.

These mirror the compiled routines in ``_kernels.pyx`` one for one and are
used whenever the extension module is not built.
"""

import numpy as np

BACKEND = "python"

_JACOBI_TOL = 1e-13
_JACOBI_MAX_SWEEPS = 60


def rk4_propagate(L, v0, h, n_out, substeps, trace_idx, trace_tol):
    """Integrate ``dv/dt = L v`` with classical fixed-step RK4.

    ``v0`` holds one vectorised density matrix per column. States are stored
    after every ``substeps`` steps, giving ``n_out + 1`` snapshots.

    Returns ``(out, fail_step)`` where ``fail_step`` is the 1-based index of
    the first RK4 step whose trace drifted by more than ``trace_tol`` from
    its starting value, or -1.
    """
    L = np.ascontiguousarray(L, dtype=np.complex128)
    v = np.array(v0, dtype=np.complex128, copy=True)
    trace_idx = np.asarray(trace_idx, dtype=np.intp)
    out = np.empty((n_out + 1,) + v.shape, dtype=np.complex128)
    out[0] = v
    tr0 = v[trace_idx].sum(axis=0)
    half = 0.5 * h
    sixth = h / 6.0
    step = 0
    for k in range(n_out):
        for _ in range(substeps):
            k1 = L @ v
            k2 = L @ (v + half * k1)
            k3 = L @ (v + half * k2)
            k4 = L @ (v + h * k3)
            v = v + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            step += 1
            if np.max(np.abs(v[trace_idx].sum(axis=0) - tr0)) > trace_tol:
                out[k + 1:] = np.nan
                return out, step
        out[k + 1] = v
    return out, -1


def jacobi_eigvalsh(mats):
    """Eigenvalues of a stack of Hermitian matrices by cyclic Jacobi sweeps.

    Each ``n x n`` Hermitian ``A`` is embedded in the real symmetric
    ``[[Re A, -Im A], [Im A, Re A]]`` whose spectrum is that of ``A`` with
    every eigenvalue doubled; sorted neighbours are averaged pairwise.
    All matrices in the stack are rotated together, one pivot at a time.
    """
    mats = np.asarray(mats, dtype=np.complex128)
    batch, n, _ = mats.shape
    m = 2 * n
    A = np.empty((batch, m, m))
    A[:, :n, :n] = mats.real
    A[:, n:, n:] = mats.real
    A[:, :n, n:] = -mats.imag
    A[:, n:, :n] = mats.imag
    A = 0.5 * (A + A.transpose(0, 2, 1))

    scale = np.maximum(1.0, np.sqrt(np.sum(A * A, axis=(1, 2))))
    offmask = ~np.eye(m, dtype=bool)
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(A[:, offmask] ** 2, axis=1))
        if np.all(off < _JACOBI_TOL * scale):
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[:, p, q]
                active = apq != 0.0
                if not active.any():
                    continue
                # t = sgn(tau) / (|tau| + sqrt(1 + tau^2)) with tau = d / (2 apq),
                # rewritten so that a tiny apq cannot overflow.
                d = A[:, q, q] - A[:, p, p]
                sgn = np.where((d == 0.0) | ((d > 0.0) == (apq > 0.0)), 1.0, -1.0)
                denom = np.abs(d) + np.hypot(d, 2.0 * apq)
                t = np.where(active, sgn * 2.0 * np.abs(apq) / np.where(active, denom, 1.0), 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                c_ = c[:, None]
                s_ = s[:, None]
                rp = A[:, p, :].copy()
                rq = A[:, q, :].copy()
                A[:, p, :] = c_ * rp - s_ * rq
                A[:, q, :] = s_ * rp + c_ * rq
                cp = A[:, :, p].copy()
                cq = A[:, :, q].copy()
                A[:, :, p] = c_ * cp - s_ * cq
                A[:, :, q] = s_ * cp + c_ * cq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    w = np.sort(np.diagonal(A, axis1=1, axis2=2), axis=1)
    return 0.5 * (w[:, ::2] + w[:, 1::2])
