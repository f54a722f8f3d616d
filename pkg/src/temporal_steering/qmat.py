"""Small dense operators for one and two qubits.

Basis convention used throughout the package: ``|+z> = (1, 0)`` is the
excited state ``|e>`` and ``|-z> = (0, 1)`` is the ground state ``|g>``,
so ``SIGMA_PLUS |g> = |e>`` and ``SIGMA_MINUS`` lowers populations.

Matrices are plain ``complex128`` numpy arrays of shape ``(2, 2)`` or
``(4, 4)``; nothing larger is supported.
"""

import numpy as np

from ._backend import jacobi_eigvalsh

MAX_DIM = 4
DENSITY_TOL = 1e-9

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

for _m in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, SIGMA_PLUS, SIGMA_MINUS):
    _m.flags.writeable = False

_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
_S = 1 / np.sqrt(2)
_KETS = {
    ("z", 1): np.array([1, 0], dtype=complex),
    ("z", -1): np.array([0, 1], dtype=complex),
    ("x", 1): np.array([_S, _S], dtype=complex),
    ("x", -1): np.array([_S, -_S], dtype=complex),
    ("y", 1): np.array([_S, 1j * _S], dtype=complex),
    ("y", -1): np.array([_S, -1j * _S], dtype=complex),
}


def pauli(axis):
    """Return the Pauli matrix for ``axis`` in ``{"x", "y", "z"}``."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def ket(axis, outcome):
    """Eigenvector of ``pauli(axis)`` with eigenvalue ``outcome`` (+1 or -1)."""
    try:
        return _KETS[axis, int(outcome)].copy()
    except KeyError:
        raise ValueError(f"no eigenvector for ({axis!r}, {outcome!r})") from None


def projector(axis, outcome):
    """Rank-one projector onto ``ket(axis, outcome)``, built as ``(I + s sigma) / 2``.

    The Pauli form keeps entries like 1/2 exact, unlike ``|v><v|``.
    """
    ket(axis, outcome)  # validates the arguments
    return 0.5 * (IDENTITY + int(outcome) * pauli(axis))


def dagger(M):
    return np.conj(np.transpose(M))


def _as_square(M, name="matrix"):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] not in (2, 4):
        raise ValueError(f"{name} must be 2x2 or 4x4, got shape {M.shape}")
    return M


def tensor(A, B):
    """Kronecker product of two single-qubit operators (row of ``A`` outer)."""
    A = _as_square(A, "A")
    B = _as_square(B, "B")
    if A.shape[0] * B.shape[0] > MAX_DIM:
        raise ValueError("tensor product would exceed the 4x4 ceiling")
    return np.kron(A, B)


def partial_trace(rho, keep):
    """Reduced state of qubit ``keep`` (1 or 2) of a two-qubit operator."""
    rho = _as_square(rho, "rho")
    if rho.shape[0] != 4:
        raise ValueError("partial_trace needs a 4x4 two-qubit operator")
    r = rho.reshape(2, 2, 2, 2)
    if keep == 1:
        return np.einsum("ikjk->ij", r)
    if keep == 2:
        return np.einsum("kikj->ij", r)
    raise ValueError(f"keep must be 1 or 2, got {keep!r}")


def hermiticity_defect(M):
    M = np.asarray(M)
    return float(np.max(np.abs(M - dagger(M))))


def is_hermitian(M, tol=1e-12):
    return hermiticity_defect(M) <= tol


def hermitian_eigenvalues(M, tol=DENSITY_TOL):
    """Ascending real eigenvalues of a Hermitian 2x2 or 4x4 matrix.

    Computed with cyclic Jacobi rotations (converged when the off-diagonal
    norm falls below 1e-13); no LAPACK call is involved.
    """
    M = _as_square(M)
    if hermiticity_defect(M) > tol:
        raise ValueError("hermitian_eigenvalues: input is not Hermitian")
    return jacobi_eigvalsh(M[None])[0]


def hermitian_eigenvalues_batch(mats, tol=DENSITY_TOL):
    """Like :func:`hermitian_eigenvalues` for a stack of shape ``(k, d, d)``."""
    mats = np.asarray(mats, dtype=complex)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or mats.shape[1] not in (2, 4):
        raise ValueError(f"expected a stack of 2x2 or 4x4 matrices, got {mats.shape}")
    if len(mats) and np.max(np.abs(mats - np.conj(mats.transpose(0, 2, 1)))) > tol:
        raise ValueError("hermitian_eigenvalues_batch: input is not Hermitian")
    return jacobi_eigvalsh(mats)


def density_defects(rho):
    """``(trace error, hermiticity defect, minimum eigenvalue)`` of ``rho``."""
    rho = _as_square(rho, "rho")
    herm = hermiticity_defect(rho)
    sym = 0.5 * (rho + dagger(rho))
    return abs(np.trace(rho) - 1.0), herm, float(jacobi_eigvalsh(sym[None])[0, 0])


def check_density(rho, tol=DENSITY_TOL):
    """Validate a density matrix and return it as a complex array.

    Raises ``ValueError`` if the trace, Hermiticity or positivity
    constraints are violated beyond ``tol``.
    """
    rho = _as_square(rho, "rho")
    tr_err, herm, lmin = density_defects(rho)
    if tr_err > tol:
        raise ValueError(f"trace deviates from 1 by {tr_err:.3g}")
    if herm > tol:
        raise ValueError(f"not Hermitian (defect {herm:.3g})")
    if lmin < -tol:
        raise ValueError(f"not positive (minimum eigenvalue {lmin:.3g})")
    return rho


def is_pure(rho, tol=DENSITY_TOL):
    w = hermitian_eigenvalues(rho, tol)
    return abs(w[-1] - 1.0) <= tol and np.all(np.abs(w[:-1]) <= tol)


def pure_fidelity(pure, rho):
    """Overlap ``<psi|rho|psi>`` for a pure reference state ``|psi><psi|``.

    For a rank-one reference this equals ``Tr(sqrt(P) rho sqrt(P))`` since
    ``sqrt(P) = P``.
    """
    pure = check_density(pure)
    rho = check_density(rho)
    if pure.shape != rho.shape:
        raise ValueError("pure_fidelity: dimension mismatch")
    if not is_pure(pure):
        raise ValueError("pure_fidelity: reference state is not pure")
    return float(min(1.0, max(0.0, np.trace(pure @ rho).real)))


def expectation(op, rho):
    """Real part of ``Tr(op rho)``."""
    return float(np.trace(np.asarray(op) @ np.asarray(rho)).real)


def maximally_mixed(dim=2):
    if dim not in (2, 4):
        raise ValueError("dim must be 2 or 4")
    return np.eye(dim, dtype=complex) / dim


def pure_state(vec):
    """Density matrix ``|v><v|`` of a normalised copy of ``vec``."""
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())
