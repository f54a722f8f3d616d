"""Lindblad models for a driven decaying qubit and a qubit with an ancilla.

All times are in units of ``1/gamma``; Hamiltonians are stored as ``H/hbar``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import qmat
from ._backend import rk4_propagate

STEPS_PER_UNIT = 2000
TRACE_INSTABILITY_TOL = 1e-6

# How the decay constant enters the dissipator
#   gamma * scale / 2 * (2 L rho L+ - L+L rho - rho L+L)
# "population": gamma is the excited-state decay rate, coherences decay at gamma/2.
# "coherence": gamma is the coherence decay rate, populations decay at 2 gamma.
DAMPING_CONVENTIONS = {"population": 1.0, "coherence": 2.0}


class IntegrationError(RuntimeError):
    """Raised when the integrated state leaves the set of density matrices."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


def _damping_scale(damping):
    try:
        return DAMPING_CONVENTIONS[damping]
    except KeyError:
        raise ValueError(
            f"unknown damping convention {damping!r}; "
            f"expected one of {sorted(DAMPING_CONVENTIONS)}"
        ) from None


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus a list of ``(collapse_operator, rate)`` damping terms.

    Each term contributes ``rate * (C rho C+ - {C+C, rho}/2)``.
    """

    hamiltonian: np.ndarray
    damping_terms: tuple = ()

    def __post_init__(self):
        H = np.array(self.hamiltonian, dtype=complex)
        if H.shape not in ((2, 2), (4, 4)):
            raise ValueError(f"hamiltonian must be 2x2 or 4x4, got {H.shape}")
        if not qmat.is_hermitian(H, 1e-12):
            raise ValueError("hamiltonian is not Hermitian")
        terms = []
        for op, rate in self.damping_terms:
            op = np.array(op, dtype=complex)
            if op.shape != H.shape:
                raise ValueError("collapse operator dimension differs from hamiltonian")
            rate = float(rate)
            if not rate >= 0.0:
                raise ValueError(f"damping rate must be nonnegative, got {rate}")
            op.flags.writeable = False
            terms.append((op, rate))
        H.flags.writeable = False
        object.__setattr__(self, "hamiltonian", H)
        object.__setattr__(self, "damping_terms", tuple(terms))

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    @property
    def max_rate(self):
        """Largest coupling or damping rate, used to pick the RK4 step."""
        rates = [float(np.max(np.abs(self.hamiltonian)))]
        rates += [r for _, r in self.damping_terms]
        return max(rates)

    def rhs(self, rho):
        """Right-hand side of the master equation for a single matrix."""
        H = self.hamiltonian
        out = -1j * (H @ rho - rho @ H)
        for C, rate in self.damping_terms:
            Cd = qmat.dagger(C)
            CdC = Cd @ C
            out = out + rate * (C @ rho @ Cd - 0.5 * (CdC @ rho + rho @ CdC))
        return out

    def liouvillian(self):
        """Superoperator acting on row-major vectorised density matrices."""
        d = self.dim
        eye = np.eye(d)
        H = self.hamiltonian
        L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
        for C, rate in self.damping_terms:
            CdC = qmat.dagger(C) @ C
            L = L + rate * (
                np.kron(C, C.conj()) - 0.5 * np.kron(CdC, eye) - 0.5 * np.kron(eye, CdC.T)
            )
        return L


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")

    @property
    def h(self):
        return (self.t_end - self.t_start) / self.steps

    @property
    def times(self):
        return self.t_start + self.h * np.arange(self.steps + 1)


def rabi_model(g, gamma, damping="population"):
    """Qubit driven by ``H = g (s+ + s-)`` and decaying through ``s-``."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    scale = _damping_scale(damping)
    H = g * (qmat.SIGMA_PLUS + qmat.SIGMA_MINUS)
    return LindbladModel(H, ((qmat.SIGMA_MINUS, scale * gamma),))


def ancilla_model(J, gamma1, damping="population"):
    """System qubit (first factor) exchanging excitations with an ancilla.

    ``H = J (s+ x s- + s- x s+)``; only the system qubit decays.
    """
    if gamma1 < 0:
        raise ValueError("gamma1 must be nonnegative")
    scale = _damping_scale(damping)
    sp, sm = qmat.SIGMA_PLUS, qmat.SIGMA_MINUS
    H = J * (np.kron(sp, sm) + np.kron(sm, sp))
    return LindbladModel(H, ((np.kron(sm, qmat.IDENTITY), scale * gamma1),))


ANCILLA_STATES = {
    "mixed": qmat.maximally_mixed(2),
    "ground": qmat.projector("z", -1),
    "excited": qmat.projector("z", 1),
}


def ancilla_initial_state(system=None, ancilla="mixed"):
    """Joint initial state ``system x ancilla``; the system defaults to I/2.

    With a ground-state ancilla the reduced system state is ``|g>`` at every
    full swap regardless of Alice's outcome, so S3 never drops below 1.
    """
    if system is None:
        system = qmat.maximally_mixed(2)
    try:
        anc = ANCILLA_STATES[ancilla]
    except KeyError:
        raise ValueError(f"unknown ancilla state {ancilla!r}") from None
    return np.kron(system, anc)


def default_substeps(model, grid):
    """RK4 steps per grid interval giving ``STEPS_PER_UNIT`` per ``rate * t``."""
    span = model.max_rate * (grid.t_end - grid.t_start)
    total = math.ceil(STEPS_PER_UNIT * span)
    return max(1, math.ceil(total / grid.steps))


def evolve_batch(model, rho0s, grid, substeps=None, check=True):
    """Evolve several initial states on a shared time grid.

    Returns an array of shape ``(steps + 1, len(rho0s), d, d)``. Every
    stored state is re-symmetrised and, with ``check``, validated against
    the density-matrix invariants.
    """
    d = model.dim
    rho0s = np.asarray(rho0s, dtype=complex)
    if rho0s.ndim != 3 or rho0s.shape[1:] != (d, d):
        raise ValueError(f"initial states must have shape (k, {d}, {d})")
    if check:
        for r in rho0s:
            qmat.check_density(r)
    if substeps is None:
        substeps = default_substeps(model, grid)
    h = grid.h / substeps
    v0 = rho0s.reshape(len(rho0s), d * d).T
    trace_idx = np.arange(d) * (d + 1)
    out, fail = rk4_propagate(
        model.liouvillian(), v0, h, grid.steps, substeps, trace_idx, TRACE_INSTABILITY_TOL
    )
    if fail >= 0:
        t = grid.t_start + fail * h
        raise IntegrationError(f"RK4 step unstable: trace drift above 1e-6 at t={t:.6g}", t)
    states = out.transpose(0, 2, 1).reshape(grid.steps + 1, len(rho0s), d, d)
    states = 0.5 * (states + np.conj(states.swapaxes(-1, -2)))
    if check:
        _check_trajectory(states, grid)
    return states


def _check_trajectory(states, grid):
    n_t, k, d, _ = states.shape
    flat = states.reshape(n_t * k, d, d)
    tr_err = np.abs(np.trace(flat, axis1=1, axis2=2) - 1.0)
    bad = np.flatnonzero(tr_err > qmat.DENSITY_TOL)
    if bad.size:
        t = grid.times[bad[0] // k]
        raise IntegrationError(f"trace error {tr_err[bad[0]]:.3g} at t={t:.6g}", t)
    lmin = qmat.hermitian_eigenvalues_batch(flat)[:, 0]
    bad = np.flatnonzero(lmin < -qmat.DENSITY_TOL)
    if bad.size:
        t = grid.times[bad[0] // k]
        raise IntegrationError(f"negative eigenvalue {lmin[bad[0]]:.3g} at t={t:.6g}", t)


def evolve(model, rho0, grid, substeps=None, check=True):
    """States at every point of ``grid`` (endpoints included), shape ``(steps+1, d, d)``."""
    return evolve_batch(model, np.asarray(rho0)[None], grid, substeps, check)[:, 0]
