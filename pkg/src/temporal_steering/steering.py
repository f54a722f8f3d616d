"""Conditional measurement tables and temporal steering parameters.

A table stores, for each measured basis ``i``, the joint distribution
``P(A_i = a, B_i = b)`` of Alice's earlier and Bob's later outcome. Index 0
along an outcome axis means ``+1`` and index 1 means ``-1``.

The steering parameter is

    S_N = sum_i sum_a P(a) <B_i>_a^2,   <B_i>_a = sum_b b P(b | a),

bounded by 1 for any hidden-state (multi-channel) model and by ``N``
quantum mechanically.
"""

from dataclasses import dataclass

import numpy as np

from . import qmat
from .dynamics import TimeGrid, evolve_batch

BASES = ("z", "x", "y")
OUTCOMES = (1, -1)
ZERO_BRANCH = 1e-14
ZERO_WEIGHT = 1e-12

_PROJ = np.array([[qmat.projector(b, o) for o in OUTCOMES] for b in BASES])
_SIGN = np.array(OUTCOMES, dtype=float)


def bases_for(n_bases):
    if n_bases not in (1, 2, 3):
        raise ValueError(f"n_bases must be 1, 2 or 3, got {n_bases!r}")
    return BASES[:n_bases]


def _basis_index(basis):
    try:
        return BASES.index(basis)
    except ValueError:
        raise ValueError(f"unknown basis {basis!r}") from None


def _outcome_index(outcome):
    if outcome == 1:
        return 0
    if outcome == -1:
        return 1
    raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")


@dataclass(frozen=True)
class MeasurementSetting:
    basis: str
    outcome: int

    def __post_init__(self):
        _basis_index(self.basis)
        _outcome_index(self.outcome)

    @property
    def projector(self):
        return _PROJ[_basis_index(self.basis), _outcome_index(self.outcome)].copy()


@dataclass(frozen=True)
class ConditionalTable:
    """Per-basis 2x2 joint distributions, ``joint[i, a_idx, b_idx]``."""

    joint: np.ndarray
    bases: tuple = BASES

    def __post_init__(self):
        joint = np.array(self.joint, dtype=float)
        bases = tuple(self.bases)
        if joint.ndim != 3 or joint.shape[1:] != (2, 2):
            raise ValueError(f"joint must have shape (n, 2, 2), got {joint.shape}")
        if len(bases) != joint.shape[0] or len(set(bases)) != len(bases):
            raise ValueError("bases must be distinct and match the table length")
        for b in bases:
            _basis_index(b)
        if np.any(joint < -1e-12):
            raise ValueError("negative joint probability")
        sums = joint.sum(axis=(1, 2))
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError(f"basis blocks must sum to 1, got {sums}")
        joint.flags.writeable = False
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "bases", bases)

    @property
    def n_bases(self):
        return len(self.bases)

    def block(self, basis):
        return self.joint[self.bases.index(basis)]

    def marginals(self):
        """``P(A_i = a)`` with shape ``(n, 2)``."""
        return self.joint.sum(axis=2)

    def conditional_expectations(self):
        """``<B_i>_a`` with shape ``(n, 2)``; zero-weight branches give 0."""
        pa = self.marginals()
        num = self.joint @ _SIGN
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(pa >= ZERO_WEIGHT, num / pa, 0.0)

    def select(self, bases):
        idx = [self.bases.index(b) for b in bases]
        return ConditionalTable(self.joint[idx], tuple(bases))


@dataclass(frozen=True)
class SteeringResult:
    s_value: float
    contributions: tuple
    bases: tuple

    @property
    def n_bases(self):
        return len(self.bases)

    def contribution(self, basis):
        return self.contributions[self.bases.index(basis)]

    @property
    def violates(self):
        return self.s_value > 1.0


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d and equally long")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class HiddenStateModel:
    """Finite mixture of channels ``(q, P(A_i = a), rho)``.

    ``responses[k, i, a_idx]`` is channel ``k``'s probability of Alice
    reporting outcome ``a`` when asked for basis ``BASES[i]``; ``states[k]``
    is the qubit Bob receives from channel ``k``.
    """

    weights: np.ndarray
    responses: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        q = np.array(self.weights, dtype=float)
        resp = np.array(self.responses, dtype=float)
        states = np.array(self.states, dtype=complex)
        k = q.shape[0]
        if q.ndim != 1 or k == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if resp.shape != (k, 3, 2):
            raise ValueError(f"responses must have shape ({k}, 3, 2)")
        if states.shape != (k, 2, 2):
            raise ValueError(f"states must have shape ({k}, 2, 2)")
        if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
            raise ValueError("channel weights must be a probability vector")
        if np.any(resp < 0) or np.any(np.abs(resp.sum(axis=2) - 1.0) > 1e-12):
            raise ValueError("each response row must be a probability vector")
        tr = np.trace(states, axis1=1, axis2=2)
        if np.any(np.abs(tr - 1.0) > qmat.DENSITY_TOL):
            raise ValueError("channel state with trace != 1")
        if qmat.hermitian_eigenvalues_batch(states).min() < -qmat.DENSITY_TOL:
            raise ValueError("channel state is not positive")
        object.__setattr__(self, "weights", q)
        object.__setattr__(self, "responses", resp)
        object.__setattr__(self, "states", states)


def random_hidden_model(rng, n_channels=None):
    """Draw a hidden-state model with 1-8 channels.

    Responses are deterministic or uniform-random per row, and Bob's states
    are pure or mixed, so that extreme points are exercised too.
    """
    k = int(rng.integers(1, 9)) if n_channels is None else n_channels
    q = rng.dirichlet(np.ones(k))
    u = rng.random((k, 3))
    deterministic = rng.random((k, 3)) < 0.3
    u = np.where(deterministic, np.round(u), u)
    resp = np.stack([u, 1.0 - u], axis=2)
    r = rng.normal(size=(k, 3))
    r /= np.linalg.norm(r, axis=1, keepdims=True)
    length = np.where(rng.random(k) < 0.5, 1.0, rng.random(k) ** (1 / 3))
    r *= length[:, None]
    states = 0.5 * (
        np.eye(2)
        + r[:, 0, None, None] * qmat.SIGMA_X
        + r[:, 1, None, None] * qmat.SIGMA_Y
        + r[:, 2, None, None] * qmat.SIGMA_Z
    )
    return HiddenStateModel(q, resp, states)


def project(rho, setting):
    """Alice's projective measurement on a qubit.

    Returns ``(probability, post_state)``; the post-measurement state is the
    projector itself, or ``None`` when the branch has probability below 1e-14.
    """
    rho = qmat.check_density(rho)
    if rho.shape != (2, 2):
        raise ValueError("project acts on a single qubit")
    P = setting.projector
    p = float(np.trace(P @ rho).real)
    if p < ZERO_BRANCH:
        return max(p, 0.0), None
    return p, P


def _embed(P, system_qubit):
    return np.kron(P, qmat.IDENTITY) if system_qubit == 1 else np.kron(qmat.IDENTITY, P)


def _reduce(states, system_qubit):
    """Reduce ``(..., d, d)`` states to the system qubit."""
    if states.shape[-1] == 2:
        return states
    r = states.reshape(states.shape[:-2] + (2, 2, 2, 2))
    if system_qubit == 1:
        return np.einsum("...ikjk->...ij", r)
    return np.einsum("...kikj->...ij", r)


def measured_branches(rho0, bases, system_qubit=1):
    """Alice's outcome weights and post-measurement states at ``t_A = 0``.

    Returns ``(weights, states)`` of shapes ``(n, 2)`` and ``(2n, d, d)``.
    For two-qubit states the measurement is ``P x I`` on the system qubit
    followed by the Lueders update.
    """
    rho0 = qmat.check_density(rho0)
    d = rho0.shape[0]
    if d == 4 and system_qubit not in (1, 2):
        raise ValueError("system_qubit must be 1 or 2")
    weights = np.zeros((len(bases), 2))
    states = []
    for i, b in enumerate(bases):
        for j, o in enumerate(OUTCOMES):
            setting = MeasurementSetting(b, o)
            if d == 2:
                p, post = project(rho0, setting)
                if post is None:
                    post = setting.projector
            else:
                E = _embed(setting.projector, system_qubit)
                branch = E @ rho0 @ E
                p = float(np.trace(branch).real)
                if p < ZERO_BRANCH:
                    p = max(p, 0.0)
                    other = qmat.partial_trace(rho0, 2 if system_qubit == 1 else 1)
                    pair = (setting.projector, other) if system_qubit == 1 else (other, setting.projector)
                    post = np.kron(*pair)
                else:
                    post = branch / p
            weights[i, j] = p
            states.append(post)
    return weights, np.array(states)


def _tables_from_states(weights, bob_states, bases):
    """Assemble tables from Alice weights and Bob's reduced states.

    ``bob_states`` has shape ``(T, 2n, 2, 2)``; returns joint ``(T, n, 2, 2)``.
    """
    n = len(bases)
    T = bob_states.shape[0]
    idx = [_basis_index(b) for b in bases]
    rho = bob_states.reshape(T, n, 2, 2, 2)
    cond = np.einsum("ibkl,tialk->tiab", _PROJ[idx], rho).real
    cond = np.clip(cond, 0.0, 1.0)
    return weights[None, :, :, None] * cond


def quantum_tables(model, rho0, grid, n_bases=3, system_qubit=1, substeps=None):
    """Tables for Alice at ``grid.t_start`` and Bob at every grid time."""
    bases = bases_for(n_bases)
    weights, states = measured_branches(rho0, bases, system_qubit)
    if states.shape[-1] != model.dim:
        raise ValueError("initial state dimension does not match the model")
    traj = evolve_batch(model, states, grid, substeps)
    joint = _tables_from_states(weights, _reduce(traj, system_qubit), bases)
    return [ConditionalTable(j, bases) for j in joint]


def quantum_table(model, rho0, t, n_bases=3, system_qubit=1, substeps=None):
    """Table for Alice at time 0 and Bob at time ``t``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    bases = bases_for(n_bases)
    if t == 0:
        weights, states = measured_branches(rho0, bases, system_qubit)
        joint = _tables_from_states(weights, _reduce(states, system_qubit)[None], bases)
        return ConditionalTable(joint[0], bases)
    return quantum_tables(model, rho0, TimeGrid(0.0, t, 1), n_bases, system_qubit, substeps)[-1]


def hidden_table(model, n_bases=3):
    bases = bases_for(n_bases)
    idx = [_basis_index(b) for b in bases]
    bob = np.einsum("ibkl,nlk->nib", _PROJ[idx], model.states).real
    joint = np.einsum("n,nia,nib->iab", model.weights, model.responses[:, idx], bob)
    return ConditionalTable(np.clip(joint, 0.0, None), bases)


def contributions(joint):
    """Per-basis ``sum_a P(a) <B>_a^2`` for joint arrays of shape ``(..., n, 2, 2)``."""
    joint = np.asarray(joint, dtype=float)
    pa = joint.sum(axis=-1)
    num = joint @ _SIGN
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pa >= ZERO_WEIGHT, num * num / pa, 0.0)
    return terms.sum(axis=-1)


def steering_parameter(table):
    c = contributions(table.joint)
    return SteeringResult(float(c.sum()), tuple(float(x) for x in c), table.bases)


def _entropy_bits(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, -p * np.log2(p), 0.0)
    return terms.sum(axis=-1)


def entropic_steering(table):
    """Sum over bases of the conditional entropy ``H(B_i | A_i)`` in bits."""
    pa = table.marginals()
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(pa[..., None] >= ZERO_WEIGHT, table.joint / pa[..., None], 0.0)
    h = np.where(pa >= ZERO_WEIGHT, _entropy_bits(cond), 0.0)
    return float(np.sum(pa * h))


def steering_results(model, rho0, grid, n_bases=3, system_qubit=1, substeps=None):
    return [
        steering_parameter(t)
        for t in quantum_tables(model, rho0, grid, n_bases, system_qubit, substeps)
    ]


def steering_curve(model, rho0, grid, n_bases=3, system_qubit=1, substeps=None):
    """``S_N`` at every grid time."""
    res = steering_results(model, rho0, grid, n_bases, system_qubit, substeps)
    return TimeSeries(grid.times, [r.s_value for r in res])


def basis_contribution_curve(model, rho0, grid, basis, system_qubit=1, substeps=None):
    """``sum_a P(a) <B_basis>_a^2`` over time for a single basis."""
    _basis_index(basis)
    weights, states = measured_branches(rho0, (basis,), system_qubit)
    traj = evolve_batch(model, states, grid, substeps)
    joint = _tables_from_states(weights, _reduce(traj, system_qubit), (basis,))
    return TimeSeries(grid.times, contributions(joint)[:, 0])


def fit_exponential(series):
    """Least-squares fit of ``log(values) = log(A) - rate * t``.

    Returns ``(rate, amplitude, max_abs_log_residual)``.
    """
    y = np.asarray(series.values)
    if np.any(y <= 0):
        raise ValueError("exponential fit needs strictly positive values")
    logy = np.log(y)
    slope, intercept = np.polyfit(series.times, logy, 1)
    resid = logy - (slope * series.times + intercept)
    return float(-slope), float(np.exp(intercept)), float(np.max(np.abs(resid)))


def werner_state(V):
    """``V |psi-><psi-| + (1 - V) I/4`` on two qubits."""
    if not 0.0 <= V <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    singlet = qmat.pure_state([0, 1, -1, 0])
    return V * singlet + (1.0 - V) * np.eye(4) / 4


def werner_conditioned_state(V, setting):
    """Bob's reduced state after Alice measures ``setting`` on qubit 1."""
    rho = werner_state(V)
    E = _embed(setting.projector, 1)
    branch = E @ rho @ E
    return qmat.partial_trace(branch / np.trace(branch).real, keep=2)


def werner_table(V, n_bases=3):
    """Spatial table for a shared Werner state; Alice holds qubit 1."""
    bases = bases_for(n_bases)
    weights, states = measured_branches(werner_state(V), bases, system_qubit=1)
    bob = _reduce(states, system_qubit=2)
    return ConditionalTable(_tables_from_states(weights, bob[None], bases)[0], bases)


ORDERING_KINDS = ("pre_measured", "entangled")


def _pre_measured_exact(n_bases):
    """Enumerate Alice's pre-measure-then-guess strategy.

    Bob's qubit starts as I/2; Alice measures it in a uniformly random basis
    ``k``, keeps outcome ``r``, and later reports ``r`` if Bob orders ``k``
    and a fair coin otherwise.
    """
    bases = bases_for(n_bases)
    joint = np.zeros((n_bases, 2, 2))
    rho0 = qmat.maximally_mixed(2)
    for k in bases:
        for r in OUTCOMES:
            p_r, post = project(rho0, MeasurementSetting(k, r))
            weight = p_r / n_bases
            for i, ordered in enumerate(bases):
                for ai, a in enumerate(OUTCOMES):
                    p_report = (1.0 if a == r else 0.0) if ordered == k else 0.5
                    for bi, b in enumerate(OUTCOMES):
                        p_b = qmat.expectation(MeasurementSetting(ordered, b).projector, post)
                        joint[i, ai, bi] += weight * p_report * p_b
    return ConditionalTable(joint, bases)


def simulate_ordering(kind, trials, seed, n_bases=3):
    """Monte-Carlo trials of the ordering test.

    Returns an int array of shape ``(trials, 3)``: ordered basis index,
    Alice's reported outcome, Bob's outcome.
    """
    if kind not in ORDERING_KINDS:
        raise ValueError(f"unknown ordering scenario {kind!r}")
    rng = np.random.default_rng(seed)
    signs = np.array(OUTCOMES)
    ordered = rng.integers(n_bases, size=trials)
    if kind == "entangled":
        a = signs[rng.integers(2, size=trials)]
        b = -a
    else:
        k = rng.integers(n_bases, size=trials)
        r = signs[rng.integers(2, size=trials)]
        coin_a = signs[rng.integers(2, size=trials)]
        coin_b = signs[rng.integers(2, size=trials)]
        match = ordered == k
        a = np.where(match, r, coin_a)
        b = np.where(match, r, coin_b)
    return np.stack([ordered, a, b], axis=1)


def counts_to_table(samples, n_bases):
    """Empirical table from ``simulate_ordering``-style samples."""
    counts = np.zeros((n_bases, 2, 2))
    ai = (samples[:, 1] == -1).astype(int)
    bi = (samples[:, 2] == -1).astype(int)
    np.add.at(counts, (samples[:, 0], ai, bi), 1.0)
    totals = counts.sum(axis=(1, 2), keepdims=True)
    if np.any(totals == 0):
        raise ValueError("a basis received no trials")
    return ConditionalTable(counts / totals, bases_for(n_bases))


def ordering_scenario(kind, seed=None, n_bases=3, trials=100_000):
    """Table Bob observes when he dictates Alice's basis after reception.

    ``pre_measured``: Alice measured Bob's qubit earlier and must guess
    unless Bob happens to order her basis. ``entangled``: Alice holds the
    other half of a singlet and measures it on request. With ``seed=None``
    the exact table is returned, otherwise a Monte-Carlo estimate.
    """
    if kind not in ORDERING_KINDS:
        raise ValueError(f"unknown ordering scenario {kind!r}")
    bases_for(n_bases)
    if seed is not None:
        return counts_to_table(simulate_ordering(kind, trials, seed, n_bases), n_bases)
    if kind == "entangled":
        return werner_table(1.0, n_bases)
    return _pre_measured_exact(n_bases)
