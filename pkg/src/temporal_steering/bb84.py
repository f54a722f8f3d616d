"""Intercept-resend eavesdropping on BB84 seen as a temporal-steering channel.

Eve measures the travelling qubit in ``z`` with probability ``q``, in ``x``
with probability ``p`` and leaves it alone otherwise. Error rate and
steering parameter are computed by brute force from Alice's four BB84
states; the closed forms ``(p + q) / 4`` and ``(1 - p)^2 + (1 - q)^2`` are
only used as checks.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import qmat
from .steering import ConditionalTable, MeasurementSetting, OUTCOMES, project, steering_parameter

BB84_BASES = ("z", "x")
SIMPLEX_SLACK = 1e-12
BISECT_BRACKET = (1e-9, 0.5 - 1e-9)


@dataclass(frozen=True)
class EveParams:
    p: float
    q: float

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if p < 0 or q < 0 or p + q > 1 + SIMPLEX_SLACK:
            raise ValueError(f"need p, q >= 0 and p + q <= 1, got p={p}, q={q}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple

    def __post_init__(self):
        ops = tuple(np.array(K, dtype=complex) for K in self.operators)
        if not ops or any(K.shape != (2, 2) for K in ops):
            raise ValueError("Kraus operators must be a nonempty list of 2x2 matrices")
        total = sum(qmat.dagger(K) @ K for K in ops)
        if np.max(np.abs(total - np.eye(2))) > 1e-12:
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "operators", ops)

    def completeness_defect(self):
        total = sum(qmat.dagger(K) @ K for K in self.operators)
        return float(np.max(np.abs(total - np.eye(2))))

    def apply(self, rho):
        rho = np.asarray(rho, dtype=complex)
        return sum(K @ rho @ qmat.dagger(K) for K in self.operators)

    __call__ = apply


def dephase(rho, basis):
    """``sum_a P_a rho P_a``: a non-selective measurement in ``basis``."""
    return sum(qmat.projector(basis, a) @ rho @ qmat.projector(basis, a) for a in OUTCOMES)


def eve_map(params, rho):
    """Eve's map written as the mixture of identity and two dephasings."""
    p, q = params.p, params.q
    return (1 - p - q) * rho + q * dephase(rho, "z") + p * dephase(rho, "x")


def eve_channel(params):
    idle = math.sqrt(max(0.0, 1.0 - params.p - params.q))
    sq, sp = math.sqrt(params.q), math.sqrt(params.p)
    ops = [idle * qmat.IDENTITY]
    ops += [sq * qmat.projector("z", a) for a in OUTCOMES]
    ops += [sp * qmat.projector("x", a) for a in OUTCOMES]
    return KrausChannel(tuple(ops))


def alice_states(rho0=None):
    """Alice's four prepared states ``(basis, a, P(a), rho_A)`` from ``rho0``."""
    if rho0 is None:
        rho0 = qmat.maximally_mixed(2)
    out = []
    for basis in BB84_BASES:
        for a in OUTCOMES:
            prob, post = project(rho0, MeasurementSetting(basis, a))
            if post is not None:
                out.append((basis, a, prob, post))
    return out


def fidelities(params):
    """``{(basis, a): F(rho_A, E(rho_A))}`` for each BB84 state."""
    channel = eve_channel(params)
    return {
        (basis, a): qmat.pure_fidelity(rho_a, channel(rho_a))
        for basis, a, _, rho_a in alice_states()
    }


def bb84_error_rate(params):
    """Average bit error ``1/2 sum_mu P(a) [1 - F(rho_A, E(rho_A))]``."""
    # 1 - F is evaluated as the weight on the orthogonal complement, which
    # avoids cancellation when F is close to 1.
    channel = eve_channel(params)
    total = 0.0
    for _, _, prob, rho_a in alice_states():
        total += prob * qmat.expectation(qmat.IDENTITY - rho_a, channel(rho_a))
    return 0.5 * total


def bb84_table(params):
    """Two-basis table: Alice's state sent through Eve, Bob measures the same basis."""
    channel = eve_channel(params)
    joint = np.zeros((len(BB84_BASES), 2, 2))
    for basis, a, prob, rho_a in alice_states():
        rho_b = channel(rho_a)
        i = BB84_BASES.index(basis)
        ai = OUTCOMES.index(a)
        for bi, b in enumerate(OUTCOMES):
            joint[i, ai, bi] = prob * qmat.expectation(qmat.projector(basis, b), rho_b)
    return ConditionalTable(np.clip(joint, 0.0, None), BB84_BASES)


def bb84_steering(params):
    return steering_parameter(bb84_table(params))


def binary_entropy(x):
    """``h(x) = -x log2 x - (1 - x) log2 (1 - x)`` with ``0 log 0 = 0``."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def bisect(f, lo, hi, xtol=1e-14, max_iter=200):
    """Root of ``f`` on ``[lo, hi]`` where ``f(lo)`` and ``f(hi)`` differ in sign."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError("bisect: root not bracketed")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0 or hi - lo < xtol:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def independent_attack_condition(r):
    """``2 (1 - 2R)^2 - 1``; zero at the individual-attack threshold."""
    return 2.0 * (1.0 - 2.0 * r) ** 2 - 1.0


def threshold_independent():
    """Error rate where ``2 (1 - 2R)^2 = 1``, i.e. ``(1 - 1/sqrt 2) / 2``."""
    return bisect(independent_attack_condition, *BISECT_BRACKET)


def equal_attack_boundary():
    """``p`` with ``S2(p, p) = 1`` from the brute-force steering parameter."""
    return bisect(lambda p: bb84_steering(EveParams(p, p)).s_value - 1.0, 1e-9, 0.5)


def threshold_entropic():
    """Error rate where ``2 h(R) = 1`` (about 11%)."""
    return bisect(lambda r: 2.0 * binary_entropy(r) - 1.0, *BISECT_BRACKET)


class SweepRow(NamedTuple):
    p: float
    q: float
    s2: float
    r_err: float
    violates: bool


def sweep(p_grid, q_grid):
    """Rows over the ``(p, q)`` grid in row-major order, skipping ``p + q > 1``."""
    rows = []
    for p in p_grid:
        for q in q_grid:
            if p < 0 or q < 0 or p + q > 1 + SIMPLEX_SLACK:
                continue
            params = EveParams(p, q)
            s2 = bb84_steering(params).s_value
            rows.append(SweepRow(float(p), float(q), s2, bb84_error_rate(params), s2 > 1.0))
    return rows
