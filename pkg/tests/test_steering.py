from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings

from temporal_steering import qmat, steering
from temporal_steering.dynamics import TimeGrid, ancilla_initial_state, ancilla_model, rabi_model
from temporal_steering.steering import (
    ConditionalTable,
    HiddenStateModel,
    MeasurementSetting,
    TimeSeries,
    entropic_steering,
    steering_parameter,
)

from .conftest import random_density, seeds

UNIFORM3 = ConditionalTable(np.full((3, 2, 2), 0.25))


def perfect_table(n, anti=False):
    block = np.array([[0, 0.5], [0.5, 0]]) if anti else np.diag([0.5, 0.5])
    return ConditionalTable(np.repeat(block[None], n, axis=0), steering.bases_for(n))


class TestTableBasics:
    def test_rejects_bad_shapes_and_sums(self):
        with pytest.raises(ValueError):
            ConditionalTable(np.full((3, 2), 0.5))
        with pytest.raises(ValueError):
            ConditionalTable(np.full((3, 2, 2), 0.3))
        with pytest.raises(ValueError):
            ConditionalTable(np.full((2, 2, 2), 0.25), ("z", "z"))
        with pytest.raises(ValueError):
            ConditionalTable(np.full((1, 2, 2), 0.25), ("w",))

    def test_marginals_and_conditionals(self):
        t = ConditionalTable(np.array([[[0.3, 0.1], [0.0, 0.6]]]), ("z",))
        assert np.allclose(t.marginals(), [[0.4, 0.6]])
        assert np.allclose(t.conditional_expectations(), [[0.5, -1.0]])

    def test_zero_weight_branch_contributes_nothing(self):
        t = ConditionalTable(np.array([[[0.7, 0.3], [0.0, 0.0]]]), ("x",))
        assert steering_parameter(t).s_value == pytest.approx(0.16)

    def test_select(self):
        t = perfect_table(3).select(("y", "z"))
        assert t.bases == ("y", "z") and steering_parameter(t).s_value == pytest.approx(2)

    def test_setting_validation(self):
        with pytest.raises(ValueError):
            MeasurementSetting("z", 0)
        with pytest.raises(ValueError):
            MeasurementSetting("w", 1)

    def test_time_series_validation(self):
        with pytest.raises(ValueError):
            TimeSeries([0, 0], [1, 1])
        with pytest.raises(ValueError):
            TimeSeries([0, 1], [1])


class TestSteeringParameter:
    def test_uniform_is_zero(self):
        assert steering_parameter(UNIFORM3).s_value == 0.0

    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("anti", [False, True])
    def test_perfect_correlation_reaches_n(self, n, anti):
        r = steering_parameter(perfect_table(n, anti))
        assert r.s_value == pytest.approx(n, abs=1e-15)
        assert r.violates == (n > 1)

    @given(seeds)
    def test_relabelling_outcomes_leaves_s_unchanged(self, seed):
        rng = np.random.default_rng(seed)
        j = rng.dirichlet(np.ones(4), size=3).reshape(3, 2, 2)
        s = steering_parameter(ConditionalTable(j)).s_value
        for flip in (j[:, ::-1, :], j[:, :, ::-1], j[:, ::-1, ::-1]):
            assert steering_parameter(ConditionalTable(flip)).s_value == pytest.approx(s, abs=1e-14)

    @given(seeds)
    def test_bounded_by_n_for_any_table(self, seed):
        rng = np.random.default_rng(seed)
        j = rng.dirichlet(np.ones(4) * 0.3, size=3).reshape(3, 2, 2)
        r = steering_parameter(ConditionalTable(j))
        assert 0 <= r.s_value <= 3 + 1e-12
        assert all(0 <= c <= 1 + 1e-12 for c in r.contributions)

    def test_contributions_batched(self):
        j = np.stack([perfect_table(3).joint, UNIFORM3.joint])
        assert np.allclose(steering.contributions(j), [[1, 1, 1], [0, 0, 0]])


class TestProject:
    def test_mixed_state(self):
        p, post = steering.project(np.eye(2) / 2, MeasurementSetting("y", -1))
        assert p == pytest.approx(0.5)
        assert np.allclose(post, qmat.projector("y", -1))

    def test_orthogonal_branch_is_none(self):
        p, post = steering.project(qmat.projector("z", 1), MeasurementSetting("z", -1))
        assert p == 0.0 and post is None

    def test_rejects_two_qubits(self):
        with pytest.raises(ValueError):
            steering.project(np.eye(4) / 4, MeasurementSetting("z", 1))


class TestHiddenStates:
    def test_single_channel_saturates_bound(self):
        # Alice always says +1 in every basis, Bob receives |+z>.
        resp = np.array([[[1.0, 0.0]] * 3])
        m = HiddenStateModel([1.0], resp, [qmat.projector("z", 1)])
        r = steering_parameter(steering.hidden_table(m, 3))
        assert r.s_value == pytest.approx(1.0)
        assert r.contributions == pytest.approx((1.0, 0.0, 0.0))

    @given(seeds)
    @settings(max_examples=200)
    def test_bound_holds(self, seed):
        rng = np.random.default_rng(seed)
        m = steering.random_hidden_model(rng)
        for n in (2, 3):
            assert steering_parameter(steering.hidden_table(m, n)).s_value <= 1 + 1e-9

    def test_validation(self):
        with pytest.raises(ValueError):
            HiddenStateModel([0.5, 0.6], np.full((2, 3, 2), 0.5), np.array([np.eye(2) / 2] * 2))
        with pytest.raises(ValueError):
            HiddenStateModel([1.0], np.full((1, 3, 2), 0.5), [np.diag([1.5, -0.5])])


def werner_oracle(V, n):
    """Brute force on the 4x4 state with explicit Kronecker projectors."""
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    rho = V * np.outer(psi, psi) + (1 - V) * np.eye(4) / 4
    paulis = {"z": np.diag([1, -1]), "x": np.array([[0, 1], [1, 0]]),
              "y": np.array([[0, -1j], [1j, 0]])}
    total = 0.0
    for b in "zxy"[:n]:
        P = {s: (np.eye(2) + s * paulis[b]) / 2 for s in (1, -1)}
        for a in (1, -1):
            pa = np.trace(np.kron(P[a], np.eye(2)) @ rho).real
            eb = sum(b_ * np.trace(np.kron(P[a], P[b_]) @ rho).real for b_ in (1, -1)) / pa
            total += pa * eb**2
    return total


class TestWerner:
    @pytest.mark.parametrize("V", [0, 0.3, 0.8, 1])
    @pytest.mark.parametrize("n", [2, 3])
    def test_against_oracle(self, V, n):
        s = steering_parameter(steering.werner_table(V, n)).s_value
        assert s == pytest.approx(werner_oracle(V, n), abs=1e-12)

    def test_conditioned_states(self):
        V = 0.6
        up = steering.werner_conditioned_state(V, MeasurementSetting("z", 1))
        assert np.allclose(up, np.diag([(1 - V) / 2, (1 + V) / 2]), atol=1e-14)
        xm = steering.werner_conditioned_state(V, MeasurementSetting("x", -1))
        assert np.allclose(xm, (np.eye(2) + V * qmat.SIGMA_X) / 2, atol=1e-14)

    def test_rejects_bad_visibility(self):
        with pytest.raises(ValueError):
            steering.werner_state(1.2)


def ordering_oracle(n):
    """Exact rational enumeration of the pre-measure-and-guess strategy."""
    half = Fraction(1, 2)
    joint = {}
    for k, r, ordered in product(range(n), (1, -1), range(n)):
        w = Fraction(1, n) * half * Fraction(1, n)  # basis, outcome, Bob's order
        for a, b in product((1, -1), repeat=2):
            p_a = (1 if a == r else 0) if ordered == k else half
            p_b = (1 if b == r else 0) if ordered == k else half
            joint[ordered, a, b] = joint.get((ordered, a, b), 0) + w * p_a * p_b
    s = Fraction(0)
    for i in range(n):
        tot = sum(joint[i, a, b] for a in (1, -1) for b in (1, -1))
        for a in (1, -1):
            pa = (joint[i, a, 1] + joint[i, a, -1]) / tot
            num = (joint[i, a, 1] - joint[i, a, -1]) / tot
            s += num * num / pa
    return s


class TestOrdering:
    @pytest.mark.parametrize("n", [2, 3])
    def test_pre_measured_exact(self, n):
        s = steering_parameter(steering.ordering_scenario("pre_measured", n_bases=n)).s_value
        assert s == pytest.approx(float(ordering_oracle(n)), abs=1e-15)
        assert ordering_oracle(n) == Fraction(1, n)

    def test_entangled(self):
        assert steering_parameter(steering.ordering_scenario("entangled")).s_value == pytest.approx(3)

    def test_monte_carlo_close_to_exact(self):
        s = steering_parameter(steering.ordering_scenario("pre_measured", seed=11)).s_value
        assert abs(s - 1 / 3) < 0.02

    def test_simulation_deterministic(self):
        a = steering.simulate_ordering("pre_measured", 500, seed=3)
        b = steering.simulate_ordering("pre_measured", 500, seed=3)
        assert a.shape == (500, 3) and np.array_equal(a, b)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            steering.ordering_scenario("classical")


class TestEntropic:
    def test_perfect_and_uniform(self):
        assert entropic_steering(perfect_table(3)) == 0.0
        assert entropic_steering(UNIFORM3) == pytest.approx(3.0)

    def test_symmetric_error_rate(self):
        # Two bases each with bit error R give 2 h(R); at R = 0.110028 this is 1.
        R = 0.110028
        block = np.array([[(1 - R) / 2, R / 2], [R / 2, (1 - R) / 2]])
        t = ConditionalTable(np.array([block, block]), ("z", "x"))
        assert entropic_steering(t) == pytest.approx(1.0, abs=1e-4)


class TestQuantumTables:
    def test_initial_value(self):
        t = steering.quantum_table(rabi_model(2, 1), np.eye(2) / 2, 0.0)
        assert steering_parameter(t).s_value == pytest.approx(3, abs=1e-12)

    def test_pure_damping_is_monotone(self):
        curve = steering.steering_curve(rabi_model(0, 1), np.eye(2) / 2, TimeGrid(0, 5, 100))
        assert curve.values[0] == pytest.approx(3)
        assert np.all(np.diff(curve.values) <= 1e-12)

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_quantum_ceiling(self, seed):
        rng = np.random.default_rng(seed)
        rho0 = random_density(rng)
        curve = steering.steering_curve(rabi_model(3, 1), rho0, TimeGrid(0, 1, 10))
        assert np.all(curve.values <= 3 + 1e-9) and np.all(curve.values >= -1e-12)

    def test_ancilla_initial_value(self):
        rho0 = ancilla_initial_state()
        t = steering.quantum_table(ancilla_model(9, 1), rho0, 0.0)
        assert steering_parameter(t).s_value == pytest.approx(3, abs=1e-12)

    def test_ancilla_system_qubit_two(self):
        # With the roles of the qubits swapped and no damping, the swap dynamics
        # are symmetric, so the curve is the same.
        rho0 = np.eye(4) / 4
        grid = TimeGrid(0, 1, 20)
        a = steering.steering_curve(ancilla_model(2, 0), rho0, grid, system_qubit=1)
        b = steering.steering_curve(ancilla_model(2, 0), rho0, grid, system_qubit=2)
        assert np.allclose(a.values, b.values, atol=1e-10)

    def test_table_matches_table_series(self):
        m, rho0 = rabi_model(4, 1), np.eye(2) / 2
        series = steering.quantum_tables(m, rho0, TimeGrid(0, 0.5, 5))
        single = steering.quantum_table(m, rho0, 0.5)
        assert np.allclose(series[-1].joint, single.joint, atol=1e-9)


class TestFit:
    def test_recovers_exponential(self):
        t = np.linspace(0, 2, 21)
        rate, amp, resid = steering.fit_exponential(TimeSeries(t, 0.7 * np.exp(-1.3 * t)))
        assert rate == pytest.approx(1.3) and amp == pytest.approx(0.7) and resid < 1e-12

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            steering.fit_exponential(TimeSeries([0, 1], [1, 0]))
