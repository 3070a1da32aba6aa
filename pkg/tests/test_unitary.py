import math

import numpy as np
import pytest

from qcopt.circuit import Angle, Circuit, Gate
from qcopt.gateset import GATE_SETS, NAM, NoiseModel, get_gate_set
from qcopt.unitary import (
    SimulationCapError,
    approx_equiv,
    circuit_unitary,
    fidelity_score,
    gate_reduction,
    gate_unitary,
    hs_distance,
)

from helpers import commute_merge_demo, commute_merge_demo_reduced, random_circuit, random_unitary


def unitarity_defect(u):
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))


class TestGateUnitaries:
    def test_t_matrix(self):
        expected = np.diag([1.0, np.exp(1j * np.pi / 4)])
        assert np.allclose(gate_unitary(Gate("t", (0,))), expected, atol=1e-15)

    def test_cx_matrix(self):
        expected = np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
        assert np.array_equal(gate_unitary(Gate("cx", (0, 1))), expected)

    def test_rz_zero_is_identity_up_to_phase(self):
        u = gate_unitary(Gate("rz", (0,), (Angle.exact(0),)))
        assert hs_distance(u, np.eye(2, dtype=complex)) == 0.0

    def test_every_gate_unitary(self, rng):
        for set_name in sorted(GATE_SETS):
            gate_set = get_gate_set(set_name)
            for spec in gate_set.gates:
                for _ in range(5):
                    params = tuple(
                        Angle.of(float(rng.uniform(0, 2 * math.pi)))
                        for _ in range(spec.num_params)
                    )
                    u = gate_unitary(Gate(spec.name, tuple(range(spec.arity)), params))
                    assert unitarity_defect(u) <= 1e-10


class TestCircuitUnitary:
    def test_t_then_cx_composition(self):
        # [T on q1, CX] composes as CX . (I (x) T), qubit 0 most significant.
        c = Circuit(2, (Gate("t", (1,)), Gate("cx", (0, 1))))
        expected = gate_unitary(Gate("cx", (0, 1))) @ np.kron(
            np.eye(2), gate_unitary(Gate("t", (0,)))
        )
        assert np.allclose(circuit_unitary(c), expected, atol=1e-15)

    def test_empty_circuit_identity(self):
        assert np.array_equal(circuit_unitary(Circuit(3)), np.eye(8))

    def test_cx_pair_identity(self):
        c = Circuit(2, (Gate("cx", (0, 1)), Gate("cx", (0, 1))))
        assert np.allclose(circuit_unitary(c), np.eye(4), atol=1e-15)

    def test_multiplicative_over_concatenation(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 5))
            a = random_circuit(rng, NAM, n, int(rng.integers(0, 8)))
            b = random_circuit(rng, NAM, n, int(rng.integers(0, 8)))
            joined = Circuit(n, a.gates + b.gates)
            product = circuit_unitary(b) @ circuit_unitary(a)
            assert hs_distance(circuit_unitary(joined), product) <= 1e-9

    def test_cap_enforced(self):
        with pytest.raises(SimulationCapError):
            circuit_unitary(Circuit(13))
        circuit_unitary(Circuit(13), cap=13)

    def test_outputs_stay_unitary(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 6))
            u = circuit_unitary(random_circuit(rng, NAM, n, 20))
            assert unitarity_defect(u) <= 1e-10


class TestHsDistance:
    def test_self_distance_zero(self, rng):
        u = random_unitary(rng, 8)
        assert hs_distance(u, u) <= 1e-12

    def test_global_phase_invariance(self, rng):
        u = random_unitary(rng, 4)
        for phi in (0.3, np.pi, -1.2):
            assert hs_distance(u, np.exp(1j * phi) * u) <= 1e-12

    def test_identity_vs_z(self):
        z = np.diag([1.0, -1.0]).astype(complex)
        assert hs_distance(np.eye(2, dtype=complex), z) == pytest.approx(1.0)

    def test_t_vs_s(self):
        d = hs_distance(gate_unitary(Gate("t", (0,))), gate_unitary(Gate("s", (0,))))
        assert d == pytest.approx(math.sin(math.pi / 8), abs=1e-12)
        assert d > 0.19

    def test_symmetry(self, rng):
        u, v = random_unitary(rng, 4), random_unitary(rng, 4)
        assert hs_distance(u, v) == pytest.approx(hs_distance(v, u), abs=1e-12)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            hs_distance(np.eye(2, dtype=complex), np.eye(4, dtype=complex))

    def test_range(self, rng):
        for _ in range(20):
            d = hs_distance(random_unitary(rng, 4), random_unitary(rng, 4))
            assert 0.0 <= d <= 1.0

    def test_triangle_chain_bound(self, rng):
        # Additive bound on chains, exercised with random circuit unitaries.
        for _ in range(20):
            n = int(rng.integers(1, 4))
            u = circuit_unitary(random_circuit(rng, NAM, n, 6))
            v = circuit_unitary(random_circuit(rng, NAM, n, 6))
            w = circuit_unitary(random_circuit(rng, NAM, n, 6))
            assert hs_distance(u, w) <= hs_distance(u, v) + hs_distance(v, w) + 1e-12

    def test_residual_matches_definition_away_from_zero(self, rng):
        # Same number as the textbook formula when cancellation is harmless.
        u, v = random_unitary(rng, 8), random_unitary(rng, 8)
        n = 8
        direct = math.sqrt(max(0.0, 1.0 - abs(np.trace(u.conj().T @ v)) ** 2 / n**2))
        assert hs_distance(u, v) == pytest.approx(direct, abs=1e-10)

    def test_near_zero_resolution(self):
        # The stable form resolves distances far below the cancellation floor
        # of the direct formula (~1e-8).
        demo, reduced = commute_merge_demo(), commute_merge_demo_reduced()
        d = hs_distance(circuit_unitary(demo), circuit_unitary(reduced))
        assert d <= 1e-12


class TestApproxEquiv:
    def test_demo_reduction_zero_equivalent(self):
        assert approx_equiv(commute_merge_demo(), commute_merge_demo_reduced(), 0.0)

    def test_t_vs_s_not_equivalent(self):
        a = Circuit(1, (Gate("t", (0,)),))
        b = Circuit(1, (Gate("s", (0,)),))
        assert not approx_equiv(a, b, 0.0)
        assert approx_equiv(a, b, 0.4)

    def test_qubit_count_mismatch(self):
        with pytest.raises(Exception):
            approx_equiv(Circuit(1), Circuit(2), 0.0)


class TestFidelity:
    def test_empty_circuit(self):
        assert fidelity_score(Circuit(2), NoiseModel({"two_qubit": 0.9})) == 1.0

    def test_product(self):
        model = NoiseModel({"single_qubit": 0.99, "two_qubit": 0.999})
        c = Circuit(2, (Gate("h", (0,)), Gate("cx", (0, 1))))
        assert fidelity_score(c, model) == pytest.approx(0.99 * 0.999)

    def test_adding_noisy_gate_decreases(self):
        model = NoiseModel({"two_qubit": 0.99})
        c = Circuit(2, (Gate("cx", (0, 1)),))
        c2 = c.extended([Gate("cx", (0, 1))])
        assert fidelity_score(c2, model) < fidelity_score(c, model)

    def test_order_independent(self, rng):
        model = NoiseModel({"single_qubit": 0.98, "two_qubit": 0.9})
        c = random_circuit(rng, NAM, 3, 10)
        reversed_c = Circuit(3, tuple(reversed(c.gates)))
        assert fidelity_score(c, model) == pytest.approx(fidelity_score(reversed_c, model))

    def test_multiplicative_over_concatenation(self, rng):
        model = NoiseModel({"single_qubit": 0.98, "two_qubit": 0.9})
        a = random_circuit(rng, NAM, 3, 6)
        b = random_circuit(rng, NAM, 3, 5)
        joined = Circuit(3, a.gates + b.gates)
        assert fidelity_score(joined, model) == pytest.approx(
            fidelity_score(a, model) * fidelity_score(b, model)
        )


class TestGateReduction:
    def test_values(self):
        assert gate_reduction(100, 72) == pytest.approx(0.28)
        assert gate_reduction(10, 10) == 0.0
        assert gate_reduction(5, 7) == pytest.approx(-0.4)

    def test_zero_original(self):
        with pytest.raises(ValueError):
            gate_reduction(0, 0)
