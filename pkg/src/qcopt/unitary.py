"""Exact circuit semantics: gate matrices, composition, distance, fidelity.

Distance is ``sqrt(1 - |Tr(U~V)|^2 / N^2)`` (~ denoting conjugate transpose),
which ignores global phase. Near zero that expression loses ~8 digits to
cancellation, so it is evaluated through the phase-aligned Frobenius residual
``s = ||e^{-i arg Tr(W)} W - I||_F^2 / (2N)`` with ``W = U~V``; for unitary W
the identity ``|Tr W| = N - ||.||^2/2`` makes ``sqrt(s(2-s))`` the same number
without the cancellation.
"""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .circuit import Circuit, CircuitError, Gate
from .gateset import NoiseModel

SIM_CAP_QUBITS = 12
DISTANCE_SLACK = 1e-9

SQRT1_2 = 1.0 / math.sqrt(2.0)

_H = np.array([[SQRT1_2, SQRT1_2], [SQRT1_2, -SQRT1_2]], dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=np.complex128)
_CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)

_FIXED = {
    "h": _H,
    "x": _X,
    "sx": _SX,
    "cx": _CX,
    "t": np.diag([1.0, np.exp(0.25j * np.pi)]).astype(np.complex128),
    "tdg": np.diag([1.0, np.exp(-0.25j * np.pi)]).astype(np.complex128),
    "s": np.diag([1.0, 1.0j]).astype(np.complex128),
    "sdg": np.diag([1.0, -1.0j]).astype(np.complex128),
}


class SimulationCapError(CircuitError):
    pass


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]).astype(np.complex128)


def _rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _rxx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    m = np.zeros((4, 4), dtype=np.complex128)
    for i in range(4):
        m[i, i] = c
        m[i, 3 - i] = -1j * s
    return m


def _u1(lam: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * lam)]).astype(np.complex128)


def _u2(phi: float, lam: float) -> np.ndarray:
    return SQRT1_2 * np.array(
        [[1.0, -np.exp(1j * lam)], [np.exp(1j * phi), np.exp(1j * (phi + lam))]],
        dtype=np.complex128,
    )


def _u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=np.complex128,
    )


_PARAMETRIC = {"rz": _rz, "rx": _rx, "ry": _ry, "rxx": _rxx, "u1": _u1, "u2": _u2, "u3": _u3}


def gate_matrix(name: str, params: tuple) -> np.ndarray:
    """Matrix for a gate by name with radian parameters already extracted."""
    if name in _FIXED:
        return _FIXED[name]
    if name in _PARAMETRIC:
        return _PARAMETRIC[name](*params)
    raise CircuitError(f"no unitary known for gate {name!r}")


def gate_unitary(g: Gate) -> np.ndarray:
    return gate_matrix(g.name, tuple(p.radians for p in g.params))


def circuit_unitary(circuit: Circuit, cap: int = SIM_CAP_QUBITS) -> np.ndarray:
    if circuit.num_qubits > cap:
        raise SimulationCapError(
            f"{circuit.num_qubits} qubits exceeds the {cap}-qubit simulation cap"
        )
    mats = [gate_unitary(g) for g in circuit.gates]
    quba = [g.qubits for g in circuit.gates]
    return kernels.compose(circuit.num_qubits, mats, quba)


def phase_aligned_residual(U: np.ndarray, V: np.ndarray) -> float:
    """``1 - |Tr(U~V)|/N``, computed without cancellation near zero.

    Cheap smooth objective for synthesis: it is 0 exactly when U and V agree
    up to global phase, and hs_distance = sqrt(s * (2 - s)).
    """
    if U.shape != V.shape:
        raise ValueError(f"dimension mismatch: {U.shape} vs {V.shape}")
    n = U.shape[0]
    W = U.conj().T @ V
    t = np.trace(W)
    a = abs(t)
    if a < 1e-12:
        return 1.0
    M = W * (t.conjugate() / a)
    M[np.diag_indices(n)] -= 1.0
    s = float(np.real(np.vdot(M, M))) / (2.0 * n)
    return min(s, 1.0)


def hs_distance(U: np.ndarray, V: np.ndarray) -> float:
    s = phase_aligned_residual(U, V)
    return math.sqrt(max(0.0, min(1.0, s * (2.0 - s))))


def approx_equiv(a: Circuit, b: Circuit, epsilon: float, cap: int = SIM_CAP_QUBITS) -> bool:
    if a.num_qubits != b.num_qubits:
        raise CircuitError("circuits act on different qubit counts")
    d = hs_distance(circuit_unitary(a, cap), circuit_unitary(b, cap))
    return d <= epsilon + DISTANCE_SLACK


def fidelity_score(circuit: Circuit, model: NoiseModel) -> float:
    score = 1.0
    for g in circuit.gates:
        score *= model.fidelity(g)
    return score


def gate_reduction(original: int, optimized: int) -> float:
    if original <= 0:
        raise ValueError("gate reduction undefined for an empty original circuit")
    return 1.0 - optimized / original
