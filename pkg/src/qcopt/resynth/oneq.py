"""Minimal single-qubit realizations of 2x2 unitaries within a gate set.

Skeletons (gate-name sequences with free rotation angles) are tried in
increasing gate count; the first one that reaches the tolerance wins, so the
result is minimal over the listed shapes. Fitted angles are snapped back to
exact multiples of pi when that survives re-verification, which keeps the
common dyadic angles exact in emitted circuits.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from ..circuit import Angle, Circuit, Gate
from ..gateset import GateSetDef
from ..unitary import circuit_unitary, gate_matrix, phase_aligned_residual

TWO_PI = 2.0 * math.pi

# Ordered by gate count; every list ends in a universal parameterization.
_SKELETONS = {
    "nam": [
        [], ["h"], ["x"], ["rz"],
        ["rz", "h"], ["h", "rz"], ["rz", "x"], ["x", "rz"],
        ["h", "rz", "h"], ["rz", "h", "rz"],
        ["rz", "h", "rz", "h"], ["h", "rz", "h", "rz"],
        ["rz", "h", "rz", "h", "rz"],
    ],
    "ibm-eagle": [
        [], ["rz"], ["x"], ["sx"],
        ["rz", "sx"], ["sx", "rz"], ["rz", "x"], ["x", "rz"],
        ["sx", "rz", "sx"], ["rz", "sx", "rz"],
        ["rz", "sx", "rz", "sx"], ["sx", "rz", "sx", "rz"],
        ["rz", "sx", "rz", "sx", "rz"],
    ],
    "ionq": [
        [], ["rx"], ["ry"], ["rz"],
        ["rz", "rx"], ["rx", "rz"], ["rz", "ry"], ["ry", "rz"],
        ["rx", "ry"], ["ry", "rx"],
        ["rz", "ry", "rz"],
    ],
    "ibmq20": [[], ["u1"], ["u2"], ["u3"]],
}

_PARAM_COUNTS = {"rz": 1, "rx": 1, "ry": 1, "u1": 1, "u2": 2, "u3": 3}


def residual_threshold(epsilon: float, slack: float = 1e-9) -> float:
    """Largest phase-aligned residual s with sqrt(s(2-s)) <= epsilon + slack.

    Uses s = d^2 / (1 + sqrt(1-d^2)), which stays meaningful for tiny d where
    the textbook 1 - sqrt(1-d^2) underflows to zero.
    """
    d = min(1.0, epsilon + slack)
    return d * d / (1.0 + math.sqrt(max(0.0, 1.0 - d * d)))


def snap_angle(value: float, max_denominator: int = 256, tol: float = 1e-6) -> Angle:
    """Round a radian value to an exact multiple of pi when very close."""
    frac = Fraction(value / math.pi).limit_denominator(max_denominator)
    if abs(float(frac) * math.pi - value) <= tol:
        return Angle.from_fraction(frac)
    return Angle.of(value)


def snap_circuit(circuit: Circuit) -> Circuit:
    gates = tuple(
        Gate(g.name, g.qubits, tuple(snap_angle(p.radians) for p in g.params))
        for g in circuit.gates
    )
    return Circuit(circuit.num_qubits, gates)


def _skeleton_circuit(names: list[str], params: np.ndarray) -> Circuit:
    gates = []
    i = 0
    for name in names:
        n = _PARAM_COUNTS.get(name, 0)
        angles = tuple(Angle.of(float(v)) for v in params[i : i + n])
        i += n
        gates.append(Gate(name, (0,), angles))
    return Circuit(1, tuple(gates))


def _skeleton_unitary(names: list[str], params: np.ndarray) -> np.ndarray:
    u = np.eye(2, dtype=np.complex128)
    i = 0
    for name in names:
        n = _PARAM_COUNTS.get(name, 0)
        u = gate_matrix(name, tuple(float(v) for v in params[i : i + n])) @ u
        i += n
    return u


def euler_zyz(v: np.ndarray) -> tuple[float, float, float]:
    """Angles (a, b, c) with v proportional to Rz(a) Ry(b) Rz(c)."""
    det = np.linalg.det(v)
    w = v / np.sqrt(det)
    beta = 2.0 * math.atan2(abs(w[1, 0]), abs(w[0, 0]))
    if abs(w[0, 0]) < 1e-12:
        half_diff = float(np.angle(w[1, 0]))
        return half_diff * 2.0, beta, 0.0
    half_sum = -float(np.angle(w[0, 0]))
    if abs(w[1, 0]) < 1e-12:
        return half_sum * 2.0, beta, 0.0
    half_diff = float(np.angle(w[1, 0]))
    return half_sum + half_diff, beta, half_sum - half_diff


def fit_skeleton(
    names: list[str],
    target: np.ndarray,
    threshold: float,
    rng,
    starts: int = 6,
    maxfev: int = 2000,
) -> Optional[np.ndarray]:
    nparams = sum(_PARAM_COUNTS.get(n, 0) for n in names)
    if nparams == 0:
        u = _skeleton_unitary(names, np.empty(0))
        return np.empty(0) if phase_aligned_residual(target, u) <= threshold else None

    def objective(x):
        return phase_aligned_residual(target, _skeleton_unitary(names, x))

    guesses = [np.zeros(nparams)]
    a, b, c = euler_zyz(target)
    # Skeletons compose in time order (first gate rightmost in the product),
    # so the matrix-order Euler angles seed the slots reversed; offer both.
    for seed in ([c, b, a], [a, b, c]):
        guesses.append(np.array(seed[:nparams] + [0.0] * max(0, nparams - 3)))
    while len(guesses) < starts + 2:
        guesses.append(rng.uniform(0.0, TWO_PI, nparams))
    for x0 in guesses:
        res = minimize(
            objective,
            x0,
            method="Powell",
            options={"xtol": 1e-12, "ftol": 1e-14, "maxfev": maxfev},
        )
        if objective(res.x) <= threshold:
            return np.asarray(res.x, dtype=float)
    return None


def minimal_1q_circuit(
    target: np.ndarray, gate_set: GateSetDef, epsilon: float, rng
) -> Optional[Circuit]:
    """Fewest-gate single-qubit circuit within epsilon of ``target``."""
    if gate_set.name not in _SKELETONS:
        return None
    threshold = residual_threshold(epsilon)
    for names in _SKELETONS[gate_set.name]:
        params = fit_skeleton(names, target, threshold, rng)
        if params is None:
            continue
        raw = _skeleton_circuit(names, params)
        snapped = snap_circuit(raw)
        for candidate in (snapped, raw):
            u = circuit_unitary(candidate)
            if phase_aligned_residual(target, u) <= threshold:
                return candidate
    return None
