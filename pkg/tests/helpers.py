"""Shared circuit builders and brute-force oracles for the test suite."""
from __future__ import annotations

import math
from itertools import product

import numpy as np

from qcopt.circuit import Angle, Circuit, CircuitDag, Gate
from qcopt.gateset import GateSetDef


def rz(q: int, num: int, den: int = 1) -> Gate:
    return Gate("rz", (q,), (Angle.exact(num, den),))


def commute_merge_demo() -> Circuit:
    """2-qubit demo: H; Rz(pi/2); CX; Rz(pi/2) - reducible to 3 gates."""
    return Circuit(2, (Gate("h", (1,)), rz(0, 1, 2), Gate("cx", (0, 1)), rz(0, 1, 2)))


def commute_merge_demo_reduced() -> Circuit:
    return Circuit(2, (Gate("h", (1,)), Gate("cx", (0, 1)), rz(0, 1, 1)))


def cx_fanin() -> Circuit:
    """Five CX gates sharing a target; reduces to three by commute+cancel."""
    return Circuit(5, tuple(Gate("cx", (c, 0)) for c in (1, 2, 3, 4, 1)))


def phase_ladder() -> Circuit:
    """3-qubit ladder: CX(0,1), then Rz(pi/4)/CX(0,2) repetitions, CX(0,1).

    Equivalent to just [Rz(pi)(0), CX(0,2)].
    """
    gates = [Gate("cx", (0, 1))]
    for _ in range(3):
        gates += [rz(0, 1, 4), Gate("cx", (0, 2))]
    gates += [rz(0, 1, 4), Gate("cx", (0, 1))]
    return Circuit(3, tuple(gates))


def random_circuit(rng, gate_set: GateSetDef, num_qubits: int, length: int) -> Circuit:
    gates = []
    specs = [s for s in gate_set.gates if s.arity <= num_qubits]
    for _ in range(length):
        spec = specs[int(rng.integers(len(specs)))]
        qubits = tuple(int(q) for q in rng.choice(num_qubits, size=spec.arity, replace=False))
        params = tuple(
            Angle.of(float(rng.uniform(0.0, 2.0 * math.pi))) for _ in range(spec.num_params)
        )
        gates.append(Gate(spec.name, qubits, params))
    return Circuit(num_qubits, tuple(gates))


def convexity_oracle(dag: CircuitDag, members) -> bool:
    """Definitional check: enumerate every path between every pair of member
    nodes and require all interior nodes to be members too.
    """
    members = set(members)
    ok = True

    def walk(node, goal, interior_outside):
        nonlocal ok
        if not ok:
            return
        if node == goal:
            if interior_outside:
                ok = False
            return
        for nxt in dag.successors(node):
            walk(nxt, goal, interior_outside or (node not in members))

    for u, v in product(members, repeat=2):
        if u == v:
            continue
        for s in dag.successors(u):
            walk(s, v, s not in members and s != v)
        if not ok:
            return False
    return True


def random_unitary(rng, dim: int) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))
