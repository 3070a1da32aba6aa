"""Exact enumeration synthesis for finite (parameter-free) gate sets.

Uniform-cost search over circuits ordered by (objective cost, gate count):
states are unitaries reached so far, deduplicated by a phase-normalized
6-decimal rounding key. Key collisions are re-checked with the exact
distance, so the rounding only bounds memory, never correctness. The first
state within epsilon of the target is returned, which makes it cost-minimal
among the enumerated depths.
"""
from __future__ import annotations

import heapq
import time
from itertools import permutations
from typing import Optional

import numpy as np

from ..circuit import Circuit, Gate
from ..gateset import GateSetDef
from ..unitary import gate_matrix, hs_distance
from .. import kernels


def _canonical_key(u: np.ndarray) -> bytes:
    flat = u.ravel()
    idx = int(np.argmax(np.abs(flat)))
    pivot = flat[idx]
    normalized = u * (abs(pivot) / pivot)
    return np.round(normalized, 6).tobytes()


def _moves(gate_set: GateSetDef, num_qubits: int, cost) -> list[tuple[Gate, np.ndarray, float]]:
    moves = []
    for spec in gate_set.gates:
        if spec.num_params:
            raise ValueError(
                f"exact search requires a parameter-free gate set, "
                f"{spec.name} takes parameters"
            )
        mat = gate_matrix(spec.name, ())
        if spec.arity == 1:
            placements = [(q,) for q in range(num_qubits)]
        else:
            placements = list(permutations(range(num_qubits), spec.arity))
        for qubits in placements:
            g = Gate(spec.name, qubits)
            weight = cost(Circuit(num_qubits, (g,)))
            moves.append((g, mat, weight))
    return moves


def exact_search_synthesize(
    target: np.ndarray,
    gate_set: GateSetDef,
    epsilon: float,
    budget_ms: Optional[float],
    cost,
    depth_cap: int = 8,
    max_pops: int = 20_000,
) -> Optional[tuple[Circuit, float]]:
    """``budget_ms=None`` leaves only the deterministic ``max_pops`` and
    ``depth_cap`` limits, for seed-stable runs."""
    num_qubits = int(np.log2(target.shape[0]))
    dim = target.shape[0]
    moves = _moves(gate_set, num_qubits, cost)
    deadline = float("inf") if budget_ms is None else time.monotonic() + budget_ms / 1000.0

    identity = np.eye(dim, dtype=np.complex128)
    counter = 0
    heap = [(0.0, 0, counter, identity, ())]
    visited: dict[bytes, list[tuple[np.ndarray, float, int]]] = {
        _canonical_key(identity): [(identity, 0.0, 0)]
    }
    pops = 0
    while heap:
        pops += 1
        if pops > max_pops:
            return None
        if pops % 64 == 0 and time.monotonic() > deadline:
            return None
        total, depth, _, u, gates = heapq.heappop(heap)
        d = hs_distance(u, target)
        if d <= epsilon + 1e-9:
            return Circuit(num_qubits, gates), d
        if depth >= depth_cap:
            continue
        for g, mat, weight in moves:
            u2 = kernels.apply_gate(u, mat, g.qubits, num_qubits)
            key = _canonical_key(u2)
            bucket = visited.setdefault(key, [])
            duplicate = False
            for seen_u, seen_cost, seen_depth in bucket:
                if hs_distance(seen_u, u2) <= 1e-9:
                    if (seen_cost, seen_depth) <= (total + weight, depth + 1):
                        duplicate = True
                    break
            if duplicate:
                continue
            bucket.append((u2, total + weight, depth + 1))
            counter += 1
            heapq.heappush(
                heap, (total + weight, depth + 1, counter, u2, gates + (g,))
            )
    return None
