"""Template instantiation for parameterized gate sets.

Templates are tried in increasing entangler count (0..3): a universal
single-qubit parameter block on every qubit, then per entangler the two-qubit
gate plus fresh blocks on the touched qubits. Parameters are fitted by
multi-start derivative-free descent on the phase-aligned residual. The first
entangler count that reaches the tolerance wins; within the cheap levels
every placement is evaluated and the shortest rebuild is kept. Fitted blocks
are re-decomposed to minimal single-qubit sequences and the result is cleaned
with the rewrite rules, so trivial blocks disappear instead of surfacing as
identity chains.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import combinations, permutations, product
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .. import kernels
from ..circuit import Angle, Circuit, Gate
from ..gateset import GateSetDef
from ..rewrite import builtin_rules, normalize
from ..unitary import (
    circuit_unitary,
    gate_matrix,
    hs_distance,
    phase_aligned_residual,
)
from .oneq import minimal_1q_circuit, residual_threshold, snap_circuit

TWO_PI = 2.0 * np.pi

_BLOCKS = {
    "nam": ("rz", "h", "rz", "h", "rz"),
    "ibm-eagle": ("rz", "sx", "rz", "sx", "rz"),
    "ionq": ("rz", "ry", "rz"),
    "ibmq20": ("u3",),
}
_BLOCK_PARAMS = {"nam": 3, "ibm-eagle": 3, "ionq": 3, "ibmq20": 3}
_ENTANGLER = {"nam": "cx", "ibm-eagle": "cx", "ibmq20": "cx", "ionq": "rxx"}
_PARAM_COUNTS = {"rz": 1, "rx": 1, "ry": 1, "u1": 1, "u2": 2, "u3": 3, "rxx": 1}


class _Template:
    """Op layout: ("block", qubit) and ("ent", (a, b)) entries with a flat
    parameter vector across all rotation slots."""

    def __init__(self, gate_set_name: str, num_qubits: int, placement: tuple):
        self.set_name = gate_set_name
        self.num_qubits = num_qubits
        self.block = _BLOCKS[gate_set_name]
        self.ent_name = _ENTANGLER[gate_set_name]
        self.ops: list[tuple] = [("block", q) for q in range(num_qubits)]
        for pair in placement:
            self.ops.append(("ent", pair))
            self.ops.append(("block", pair[0]))
            self.ops.append(("block", pair[1]))
        self.num_params = 0
        for kind, _ in self.ops:
            if kind == "block":
                self.num_params += _BLOCK_PARAMS[gate_set_name]
            else:
                self.num_params += _PARAM_COUNTS.get(self.ent_name, 0)

    def _iter_gates(self, params: np.ndarray):
        i = 0
        for kind, where in self.ops:
            if kind == "block":
                for name in self.block:
                    n = _PARAM_COUNTS.get(name, 0)
                    yield name, (where,), tuple(float(v) for v in params[i : i + n])
                    i += n
            else:
                n = _PARAM_COUNTS.get(self.ent_name, 0)
                yield self.ent_name, where, tuple(float(v) for v in params[i : i + n])
                i += n

    def unitary(self, params: np.ndarray) -> np.ndarray:
        mats, quba = [], []
        for name, qubits, values in self._iter_gates(params):
            mats.append(gate_matrix(name, values))
            quba.append(qubits)
        return kernels.compose(self.num_qubits, mats, quba)

    def circuit(self, params: np.ndarray) -> Circuit:
        gates = tuple(
            Gate(name, qubits, tuple(Angle.of(v) for v in values))
            for name, qubits, values in self._iter_gates(params)
        )
        return Circuit(self.num_qubits, gates)

    def block_unitaries(self, params: np.ndarray) -> list[tuple[int, np.ndarray]]:
        """(qubit, 2x2 unitary) per block op, in op order."""
        out = []
        i = 0
        for kind, where in self.ops:
            if kind == "block":
                u = np.eye(2, dtype=np.complex128)
                for name in self.block:
                    n = _PARAM_COUNTS.get(name, 0)
                    u = gate_matrix(name, tuple(float(v) for v in params[i : i + n])) @ u
                    i += n
                out.append((where, u))
            else:
                i += _PARAM_COUNTS.get(self.ent_name, 0)
        return out


def _placements(num_qubits: int, entanglers: int, symmetric: bool):
    # Orientation matters for cx (flipping it costs basis-change gates in the
    # rebuild), so asymmetric entanglers enumerate ordered pairs.
    if symmetric:
        pairs = list(combinations(range(num_qubits), 2))
    else:
        pairs = list(permutations(range(num_qubits), 2))
    if entanglers == 0:
        yield ()
        return
    yield from product(pairs, repeat=entanglers)


def _fit(template: _Template, target: np.ndarray, threshold: float, rng,
         starts: int, maxfev: int, deadline: float, keep: int = 3) -> list[np.ndarray]:
    """Multi-start descent; returns up to ``keep`` distinct solutions below
    the threshold (different starts land in different gauges, and some gauges
    sparsify to far cheaper circuits than others).
    """

    def objective(x):
        return phase_aligned_residual(target, template.unitary(x))

    solutions: list[np.ndarray] = []
    for trial in range(starts):
        if time.monotonic() > deadline or len(solutions) >= keep:
            break
        x0 = np.zeros(template.num_params) if trial == 0 else rng.uniform(
            0.0, TWO_PI, template.num_params
        )
        res = minimize(
            objective,
            x0,
            method="Powell",
            options={"xtol": 1e-12, "ftol": 1e-14, "maxfev": maxfev},
        )
        if objective(res.x) <= threshold:
            solutions.append(np.asarray(res.x, dtype=float))
    return solutions


_GRID = np.pi / 4.0


def _sparsify(template: _Template, target: np.ndarray, x: np.ndarray,
              threshold: float, deadline: float, order) -> np.ndarray:
    """Pin parameters to multiples of pi/4 one at a time (zero preferred),
    re-optimizing the free remainder after each pin. Successful pins stay
    frozen, so the fitted point drifts into a sparse gauge where blocks
    collapse to short exact gate sequences. The pin order steers which gauge
    wins, so callers try several orders and keep the cheapest rebuild.
    """

    def objective_with(base, free_idx):
        def obj(sub):
            y = base.copy()
            y[free_idx] = sub
            return phase_aligned_residual(target, template.unitary(y))

        return obj

    x = x.copy()
    frozen = np.zeros(len(x), dtype=bool)
    for i in order:
        if time.monotonic() > deadline:
            break
        nearest = round(x[i] / _GRID) * _GRID
        for pin in ([0.0, nearest] if nearest != 0.0 else [0.0]):
            trial = x.copy()
            trial[i] = pin
            trial_frozen = frozen.copy()
            trial_frozen[i] = True
            free_idx = np.nonzero(~trial_frozen)[0]
            if free_idx.size:
                obj = objective_with(trial, free_idx)
                res = minimize(
                    obj,
                    trial[free_idx],
                    method="Powell",
                    options={"xtol": 1e-12, "ftol": 1e-14, "maxfev": 1200},
                )
                value = obj(res.x)
                candidate = trial.copy()
                candidate[free_idx] = res.x
            else:
                candidate = trial
                value = phase_aligned_residual(target, template.unitary(candidate))
            if value <= threshold:
                x, frozen = candidate, trial_frozen
                break
    return x


def _rebuild(template: _Template, params: np.ndarray, gate_set: GateSetDef, rng) -> Circuit:
    """Replace each fitted block by its minimal single-qubit realization,
    keep entanglers as fitted (angles snapped), then rule-clean the result.
    """
    blocks = template.block_unitaries(params)
    gates: list[Gate] = []
    bi = 0
    i = 0
    for kind, where in template.ops:
        if kind == "block":
            _, block_u = blocks[bi]
            bi += 1
            for name in template.block:
                i += _PARAM_COUNTS.get(name, 0)
            piece = minimal_1q_circuit(block_u, gate_set, 0.0, rng)
            if piece is None:
                continue
            gates.extend(Gate(g.name, (where,), g.params) for g in piece.gates)
        else:
            n = _PARAM_COUNTS.get(template.ent_name, 0)
            values = tuple(float(v) for v in params[i : i + n])
            i += n
            gates.append(
                Gate(template.ent_name, where, tuple(Angle.of(v) for v in values))
            )
    return cleanup(Circuit(template.num_qubits, tuple(gates)), gate_set)


def cleanup(circuit: Circuit, gate_set: GateSetDef) -> Circuit:
    """Alternate angle snapping with rule normalization; merges can create
    new exactly-snappable angles, so a couple of rounds pay off.
    """
    rules = builtin_rules(gate_set)
    for _ in range(3):
        cleaned = normalize(snap_circuit(circuit), rules)
        if cleaned == circuit:
            break
        circuit = cleaned
    return circuit


@dataclass(frozen=True)
class SynthesisEffort:
    """Deterministic work caps for template synthesis. ``FULL`` favors the
    cheapest possible output circuit; ``SEARCH`` favors call throughput for
    use inside the optimization loop."""

    starts: int = 8
    maxfev: int = 6000
    keep_solutions: int = 3
    sparsify_orders: int = 4
    max_entanglers: int = 3


FULL_EFFORT = SynthesisEffort()
SEARCH_EFFORT = SynthesisEffort(starts=4, maxfev=3000, keep_solutions=1, sparsify_orders=2)


def template_fit_synthesize(
    target: np.ndarray,
    gate_set: GateSetDef,
    epsilon: float,
    budget_ms: Optional[float],
    rng,
    effort: SynthesisEffort = FULL_EFFORT,
) -> Optional[tuple[Circuit, float]]:
    """Search templates in increasing entangler count; returns the first
    [circuit, distance] pair within epsilon, or None on timeout/failure.

    ``budget_ms=None`` disables the wall clock: every stage then stops only
    at its deterministic iteration caps, which keeps seeded runs bit-stable.
    """
    if gate_set.name not in _BLOCKS:
        raise ValueError(f"no template family for gate set {gate_set.name!r}")
    num_qubits = int(np.log2(target.shape[0]))
    threshold = residual_threshold(epsilon)
    deadline = float("inf") if budget_ms is None else time.monotonic() + budget_ms / 1000.0
    symmetric = _ENTANGLER[gate_set.name] == "rxx"
    for entanglers in range(effort.max_entanglers + 1):
        # Low levels are cheap enough to evaluate every placement and keep
        # the shortest rebuild; deeper levels stop at the first success.
        exhaustive = entanglers <= 1
        best = None
        for placement in _placements(num_qubits, entanglers, symmetric):
            if time.monotonic() > deadline:
                return best
            template = _Template(gate_set.name, num_qubits, placement)
            solutions = _fit(
                template, target, threshold, rng, effort.starts, effort.maxfev,
                deadline, keep=effort.keep_solutions,
            )
            if not solutions:
                continue
            n = template.num_params
            orders = [list(range(n)), list(range(n - 1, -1, -1))]
            while len(orders) < effort.sparsify_orders:
                orders.append(list(rng.permutation(n)))
            orders = orders[: effort.sparsify_orders]
            candidates = []
            for params in solutions:
                for order in orders:
                    if time.monotonic() > deadline:
                        break
                    sparse = _sparsify(template, target, params, threshold, deadline, order)
                    candidates.append(_rebuild(template, sparse, gate_set, rng))
                    candidates.append(snap_circuit(template.circuit(sparse)))
                candidates.append(template.circuit(params))
            for candidate in candidates:
                d = hs_distance(target, circuit_unitary(candidate))
                if d > epsilon + 1e-9:
                    continue
                if best is None or len(candidate.gates) < len(best[0].gates):
                    best = (candidate, d)
            if best is not None and not exhaustive:
                return best
        if best is not None:
            return best
    return None
