"""Resynthesis: replace a convex subcircuit by a cheaper epsilon-close one.

The subcircuit's unitary is computed and handed to a synthesizer: the
template fitter for parameterized gate sets, exact enumeration for finite
ones, or an external plugin process. Every returned circuit, builtin or not,
is re-simulated and its distance checked before acceptance, and results that
do not improve the objective (or tie it with fewer gates) are discarded.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..circuit import (
    Circuit,
    QubitLimitError,
    Subcircuit,
    build_dag,
    extract_subcircuit_greedy,
    replace_subcircuit,
)
from ..gateset import GateSetDef
from ..unitary import circuit_unitary, hs_distance
from .exact import exact_search_synthesize
from .oneq import minimal_1q_circuit
from .plugin import (
    PluginContractError,
    PluginError,
    PluginProcessError,
    PluginProtocolError,
    plugin_resynthesize,
)
from .templates import FULL_EFFORT, SEARCH_EFFORT, SynthesisEffort, template_fit_synthesize

log = logging.getLogger(__name__)

SYNTHESIS_QUBIT_CAP = 4


@dataclass(frozen=True)
class SynthesisRequest:
    target: np.ndarray
    gate_set: GateSetDef
    epsilon: float
    objective: str
    budget_ms: float


@dataclass(frozen=True)
class SynthesisResult:
    circuit: Circuit
    achieved_distance: float
    synthesizer: str  # "exact-search" | "template-fit" | "plugin"


def _improves(candidate: Circuit, baseline: Circuit, cost) -> bool:
    c_new, c_old = cost(candidate), cost(baseline)
    if c_new < c_old:
        return True
    return c_new == c_old and len(candidate.gates) < len(baseline.gates)


def synthesize(
    req: SynthesisRequest, cost, rng, plugin=None, effort: SynthesisEffort = FULL_EFFORT
) -> Optional[SynthesisResult]:
    """Route a request to the right synthesizer and re-verify its output."""
    dim = req.target.shape[0]
    num_qubits = int(math.log2(dim))
    if plugin is not None:
        found = plugin_resynthesize(
            req.target, req.gate_set, req.epsilon, req.objective, plugin, req.budget_ms
        )
        tag = "plugin"
    elif hs_distance(np.eye(dim, dtype=np.complex128), req.target) <= req.epsilon + 1e-9:
        found = (Circuit(num_qubits), 0.0)
        tag = "exact-search"
    elif req.gate_set.parameterized_single_qubit:
        if num_qubits == 1:
            circuit = minimal_1q_circuit(req.target, req.gate_set, req.epsilon, rng)
            found = None if circuit is None else (circuit, None)
        else:
            found = template_fit_synthesize(
                req.target, req.gate_set, req.epsilon, req.budget_ms, rng, effort=effort
            )
        tag = "template-fit"
    else:
        found = exact_search_synthesize(
            req.target, req.gate_set, req.epsilon, req.budget_ms, cost
        )
        tag = "exact-search"
    if found is None:
        return None
    circuit, _ = found
    # Never trust a synthesizer, including our own: re-simulate and check.
    distance = hs_distance(circuit_unitary(circuit), req.target)
    if distance > req.epsilon + 1e-9:
        if tag == "plugin":
            raise PluginContractError(
                f"plugin circuit re-verified at distance {distance:.3e}"
            )
        log.warning("synthesizer %s violated epsilon (%.3e); result dropped", tag, distance)
        return None
    return SynthesisResult(circuit, distance, tag)


def resynthesize(
    sub: Subcircuit,
    gate_set: GateSetDef,
    epsilon: float,
    cost,
    budget_ms,
    rng,
    plugin=None,
    effort: SynthesisEffort = FULL_EFFORT,
) -> Optional[SynthesisResult]:
    """Synthesize a cheaper implementation of a subcircuit's unitary.

    Returns None on timeout or when nothing beats the subcircuit itself.
    """
    if sub.num_qubits > SYNTHESIS_QUBIT_CAP:
        raise QubitLimitError(
            f"subcircuit touches {sub.num_qubits} qubits, synthesis cap is "
            f"{SYNTHESIS_QUBIT_CAP}"
        )
    local = sub.to_circuit()
    target = circuit_unitary(local)
    req = SynthesisRequest(target, gate_set, epsilon, getattr(cost, "id", "cost"), budget_ms)
    result = synthesize(req, cost, rng, plugin=plugin, effort=effort)
    if result is None or not _improves(result.circuit, local, cost):
        return None
    return result


def resynthesis_transformation(
    gate_set: GateSetDef, cost, config, plugin=None, effort: SynthesisEffort = SEARCH_EFFORT
):
    """Search move: grow a random convex subcircuit and try to resynthesize
    it; plugin failures are logged and treated as no-result. The search
    revisits the same small windows constantly, so synthesis outcomes are
    memoized per transformation instance on the window's rounded unitary.
    """
    from ..search import Transformation

    epsilon = (
        config.resynth_epsilon if config.resynth_epsilon is not None else config.epsilon_f
    )
    max_qubits = min(config.max_subcircuit_qubits, SYNTHESIS_QUBIT_CAP)
    cache: dict[bytes, Optional[Circuit]] = {}

    def action(circuit: Circuit, rng, _context=None) -> Optional[Circuit]:
        if not circuit.gates:
            return None
        dag = build_dag(circuit)
        seed = dag.order[int(rng.integers(len(dag.order)))]
        if len(dag.gate(seed).qubits) > max_qubits:
            return None
        sub = extract_subcircuit_greedy(dag, seed, max_qubits, rng)
        local = sub.to_circuit()
        # Bit-exact key: a hit means the very same window unitary, so the
        # cached replacement's verified distance carries over unchanged.
        key = circuit_unitary(local).tobytes() + bytes([local.num_qubits])
        if key in cache:
            replacement = cache[key]
            if replacement is None or not _improves(replacement, local, cost):
                return None
            return replace_subcircuit(circuit, sub, replacement)
        try:
            result = resynthesize(
                sub, gate_set, epsilon, cost, config.resynth_budget_ms, rng,
                plugin=plugin, effort=effort,
            )
        except PluginError as exc:
            log.warning("plugin resynthesis failed: %s", exc)
            return None
        if len(cache) < 4096:
            cache[key] = None if result is None else result.circuit
        if result is None:
            return None
        return replace_subcircuit(circuit, sub, result.circuit)

    name = "resynthesis" if plugin is None else "resynthesis-plugin"
    return Transformation(epsilon=epsilon, kind="resynthesis", action=action, name=name)
