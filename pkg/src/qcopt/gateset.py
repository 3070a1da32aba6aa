"""Target gate sets and the per-gate-class noise model."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .circuit import Circuit, CircuitError, Gate


@dataclass(frozen=True)
class GateSpec:
    name: str
    arity: int
    num_params: int
    tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class GateSetDef:
    name: str
    gates: tuple[GateSpec, ...]

    def __post_init__(self):
        names = [g.name for g in self.gates]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate gate names in set {self.name!r}")

    def spec(self, gate_name: str) -> GateSpec:
        try:
            return self._by_name[gate_name]
        except KeyError:
            raise UnknownGateError(
                f"gate {gate_name!r} is not in gate set {self.name!r}"
            ) from None

    @property
    def _by_name(self) -> dict[str, GateSpec]:
        return {g.name: g for g in self.gates}

    def __contains__(self, gate_name: str) -> bool:
        return any(g.name == gate_name for g in self.gates)

    @property
    def parameterized_single_qubit(self) -> tuple[GateSpec, ...]:
        return tuple(g for g in self.gates if g.arity == 1 and g.num_params > 0)

    @property
    def entanglers(self) -> tuple[GateSpec, ...]:
        return tuple(g for g in self.gates if g.arity == 2)


class UnknownGateError(CircuitError):
    pass


def _g(name, arity, num_params, *tags):
    return GateSpec(name, arity, num_params, frozenset(tags))


_SQ = "single_qubit"
_TQ = "two_qubit"
_CLIFF = "clifford"
_TLIKE = "t_like"

IBMQ20 = GateSetDef(
    "ibmq20",
    (
        _g("u1", 1, 1, _SQ),
        _g("u2", 1, 2, _SQ),
        _g("u3", 1, 3, _SQ),
        _g("cx", 2, 0, _TQ, _CLIFF),
    ),
)

IBM_EAGLE = GateSetDef(
    "ibm-eagle",
    (
        _g("rz", 1, 1, _SQ),
        _g("sx", 1, 0, _SQ, _CLIFF),
        _g("x", 1, 0, _SQ, _CLIFF),
        _g("cx", 2, 0, _TQ, _CLIFF),
    ),
)

IONQ = GateSetDef(
    "ionq",
    (
        _g("rx", 1, 1, _SQ),
        _g("ry", 1, 1, _SQ),
        _g("rz", 1, 1, _SQ),
        _g("rxx", 2, 1, _TQ),
    ),
)

NAM = GateSetDef(
    "nam",
    (
        _g("rz", 1, 1, _SQ),
        _g("h", 1, 0, _SQ, _CLIFF),
        _g("x", 1, 0, _SQ, _CLIFF),
        _g("cx", 2, 0, _TQ, _CLIFF),
    ),
)

CLIFFORD_T = GateSetDef(
    "clifford-t",
    (
        _g("t", 1, 0, _SQ, _TLIKE),
        _g("tdg", 1, 0, _SQ, _TLIKE),
        _g("s", 1, 0, _SQ, _CLIFF),
        _g("sdg", 1, 0, _SQ, _CLIFF),
        _g("h", 1, 0, _SQ, _CLIFF),
        _g("x", 1, 0, _SQ, _CLIFF),
        _g("cx", 2, 0, _TQ, _CLIFF),
    ),
)

GATE_SETS: dict[str, GateSetDef] = {
    gs.name: gs for gs in (IBMQ20, IBM_EAGLE, IONQ, NAM, CLIFFORD_T)
}


def get_gate_set(name: str) -> GateSetDef:
    try:
        return GATE_SETS[name]
    except KeyError:
        raise ValueError(
            f"unknown gate set {name!r}; available: {sorted(GATE_SETS)}"
        ) from None


def validate_gate(g: Gate, gate_set: GateSetDef) -> None:
    spec = gate_set.spec(g.name)
    if len(g.qubits) != spec.arity:
        raise CircuitError(
            f"{g.name} expects {spec.arity} qubits, got {len(g.qubits)}"
        )
    if len(g.params) != spec.num_params:
        raise CircuitError(
            f"{g.name} expects {spec.num_params} params, got {len(g.params)}"
        )


def validate_circuit(circuit: Circuit, gate_set: GateSetDef) -> None:
    for g in circuit.gates:
        validate_gate(g, gate_set)


def classify(g: Gate) -> str:
    return "two_qubit" if len(g.qubits) == 2 else "single_qubit"


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate-class fidelities; anything unlisted is noiseless (1.0).

    Keys may be class names ("two_qubit", "single_qubit") or concrete gate
    names, which take precedence.
    """

    fidelities: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, value in self.fidelities.items():
            if not (isinstance(value, (int, float)) and 0.0 < value <= 1.0):
                raise ValueError(f"fidelity for {key!r} must be in (0, 1], got {value!r}")

    def fidelity(self, g: Gate) -> float:
        if g.name in self.fidelities:
            return float(self.fidelities[g.name])
        return float(self.fidelities.get(classify(g), 1.0))


NOISELESS = NoiseModel({})


def load_noise_model(path) -> NoiseModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed noise model file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"noise model file {path} must hold a JSON object")
    return NoiseModel(dict(data))
