"""Rewrite rules with symbolic angles.

A rule is a pair of gate-template sequences over local qubit variables
q0..qk-1. Angle slots hold terms from a deliberately small grammar:
a sum of angle variables plus an optional constant (``t0``, ``pi/2``,
``t0+t1``, ``t0+pi``). Matching is anchored and wire-adjacency based:
pattern wire edges must map onto DAG wire edges, so commutation is never
implicit; it exists only as explicit rules.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

from .circuit import (
    Angle,
    Circuit,
    CircuitDag,
    CircuitError,
    Gate,
    ZERO_ANGLE,
    build_dag,
    is_convex,
)
from .gateset import GateSetDef
from .unitary import circuit_unitary, hs_distance

RULE_TOLERANCE = 1e-9


class RuleError(CircuitError):
    pass


@dataclass(frozen=True)
class AngleTerm:
    """Sum of angle variables plus a constant."""

    vars: tuple[int, ...] = ()
    const: Angle = ZERO_ANGLE

    def evaluate(self, binding: dict[int, Angle]) -> Angle:
        total = self.const
        for v in self.vars:
            total = total + binding[v]
        return total


_VAR_RE = re.compile(r"t(\d+)$")


def parse_term(text) -> AngleTerm:
    """Parse a term like ``t0``, ``pi/2``, ``t0+t1`` or ``t0+pi``."""
    if isinstance(text, (int, float)):
        return AngleTerm((), Angle.of(float(text)) if text else ZERO_ANGLE)
    variables: list[int] = []
    const = ZERO_ANGLE
    for part in str(text).replace(" ", "").split("+"):
        m = _VAR_RE.fullmatch(part)
        if m:
            variables.append(int(m.group(1)))
            continue
        const = const + _parse_const(part)
    return AngleTerm(tuple(variables), const)


def _parse_const(part: str) -> Angle:
    sign = 1
    if part.startswith("-"):
        sign, part = -1, part[1:]
    m = re.fullmatch(r"(?:(\d+)\*)?pi(?:/(\d+))?", part)
    if m:
        num = int(m.group(1) or 1) * sign
        den = int(m.group(2) or 1)
        return Angle.exact(num, den)
    try:
        value = float(part)
    except ValueError:
        raise RuleError(f"cannot parse angle term part {part!r}") from None
    return Angle.exact(0) if value == 0 else Angle.of(sign * value)


@dataclass(frozen=True)
class GateTemplate:
    name: str
    qubits: tuple[int, ...]
    params: tuple[AngleTerm, ...] = ()


@dataclass(frozen=True)
class RulePattern:
    gates: tuple[GateTemplate, ...]

    @property
    def num_qubits(self) -> int:
        return 1 + max((q for g in self.gates for q in g.qubits), default=-1)

    def variables(self) -> set[int]:
        return {v for g in self.gates for term in g.params for v in term.vars}

    def instantiate(self, binding: dict[int, Angle], num_qubits: Optional[int] = None) -> Circuit:
        gates = tuple(
            Gate(g.name, g.qubits, tuple(t.evaluate(binding) for t in g.params))
            for g in self.gates
        )
        return Circuit(num_qubits or self.num_qubits, gates)


@dataclass(frozen=True)
class RewriteRule:
    name: str
    lhs: RulePattern
    rhs: RulePattern

    def __post_init__(self):
        if len(self.rhs.gates) > len(self.lhs.gates):
            raise RuleError(f"rule {self.name!r} increases gate count")
        if not self.rhs.variables() <= self.lhs.variables():
            raise RuleError(f"rule {self.name!r} uses unbound angle variables on rhs")
        rhs_qubits = {q for g in self.rhs.gates for q in g.qubits}
        lhs_qubits = {q for g in self.lhs.gates for q in g.qubits}
        if not rhs_qubits <= lhs_qubits:
            raise RuleError(f"rule {self.name!r} uses unbound qubits on rhs")
        if not _connected(self.lhs):
            raise RuleError(f"rule {self.name!r} has a disconnected pattern")


def _connected(pattern: RulePattern) -> bool:
    gates = pattern.gates
    if len(gates) <= 1:
        return True
    remaining = set(range(1, len(gates)))
    qubits = set(gates[0].qubits)
    grew = True
    while grew and remaining:
        grew = False
        for i in sorted(remaining):
            if qubits & set(gates[i].qubits):
                qubits |= set(gates[i].qubits)
                remaining.discard(i)
                grew = True
    return not remaining


def verify_rule(rule: RewriteRule, rng, trials: int = 100, tol: float = RULE_TOLERANCE) -> float:
    """Check lhs/rhs unitary agreement on random angle instantiations.

    Returns the worst observed distance; raises RuleError above ``tol``.
    """
    nq = max(rule.lhs.num_qubits, rule.rhs.num_qubits, 1)
    variables = sorted(rule.lhs.variables())
    worst = 0.0
    for _ in range(trials):
        binding = {v: Angle.of(float(rng.uniform(0.0, 6.283185307179586))) for v in variables}
        lhs_u = circuit_unitary(rule.lhs.instantiate(binding, nq))
        rhs_u = circuit_unitary(rule.rhs.instantiate(binding, nq))
        worst = max(worst, hs_distance(lhs_u, rhs_u))
        if worst > tol:
            raise RuleError(f"rule {rule.name!r} failed verification: distance {worst}")
    return worst


@dataclass(frozen=True)
class Match:
    """A located instance of a rule's lhs.

    ``nodes[i]`` is the DAG node bound to pattern gate i; qubit and angle
    bindings map pattern variables onto the concrete circuit.
    """

    nodes: tuple[int, ...]
    qubit_binding: dict
    angle_binding: dict


def _solve_term(term: AngleTerm, actual: Angle, binding: dict[int, Angle]) -> bool:
    unbound = [v for v in term.vars if v not in binding]
    if not unbound:
        return term.evaluate(binding).close_to(actual)
    if len(unbound) > 1:
        return False
    fixed = AngleTerm(tuple(v for v in term.vars if v in binding), term.const)
    binding[unbound[0]] = actual - fixed.evaluate(binding)
    return True


def find_match(rule: RewriteRule, dag: CircuitDag, anchor: int) -> Optional[Match]:
    """Match the rule's lhs with pattern gate 0 bound to ``anchor``.

    For every pattern gate after the first, wire adjacency pins a unique
    candidate node, so matching is linear in the pattern size.
    """
    pattern = rule.lhs.gates
    nodes: list[int] = []
    qubit_binding: dict[int, int] = {}
    bound_qubits: set[int] = set()
    angle_binding: dict[int, Angle] = {}
    last_on_var: dict[int, int] = {}

    def bind(i: int, nid: int) -> bool:
        tmpl = pattern[i]
        g = dag.gate(nid)
        if g.name != tmpl.name or len(g.qubits) != len(tmpl.qubits):
            return False
        for pv, cq in zip(tmpl.qubits, g.qubits):
            if pv in qubit_binding:
                if qubit_binding[pv] != cq:
                    return False
            elif cq in bound_qubits:
                return False
        for pv, cq in zip(tmpl.qubits, g.qubits):
            # Wire adjacency: the previous pattern gate on pv must be the
            # previous circuit gate on the wire cq.
            if pv in last_on_var:
                if dag.next_on_wire(nodes[last_on_var[pv]], cq) != nid:
                    return False
        for term, actual in zip(tmpl.params, g.params):
            if not _solve_term(term, actual, angle_binding):
                return False
        for pv, cq in zip(tmpl.qubits, g.qubits):
            if pv not in qubit_binding:
                qubit_binding[pv] = cq
                bound_qubits.add(cq)
            last_on_var[pv] = i
        nodes.append(nid)
        return True

    if not bind(0, anchor):
        return None
    for i in range(1, len(pattern)):
        candidate = None
        for pv in pattern[i].qubits:
            if pv not in last_on_var:
                continue
            j = last_on_var[pv]
            nxt = dag.next_on_wire(nodes[j], qubit_binding[pv])
            if nxt is None or (candidate is not None and nxt != candidate):
                return None
            candidate = nxt
        if candidate is None or not bind(i, candidate):
            return None
    if len(set(nodes)) != len(nodes):
        return None
    if not is_convex(dag, nodes):
        return None
    return Match(tuple(nodes), dict(qubit_binding), dict(angle_binding))


def _instantiate_rhs(rule: RewriteRule, m: Match) -> list[Gate]:
    gates = []
    for tmpl in rule.rhs.gates:
        qubits = tuple(m.qubit_binding[pv] for pv in tmpl.qubits)
        params = tuple(t.evaluate(m.angle_binding) for t in tmpl.params)
        gates.append(Gate(tmpl.name, qubits, params))
    return gates


def apply_rule_pass(circuit: Circuit, rule: RewriteRule, start: int) -> tuple[Circuit, int]:
    """One forward pass from ``start`` (wrapping around), greedily replacing
    every disjoint match. Returns the new circuit and the replacement count.
    """
    dag = build_dag(circuit)
    if not dag.order:
        return circuit, 0
    if start not in dag.nodes:
        raise CircuitError(f"start node {start} is not in the circuit")
    offset = dag.order.index(start)
    scan = dag.order[offset:] + dag.order[:offset]
    applied = 0
    for nid in scan:
        if nid not in dag.nodes:
            continue  # consumed by an earlier replacement in this pass
        m = find_match(rule, dag, nid)
        if m is None:
            continue
        dag, _ = dag.replace_nodes(frozenset(m.nodes), _instantiate_rhs(rule, m))
        applied += 1
    return dag.circuit, applied


def as_transformation(rule: RewriteRule):
    """Wrap a rule as a zero-epsilon search transformation: one rule pass
    from a uniformly random start node, identity when nothing matches.
    """
    from .search import Transformation

    def action(circuit: Circuit, rng, _context=None) -> Optional[Circuit]:
        if not circuit.gates:
            return None
        start = int(rng.integers(len(circuit.gates)))
        out, applied = apply_rule_pass(circuit, rule, start)
        return out if applied else None

    return Transformation(epsilon=0.0, kind="rewrite", action=action, name=rule.name)


def _rule(name: str, lhs, rhs) -> RewriteRule:
    def build(side):
        gates = []
        for entry in side:
            gname, qubits = entry[0], tuple(entry[1])
            terms = tuple(parse_term(t) for t in (entry[2] if len(entry) > 2 else ()))
            gates.append(GateTemplate(gname, qubits, terms))
        return RulePattern(tuple(gates))

    return RewriteRule(name, build(lhs), build(rhs))


def _cx_rules() -> list[RewriteRule]:
    return [
        _rule("cx-cancel", [("cx", (0, 1)), ("cx", (0, 1))], []),
        _rule("cx-commute-target", [("cx", (0, 1)), ("cx", (2, 1))], [("cx", (2, 1)), ("cx", (0, 1))]),
        _rule("cx-commute-control", [("cx", (0, 1)), ("cx", (0, 2))], [("cx", (0, 2)), ("cx", (0, 1))]),
        _rule("x-commute-cx-target", [("x", (1,)), ("cx", (0, 1))], [("cx", (0, 1)), ("x", (1,))]),
    ]


def _diag_commute(name: str, params=("t0",)) -> list[RewriteRule]:
    p = (params,) if params else ()
    entry = (name, (0,), params) if params else (name, (0,))
    after = [("cx", (0, 1)), entry]
    before = [entry, ("cx", (0, 1))]
    return [
        _rule(f"{name}-commute-cx", before, after),
        _rule(f"{name}-commute-cx-back", after, before),
    ]


def _merge_and_zero(name: str) -> list[RewriteRule]:
    return [
        _rule(f"{name}-merge", [(name, (0,), ("t0",)), (name, (0,), ("t1",))], [(name, (0,), ("t0+t1",))]),
        _rule(f"{name}-zero", [(name, (0,), ("0",))], []),
    ]


def _builtin_rule_list(set_name: str) -> list[RewriteRule]:
    if set_name == "nam":
        return (
            _cx_rules()
            + _diag_commute("rz")
            + _merge_and_zero("rz")
            + [
                _rule("h-cancel", [("h", (0,)), ("h", (0,))], []),
                _rule("x-cancel", [("x", (0,)), ("x", (0,))], []),
            ]
        )
    if set_name == "ibm-eagle":
        return (
            _cx_rules()
            + _diag_commute("rz")
            + _merge_and_zero("rz")
            + [
                _rule("x-cancel", [("x", (0,)), ("x", (0,))], []),
                _rule("sx-sx-to-x", [("sx", (0,)), ("sx", (0,))], [("x", (0,))]),
            ]
        )
    if set_name == "ionq":
        rules = []
        for name in ("rx", "ry", "rz"):
            rules += _merge_and_zero(name)
        rules += [
            _rule(
                "rxx-merge",
                [("rxx", (0, 1), ("t0",)), ("rxx", (0, 1), ("t1",))],
                [("rxx", (0, 1), ("t0+t1",))],
            ),
            _rule(
                "rxx-merge-flipped",
                [("rxx", (0, 1), ("t0",)), ("rxx", (1, 0), ("t1",))],
                [("rxx", (0, 1), ("t0+t1",))],
            ),
            _rule("rxx-zero", [("rxx", (0, 1), ("0",))], []),
            _rule(
                "rx-commute-rxx",
                [("rx", (0,), ("t0",)), ("rxx", (0, 1), ("t1",))],
                [("rxx", (0, 1), ("t1",)), ("rx", (0,), ("t0",))],
            ),
            _rule(
                "rxx-commute-shared",
                [("rxx", (0, 1), ("t0",)), ("rxx", (1, 2), ("t1",))],
                [("rxx", (1, 2), ("t1",)), ("rxx", (0, 1), ("t0",))],
            ),
        ]
        return rules
    if set_name == "clifford-t":
        rules = _cx_rules() + [
            _rule("h-cancel", [("h", (0,)), ("h", (0,))], []),
            _rule("x-cancel", [("x", (0,)), ("x", (0,))], []),
            _rule("s-sdg-cancel", [("s", (0,)), ("sdg", (0,))], []),
            _rule("sdg-s-cancel", [("sdg", (0,)), ("s", (0,))], []),
            _rule("t-tdg-cancel", [("t", (0,)), ("tdg", (0,))], []),
            _rule("tdg-t-cancel", [("tdg", (0,)), ("t", (0,))], []),
            _rule("t-t-to-s", [("t", (0,)), ("t", (0,))], [("s", (0,))]),
            _rule("tdg-tdg-to-sdg", [("tdg", (0,)), ("tdg", (0,))], [("sdg", (0,))]),
            _rule("s-s-s-s-cancel", [("s", (0,))] * 4, []),
        ]
        for name in ("t", "tdg", "s", "sdg"):
            rules += _diag_commute(name, params=())
        return rules
    if set_name == "ibmq20":
        return (
            _cx_rules()[:3]  # no x gate in this set
            + _diag_commute("u1")
            + _merge_and_zero("u1")
            + [
                _rule(
                    "u1-into-u3",
                    [("u1", (0,), ("t0",)), ("u3", (0,), ("t1", "t2", "t3"))],
                    [("u3", (0,), ("t1", "t2", "t3+t0"))],
                ),
                _rule(
                    "u3-absorb-u1",
                    [("u3", (0,), ("t1", "t2", "t3")), ("u1", (0,), ("t0",))],
                    [("u3", (0,), ("t1", "t2+t0", "t3"))],
                ),
                _rule(
                    "u1-into-u2",
                    [("u1", (0,), ("t0",)), ("u2", (0,), ("t1", "t2"))],
                    [("u2", (0,), ("t1", "t2+t0"))],
                ),
                _rule(
                    "u2-absorb-u1",
                    [("u2", (0,), ("t1", "t2")), ("u1", (0,), ("t0",))],
                    [("u2", (0,), ("t1+t0", "t2"))],
                ),
            ]
        )
    raise ValueError(f"no built-in rules for gate set {set_name!r}")


@lru_cache(maxsize=None)
def _verified_builtins(set_name: str) -> tuple[RewriteRule, ...]:
    import numpy as np

    rules = _builtin_rule_list(set_name)
    rng = np.random.default_rng(20240901)
    for rule in rules:
        verify_rule(rule, rng, trials=20)
    return tuple(rules)


def builtin_rules(gate_set: GateSetDef) -> list[RewriteRule]:
    """Verified built-in rules for a gate set (see Fig-of-rules style names)."""
    return list(_verified_builtins(gate_set.name))


def rules_by_name(gate_set: GateSetDef) -> dict[str, RewriteRule]:
    return {r.name: r for r in builtin_rules(gate_set)}


def load_rules(path, gate_set: GateSetDef, rng=None, verify: bool = True) -> list[RewriteRule]:
    """Load extra rules from a JSON file and verify them against the set."""
    import numpy as np

    data = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = data["rules"] if isinstance(data, dict) else data
    rules = []
    for entry in entries:
        def side(key):
            gates = []
            for g in entry[key]:
                terms = tuple(parse_term(t) for t in g.get("params", ()))
                gates.append(GateTemplate(g["gate"], tuple(g["qubits"]), terms))
            return RulePattern(tuple(gates))

        rule = RewriteRule(entry["name"], side("lhs"), side("rhs"))
        for pattern in (rule.lhs, rule.rhs):
            for tmpl in pattern.gates:
                spec = gate_set.spec(tmpl.name)
                if len(tmpl.qubits) != spec.arity or len(tmpl.params) != spec.num_params:
                    raise RuleError(
                        f"rule {rule.name!r}: template {tmpl.name} does not fit "
                        f"gate set {gate_set.name!r}"
                    )
        if verify:
            verify_rule(rule, rng if rng is not None else np.random.default_rng(0), trials=100)
        rules.append(rule)
    return rules


def normalize(circuit: Circuit, rules: list[RewriteRule]) -> Circuit:
    """Deterministic gate-count cleanup: run count-reducing rules to a
    fixpoint, interleaving count-neutral passes only when they unlock further
    reduction. Every outer round strictly shrinks the circuit, so this
    terminates.
    """
    reducing = [r for r in rules if len(r.rhs.gates) < len(r.lhs.gates)]
    neutral = [r for r in rules if len(r.rhs.gates) == len(r.lhs.gates)]

    def reduce_fixpoint(c: Circuit) -> Circuit:
        changed = True
        while changed and c.gates:
            changed = False
            for rule in reducing:
                if not c.gates:
                    break
                c2, n = apply_rule_pass(c, rule, build_dag(c).order[0])
                if n:
                    c = c2
                    changed = True
        return c

    current = reduce_fixpoint(circuit)
    improved = True
    while improved and current.gates:
        improved = False
        for rule in neutral:
            shifted, n = apply_rule_pass(current, rule, build_dag(current).order[0])
            if not n:
                continue
            candidate = reduce_fixpoint(shifted)
            if len(candidate.gates) < len(current.gates):
                current = candidate
                improved = True
    return current
