"""Circuit intermediate representation.

Contains:
    - Angle: rotation angle, kept as an exact rational multiple of pi when possible
    - Gate: named operation on an ordered tuple of qubits
    - Circuit: immutable gate sequence over n qubits
    - CircuitDag: qubit-wire dependency DAG with stable node ids
    - Subcircuit: convex node subset with a local qubit boundary
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional

TWO_PI = 2.0 * math.pi


class CircuitError(Exception):
    pass


class QubitLimitError(CircuitError):
    pass


class StaleSubcircuitError(CircuitError):
    pass


@dataclass(frozen=True)
class Angle:
    """An angle in radians.

    ``turns`` is the coefficient of pi (so ``turns=Fraction(1,2)`` means pi/2),
    normalized to [0, 2) with positive denominator, or None for a raw float
    angle. ``raw`` always holds the radian value, normalized to [0, 2*pi).
    Normalizing mod 2*pi changes Rz-style matrices only by a global phase,
    which every equivalence check here ignores.
    """

    turns: Optional[Fraction]
    raw: float

    @staticmethod
    def exact(numerator: int, denominator: int = 1) -> "Angle":
        frac = Fraction(numerator, denominator) % 2
        return Angle(frac, float(frac) * math.pi)

    @staticmethod
    def from_fraction(frac: Fraction) -> "Angle":
        frac = frac % 2
        return Angle(frac, float(frac) * math.pi)

    @staticmethod
    def of(radians: float) -> "Angle":
        return Angle(None, radians % TWO_PI)

    @property
    def is_exact(self) -> bool:
        return self.turns is not None

    @property
    def radians(self) -> float:
        return self.raw

    def __add__(self, other: "Angle") -> "Angle":
        if self.turns is not None and other.turns is not None:
            return Angle.from_fraction(self.turns + other.turns)
        return Angle.of(self.raw + other.raw)

    def __sub__(self, other: "Angle") -> "Angle":
        if self.turns is not None and other.turns is not None:
            return Angle.from_fraction(self.turns - other.turns)
        return Angle.of(self.raw - other.raw)

    def close_to(self, other: "Angle", tol: float = 1e-12) -> bool:
        if self.turns is not None and other.turns is not None:
            return self.turns == other.turns
        diff = abs(self.raw - other.raw) % TWO_PI
        return min(diff, TWO_PI - diff) <= tol

    def __repr__(self) -> str:
        if self.turns is not None:
            return f"Angle({self.turns}*pi)"
        return f"Angle({self.raw!r})"


ZERO_ANGLE = Angle.exact(0)


@dataclass(frozen=True)
class Gate:
    """A named gate applied to an ordered tuple of distinct qubits."""

    name: str
    qubits: tuple[int, ...]
    params: tuple[Angle, ...] = ()

    def __post_init__(self):
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{self.name}: duplicate qubit operands {self.qubits}")

    @property
    def arity(self) -> int:
        return len(self.qubits)


def gate(name: str, *qubits: int, params: Iterable[Angle] = ()) -> Gate:
    return Gate(name, tuple(qubits), tuple(params))


@dataclass(frozen=True)
class Circuit:
    """An immutable, ordered gate sequence over ``num_qubits`` qubits.

    The empty sequence is the identity circuit.
    """

    num_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.num_qubits < 0:
            raise CircuitError("negative qubit count")
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.num_qubits:
                    raise CircuitError(
                        f"{g.name} touches qubit {q}, circuit has {self.num_qubits}"
                    )

    def __len__(self) -> int:
        return len(self.gates)

    def extended(self, more: Iterable[Gate]) -> "Circuit":
        return Circuit(self.num_qubits, self.gates + tuple(more))


def count_gates(circuit: Circuit, predicate: Callable[[Gate], bool]) -> int:
    return sum(1 for g in circuit.gates if predicate(g))


def is_two_qubit(g: Gate) -> bool:
    return len(g.qubits) == 2


def named(*names: str) -> Callable[[Gate], bool]:
    wanted = frozenset(names)
    return lambda g: g.name in wanted


class CircuitDag:
    """Wire-dependency DAG over a circuit's gates.

    Nodes carry stable integer ids. Per qubit, the nodes touching that qubit
    form a single directed path (the wire); edges are the consecutive pairs on
    each wire. ``order`` is a topological linearization that preserves the
    original per-qubit order, so rebuilding a Circuit from it reproduces the
    source semantics.
    """

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.num_qubits = circuit.num_qubits
        self.nodes: dict[int, Gate] = {}
        self.order: list[int] = []
        self._wires: dict[int, list[int]] = {q: [] for q in range(circuit.num_qubits)}
        self._next_id = 0
        for g in circuit.gates:
            nid = self._next_id
            self._next_id += 1
            self.nodes[nid] = g
            self.order.append(nid)
            for q in g.qubits:
                self._wires[q].append(nid)
        self._reindex_wires()

    def _reindex_wires(self) -> None:
        self._wire_next: dict[tuple[int, int], Optional[int]] = {}
        self._wire_prev: dict[tuple[int, int], Optional[int]] = {}
        for q, wire in self._wires.items():
            for i, nid in enumerate(wire):
                self._wire_prev[(nid, q)] = wire[i - 1] if i > 0 else None
                self._wire_next[(nid, q)] = wire[i + 1] if i + 1 < len(wire) else None

    def gate(self, nid: int) -> Gate:
        return self.nodes[nid]

    def next_on_wire(self, nid: int, qubit: int) -> Optional[int]:
        return self._wire_next[(nid, qubit)]

    def prev_on_wire(self, nid: int, qubit: int) -> Optional[int]:
        return self._wire_prev[(nid, qubit)]

    def successors(self, nid: int) -> list[int]:
        out = []
        for q in self.nodes[nid].qubits:
            nxt = self._wire_next[(nid, q)]
            if nxt is not None:
                out.append(nxt)
        return out

    def predecessors(self, nid: int) -> list[int]:
        out = []
        for q in self.nodes[nid].qubits:
            prv = self._wire_prev[(nid, q)]
            if prv is not None:
                out.append(prv)
        return out

    def edges(self) -> list[tuple[int, int]]:
        seen = []
        for q, wire in self._wires.items():
            for a, b in zip(wire, wire[1:]):
                seen.append((a, b))
        return seen

    def qubits_of(self, nids: Iterable[int]) -> set[int]:
        qs: set[int] = set()
        for nid in nids:
            qs.update(self.nodes[nid].qubits)
        return qs

    def to_circuit(self) -> Circuit:
        return Circuit(self.num_qubits, tuple(self.nodes[nid] for nid in self.order))

    def replace_nodes(self, members: frozenset[int], new_gates: Iterable[Gate]) -> tuple["CircuitDag", list[int]]:
        """Splice ``new_gates`` in place of ``members`` (a convex node set).

        Surviving nodes keep their ids; replacement gates get fresh ids.
        Returns the new DAG and the fresh ids in emission order.
        """
        new_gates = list(new_gates)
        sequence = _splice_order(self, members, len(new_gates))
        dag = object.__new__(CircuitDag)
        dag.num_qubits = self.num_qubits
        dag.nodes = {}
        dag.order = []
        dag._wires = {q: [] for q in range(self.num_qubits)}
        next_id = self._next_id
        fresh: list[int] = []
        for item in sequence:
            if isinstance(item, int):
                nid, g = item, self.nodes[item]
            else:
                nid, g = next_id, new_gates[item[1]]
                next_id += 1
                fresh.append(nid)
            dag.nodes[nid] = g
            dag.order.append(nid)
            for q in g.qubits:
                dag._wires[q].append(nid)
        dag._next_id = next_id
        dag._reindex_wires()
        dag.circuit = Circuit(self.num_qubits, tuple(dag.nodes[n] for n in dag.order))
        return dag, fresh


def _splice_order(dag: CircuitDag, members: frozenset[int], n_new: int):
    """Topological order of external nodes with ``members`` contracted.

    Emits node ids plus ("new", i) placeholders for the replacement gates at
    the contracted position. Deterministic: ready nodes are taken in original
    linearization order; the contracted block sits at its first member's slot.
    Contracting a convex set of a DAG cannot introduce a cycle.
    """
    pos = {nid: i for i, nid in enumerate(dag.order)}
    super_pos = min((pos[m] for m in members), default=0)
    SUPER = -1

    def key_of(nid: int) -> int:
        return SUPER if nid in members else nid

    indeg: dict[int, int] = {}
    adj: dict[int, list[int]] = {}
    for a, b in dag.edges():
        ka, kb = key_of(a), key_of(b)
        if ka == kb:
            continue
        adj.setdefault(ka, []).append(kb)
        indeg[kb] = indeg.get(kb, 0) + 1

    keys = {key_of(nid) for nid in dag.order}
    if members:
        keys.add(SUPER)
    heap = [
        (super_pos if k == SUPER else pos[k], k)
        for k in keys
        if indeg.get(k, 0) == 0
    ]
    heapq.heapify(heap)
    out: list = []
    emitted = 0
    while heap:
        _, k = heapq.heappop(heap)
        emitted += 1
        if k == SUPER:
            out.extend(("new", i) for i in range(n_new))
        else:
            out.append(k)
        for kb in adj.get(k, ()):
            indeg[kb] -= 1
            if indeg[kb] == 0:
                heapq.heappush(heap, (super_pos if kb == SUPER else pos[kb], kb))
    if emitted != len(keys):
        raise CircuitError("replacement would create a dependency cycle")
    return out


def build_dag(circuit: Circuit) -> CircuitDag:
    return CircuitDag(circuit)


def is_convex(dag: CircuitDag, node_ids: Iterable[int]) -> bool:
    """True iff every DAG path between members stays inside the set."""
    members = set(node_ids)
    # A violating path leaves the set and re-enters it, so walk forward from
    # each member through outside nodes only and look for a member.
    outside_starts = {
        s for m in members for s in dag.successors(m) if s not in members
    }
    seen: set[int] = set()
    stack = list(outside_starts)
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        seen.add(nid)
        for s in dag.successors(nid):
            if s in members:
                return False
            stack.append(s)
    return True


@dataclass(frozen=True)
class Subcircuit:
    """A convex subset of a parent DAG with a dense local qubit numbering.

    ``local_qubits[i]`` is the parent qubit mapped to local index i; local
    indices follow first-touch order over the members in linearization order.
    """

    parent: CircuitDag
    node_ids: frozenset[int]
    local_qubits: tuple[int, ...]

    @property
    def num_qubits(self) -> int:
        return len(self.local_qubits)

    def boundary(self) -> dict[int, int]:
        return {q: i for i, q in enumerate(self.local_qubits)}

    def to_circuit(self) -> Circuit:
        local = self.boundary()
        gates = []
        for nid in self.parent.order:
            if nid in self.node_ids:
                g = self.parent.gate(nid)
                gates.append(Gate(g.name, tuple(local[q] for q in g.qubits), g.params))
        return Circuit(len(self.local_qubits), tuple(gates))


def make_subcircuit(dag: CircuitDag, node_ids: Iterable[int]) -> Subcircuit:
    members = frozenset(node_ids)
    order = [nid for nid in dag.order if nid in members]
    locals_: list[int] = []
    for nid in order:
        for q in dag.gate(nid).qubits:
            if q not in locals_:
                locals_.append(q)
    return Subcircuit(dag, members, tuple(locals_))


def extract_subcircuit_greedy(
    dag: CircuitDag, seed: int, max_qubits: int, rng
) -> Subcircuit:
    """Grow a convex subcircuit around ``seed``, both directions, until no
    wire-adjacent node can be added without breaking the qubit limit or
    convexity. Candidates are tried in a randomized order drawn from ``rng``
    with node-id order as the tie-free base ordering.
    """
    seed_qubits = set(dag.gate(seed).qubits)
    if len(seed_qubits) > max_qubits:
        raise QubitLimitError(
            f"seed gate touches {len(seed_qubits)} qubits, limit is {max_qubits}"
        )
    members: set[int] = {seed}
    qubits = set(seed_qubits)
    while True:
        frontier = set()
        for m in members:
            frontier.update(dag.successors(m))
            frontier.update(dag.predecessors(m))
        frontier -= members
        candidates = sorted(frontier)
        if candidates:
            perm = rng.permutation(len(candidates))
            candidates = [candidates[i] for i in perm]
        added = False
        for cand in candidates:
            new_qubits = qubits | set(dag.gate(cand).qubits)
            if len(new_qubits) > max_qubits:
                continue
            if not is_convex(dag, members | {cand}):
                continue
            members.add(cand)
            qubits = new_qubits
            added = True
            break
        if not added:
            return make_subcircuit(dag, members)


def replace_subcircuit(circuit: Circuit, sub: Subcircuit, replacement: Circuit) -> Circuit:
    """Splice ``replacement`` (over the subcircuit's local qubits) into
    ``circuit`` in place of the subcircuit's nodes.
    """
    if sub.parent.circuit is not circuit:
        raise StaleSubcircuitError(
            "subcircuit was extracted from a different circuit revision"
        )
    if replacement.num_qubits != sub.num_qubits:
        raise CircuitError(
            f"replacement has {replacement.num_qubits} qubits, "
            f"subcircuit has {sub.num_qubits}"
        )
    to_parent = dict(enumerate(sub.local_qubits))
    mapped = [
        Gate(g.name, tuple(to_parent[q] for q in g.qubits), g.params)
        for g in replacement.gates
    ]
    dag, _ = sub.parent.replace_nodes(sub.node_ids, mapped)
    return dag.circuit
