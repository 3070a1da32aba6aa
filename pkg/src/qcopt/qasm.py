"""OpenQASM 2.0 subset: one quantum register, gate statements, exact angles.

Supported angle expressions are signed rational multiples of pi
(``pi/2``, ``-3*pi/4``, ``2*pi``) and plain numeric literals in radians.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .circuit import Angle, Circuit, Gate
from .gateset import GateSetDef, validate_gate


class QasmError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        if line:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<string>"[^"]*")
  | (?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[a-zA-Z_][a-zA-Z0-9_]*)
  | (?P<sym>->|[\[\](),;*/+-])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        pos = 0
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if m is None:
                raise QasmError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
            pos = m.end()
            kind = m.lastgroup
            if kind in ("ws", "comment"):
                continue
            tokens.append((kind, m.group(), lineno, m.start() + 1))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise QasmError("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, value=None, kind=None):
        tok = self.next()
        if value is not None and tok[1] != value:
            raise QasmError(f"expected {value!r}, found {tok[1]!r}", tok[2], tok[3])
        if kind is not None and tok[0] != kind:
            raise QasmError(f"expected {kind}, found {tok[1]!r}", tok[2], tok[3])
        return tok

    def accept(self, value):
        tok = self.peek()
        if tok is not None and tok[1] == value:
            self.i += 1
            return True
        return False


def _parse_angle(p: _Parser) -> Angle:
    sign = 1
    if p.accept("-"):
        sign = -1
    elif p.accept("+"):
        pass
    tok = p.next()
    kind, value, line, col = tok
    if kind == "ident" and value == "pi":
        num = sign
        den = 1
        if p.accept("/"):
            den = int(p.expect(kind="number")[1])
        return Angle.exact(num, den)
    if kind == "number":
        if p.accept("*"):
            p.expect("pi")
            num_frac = Fraction(value) * sign
            if p.accept("/"):
                num_frac /= int(p.expect(kind="number")[1])
            return Angle.from_fraction(num_frac)
        if re.fullmatch(r"\d+", value) and int(value) == 0:
            return Angle.exact(0)
        return Angle.of(sign * float(value))
    raise QasmError(f"expected an angle, found {value!r}", line, col)


def parse_qasm(text: str, gate_set: GateSetDef) -> Circuit:
    p = _Parser(_tokenize(text))
    p.expect("OPENQASM")
    p.expect(kind="number")
    p.expect(";")
    reg_name = None
    num_qubits = 0
    gates: list[Gate] = []
    while p.peek() is not None:
        tok = p.next()
        kind, value, line, col = tok
        if value == "include":
            p.expect(kind="string")
            p.expect(";")
            continue
        if value == "qreg":
            if reg_name is not None:
                raise QasmError("only one quantum register is supported", line, col)
            reg_name = p.expect(kind="ident")[1]
            p.expect("[")
            num_qubits = int(p.expect(kind="number")[1])
            p.expect("]")
            p.expect(";")
            continue
        if kind != "ident":
            raise QasmError(f"expected a statement, found {value!r}", line, col)
        if reg_name is None:
            raise QasmError("gate statement before qreg declaration", line, col)
        name = value
        spec = None
        try:
            spec = gate_set.spec(name)
        except Exception:
            raise QasmError(
                f"gate {name!r} is not in gate set {gate_set.name!r}", line, col
            ) from None
        params: list[Angle] = []
        if p.accept("("):
            while True:
                params.append(_parse_angle(p))
                if not p.accept(","):
                    break
            p.expect(")")
        if len(params) != spec.num_params:
            raise QasmError(
                f"{name} expects {spec.num_params} parameter(s), got {len(params)}",
                line,
                col,
            )
        qubits: list[int] = []
        while True:
            rtok = p.expect(kind="ident")
            if rtok[1] != reg_name:
                raise QasmError(f"unknown register {rtok[1]!r}", rtok[2], rtok[3])
            p.expect("[")
            idx = int(p.expect(kind="number")[1])
            p.expect("]")
            if not 0 <= idx < num_qubits:
                raise QasmError(
                    f"qubit index {idx} out of range for qreg[{num_qubits}]",
                    rtok[2],
                    rtok[3],
                )
            qubits.append(idx)
            if not p.accept(","):
                break
        p.expect(";")
        if len(qubits) != spec.arity:
            raise QasmError(
                f"{name} expects {spec.arity} qubit(s), got {len(qubits)}", line, col
            )
        if len(set(qubits)) != len(qubits):
            raise QasmError(f"{name} applied to duplicate qubits", line, col)
        gates.append(Gate(name, tuple(qubits), tuple(params)))
    if reg_name is None:
        raise QasmError("missing qreg declaration")
    return Circuit(num_qubits, tuple(gates))


def format_angle(angle: Angle) -> str:
    if angle.turns is not None:
        p, q = angle.turns.numerator, angle.turns.denominator
        if p == 0:
            return "0"
        coeff = "pi" if p == 1 else f"{p}*pi"
        return coeff if q == 1 else f"{coeff}/{q}"
    return repr(angle.raw)


def emit_qasm(circuit: Circuit, gate_set: GateSetDef) -> str:
    lines = ['OPENQASM 2.0;', 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    for g in circuit.gates:
        validate_gate(g, gate_set)
        params = ""
        if g.params:
            params = "(" + ",".join(format_angle(a) for a in g.params) + ")"
        operands = ",".join(f"q[{q}]" for q in g.qubits)
        lines.append(f"{g.name}{params} {operands};")
    return "\n".join(lines) + "\n"


def load_qasm_file(path, gate_set: GateSetDef) -> Circuit:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_qasm(fh.read(), gate_set)
