"""External synthesizer plugin protocol.

One newline-delimited JSON request on the plugin's stdin, one JSON response
on its stdout:

    request:  {"version": 1, "epsilon": float, "gate_set": str,
               "objective": str, "unitary": [[[re, im], ...], ...]}
    response: {"ok": true, "circuit": [{"name": str, "qubits": [int],
               "params": [float]}]}
              or {"ok": false, "reason": str}

Responses are never trusted: the returned circuit is validated against the
gate set and re-simulated; a distance above epsilon is a contract violation.
"""
from __future__ import annotations

import json
import shlex
import subprocess
from typing import Optional

import numpy as np

from ..circuit import Angle, Circuit, Gate
from ..gateset import GateSetDef, validate_circuit
from ..unitary import circuit_unitary, hs_distance


class PluginError(Exception):
    pass


class PluginProcessError(PluginError):
    """Plugin failed to launch or exited uncleanly."""


class PluginProtocolError(PluginError):
    """Plugin produced an unparseable or schema-violating response."""


class PluginContractError(PluginError):
    """Plugin returned a circuit outside the requested epsilon."""


def _encode_request(target: np.ndarray, gate_set: GateSetDef, epsilon: float, objective: str) -> str:
    unitary = [[[float(z.real), float(z.imag)] for z in row] for row in target]
    return json.dumps(
        {
            "version": 1,
            "epsilon": epsilon,
            "gate_set": gate_set.name,
            "objective": objective,
            "unitary": unitary,
        }
    )


def _decode_circuit(payload, num_qubits: int, gate_set: GateSetDef) -> Circuit:
    if not isinstance(payload, list):
        raise PluginProtocolError("response circuit must be a list of gates")
    gates = []
    for entry in payload:
        try:
            name = entry["name"]
            qubits = tuple(int(q) for q in entry["qubits"])
            params = tuple(Angle.of(float(p)) for p in entry.get("params", ()))
        except (KeyError, TypeError, ValueError) as exc:
            raise PluginProtocolError(f"bad gate entry {entry!r}") from exc
        if any(not 0 <= q < num_qubits for q in qubits):
            raise PluginProtocolError(f"gate {name} touches out-of-range qubit")
        gates.append(Gate(name, qubits, params))
    circuit = Circuit(num_qubits, tuple(gates))
    try:
        validate_circuit(circuit, gate_set)
    except Exception as exc:
        raise PluginProtocolError(str(exc)) from exc
    return circuit


def plugin_resynthesize(
    target: np.ndarray,
    gate_set: GateSetDef,
    epsilon: float,
    objective: str,
    command,
    budget_ms: Optional[float] = 10_000.0,
) -> Optional[tuple[Circuit, float]]:
    """Run one request/response round trip; None on timeout."""
    if isinstance(command, str):
        command = shlex.split(command)
    num_qubits = int(np.log2(target.shape[0]))
    request = _encode_request(target, gate_set, epsilon, objective)
    try:
        proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
    except OSError as exc:
        raise PluginProcessError(f"cannot launch plugin {command!r}: {exc}") from exc
    timeout = None if budget_ms is None else budget_ms / 1000.0
    try:
        out, err = proc.communicate(request + "\n", timeout=timeout)
    except subprocess.TimeoutExpired:
        proc.kill()
        proc.communicate()
        return None
    if proc.returncode != 0:
        raise PluginProcessError(
            f"plugin exited with status {proc.returncode}: {err.strip()[:200]}"
        )
    line = out.strip().splitlines()
    if not line:
        raise PluginProtocolError("plugin produced no response line")
    try:
        response = json.loads(line[0])
    except json.JSONDecodeError as exc:
        raise PluginProtocolError(f"response is not JSON: {exc}") from exc
    if not isinstance(response, dict) or "ok" not in response:
        raise PluginProtocolError("response missing 'ok' field")
    if not response["ok"]:
        return None
    circuit = _decode_circuit(response.get("circuit"), num_qubits, gate_set)
    distance = hs_distance(circuit_unitary(circuit), target)
    if distance > epsilon + 1e-9:
        raise PluginContractError(
            f"plugin circuit is at distance {distance:.3e}, epsilon is {epsilon:.3e}"
        )
    return circuit, distance
