import sys
import textwrap

import numpy as np
import pytest

from qcopt.circuit import Angle, Circuit, Gate, build_dag, make_subcircuit
from qcopt.gateset import NAM
from qcopt.resynth import resynthesize
from qcopt.resynth.plugin import (
    PluginContractError,
    PluginProcessError,
    PluginProtocolError,
    plugin_resynthesize,
)
from qcopt.search import CostFunction
from qcopt.unitary import circuit_unitary

COST_2Q = CostFunction("two-qubit-count")


def make_plugin(tmp_path, body: str):
    path = tmp_path / "plugin.py"
    path.write_text(
        "import json, sys\n"
        "request = json.loads(sys.stdin.readline())\n" + textwrap.dedent(body)
    )
    return [sys.executable, str(path)]


ECHO_FIG_CIRCUIT = (
    "print(json.dumps({'ok': True, 'circuit': ["
    "{'name': 'rz', 'qubits': [0], 'params': [3.141592653589793]},"
    "{'name': 'h', 'qubits': [1], 'params': []},"
    "{'name': 'cx', 'qubits': [0, 1], 'params': []}]}))\n"
)


class TestProtocol:
    def test_good_plugin_accepted(self, tmp_path):
        cmd = make_plugin(tmp_path, ECHO_FIG_CIRCUIT)
        demo = Circuit(
            2,
            (
                Gate("rz", (0,), (Angle.exact(1, 2),)),
                Gate("h", (1,)),
                Gate("cx", (0, 1)),
                Gate("rz", (0,), (Angle.exact(1, 2),)),
            ),
        )
        target = circuit_unitary(demo)
        out = plugin_resynthesize(target, NAM, 0.0, "two-qubit-count", cmd)
        assert out is not None
        circuit, distance = out
        assert distance <= 1e-9
        assert len(circuit.gates) == 3

    def test_request_schema(self, tmp_path):
        cmd = make_plugin(
            tmp_path,
            "assert request['version'] == 1\n"
            "assert request['gate_set'] == 'nam'\n"
            "assert request['objective'] == 'two-qubit-count'\n"
            "n = len(request['unitary'])\n"
            "circ = []\n"
            "print(json.dumps({'ok': True, 'circuit': circ}))\n",
        )
        out = plugin_resynthesize(np.eye(2, dtype=complex), NAM, 0.0, "two-qubit-count", cmd)
        assert out is not None and out[0].gates == ()

    def test_out_of_tolerance_rejected(self, tmp_path):
        cmd = make_plugin(
            tmp_path,
            "print(json.dumps({'ok': True, 'circuit': [{'name': 'x', 'qubits': [0], 'params': []}]}))\n",
        )
        with pytest.raises(PluginContractError):
            plugin_resynthesize(np.eye(2, dtype=complex), NAM, 0.0, "two-qubit-count", cmd)

    def test_malformed_response(self, tmp_path):
        cmd = make_plugin(tmp_path, "print('this is not json')\n")
        with pytest.raises(PluginProtocolError):
            plugin_resynthesize(np.eye(2, dtype=complex), NAM, 0.0, "two-qubit-count", cmd)

    def test_unknown_gate_in_response(self, tmp_path):
        cmd = make_plugin(
            tmp_path,
            "print(json.dumps({'ok': True, 'circuit': [{'name': 'ccz', 'qubits': [0], 'params': []}]}))\n",
        )
        with pytest.raises(PluginProtocolError):
            plugin_resynthesize(np.eye(2, dtype=complex), NAM, 0.0, "two-qubit-count", cmd)

    def test_crash_is_process_error(self, tmp_path):
        cmd = make_plugin(tmp_path, "sys.exit(3)\n")
        with pytest.raises(PluginProcessError):
            plugin_resynthesize(np.eye(2, dtype=complex), NAM, 0.0, "two-qubit-count", cmd)

    def test_declined_request_is_no_result(self, tmp_path):
        cmd = make_plugin(tmp_path, "print(json.dumps({'ok': False, 'reason': 'too hard'}))\n")
        out = plugin_resynthesize(np.eye(2, dtype=complex), NAM, 0.0, "two-qubit-count", cmd)
        assert out is None

    def test_timeout_is_no_result(self, tmp_path):
        cmd = make_plugin(tmp_path, "import time\ntime.sleep(30)\n")
        out = plugin_resynthesize(
            np.eye(2, dtype=complex), NAM, 0.0, "two-qubit-count", cmd, budget_ms=300
        )
        assert out is None


class TestResynthesisViaPlugin:
    def test_echo_plugin_treated_as_no_improvement(self, tmp_path):
        # The plugin answers with the exact input subcircuit: contract-clean
        # but useless, so the caller must see no result.
        cmd = make_plugin(
            tmp_path,
            "print(json.dumps({'ok': True, 'circuit': ["
            "{'name': 'cx', 'qubits': [0, 1], 'params': []}]}))\n",
        )
        c = Circuit(2, (Gate("cx", (0, 1)),))
        dag = build_dag(c)
        sub = make_subcircuit(dag, dag.nodes)
        rng = np.random.default_rng(0)
        assert resynthesize(sub, NAM, 0.0, COST_2Q, 10_000, rng, plugin=cmd) is None

    def test_improving_plugin_result_used(self, tmp_path):
        cmd = make_plugin(tmp_path, "print(json.dumps({'ok': True, 'circuit': []}))\n")
        c = Circuit(2, (Gate("cx", (0, 1)), Gate("cx", (0, 1))))
        dag = build_dag(c)
        sub = make_subcircuit(dag, dag.nodes)
        rng = np.random.default_rng(0)
        res = resynthesize(sub, NAM, 0.0, COST_2Q, 10_000, rng, plugin=cmd)
        assert res is not None
        assert res.synthesizer == "plugin"
        assert res.circuit.gates == ()
