"""qcopt: quantum-circuit optimization by rewrite rules and resynthesis,
scheduled by a randomized anytime search under a global error budget.
"""

from .circuit import (
    Angle,
    Circuit,
    CircuitDag,
    CircuitError,
    Gate,
    QubitLimitError,
    StaleSubcircuitError,
    Subcircuit,
    build_dag,
    count_gates,
    extract_subcircuit_greedy,
    is_convex,
    make_subcircuit,
    replace_subcircuit,
)
from .gateset import GATE_SETS, GateSetDef, NoiseModel, get_gate_set, load_noise_model
from .qasm import QasmError, emit_qasm, parse_qasm
from .rewrite import RewriteRule, apply_rule_pass, as_transformation, builtin_rules, find_match
from .resynth import SynthesisResult, resynthesis_transformation, resynthesize
from .search import (
    CostFunction,
    ErrorBudget,
    SearchConfig,
    SearchResult,
    Transformation,
    accept,
    optimize,
    sample_transformation,
)
from .unitary import (
    approx_equiv,
    circuit_unitary,
    fidelity_score,
    gate_reduction,
    gate_unitary,
    hs_distance,
)

__version__ = "0.1.0"
