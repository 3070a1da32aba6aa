"""Corpus runner: optimize circuits, ablation modes, machine-readable reports.

Modes:
    guoq                 rewrite rules and resynthesis, tightly interleaved
    rewrite-only         rules only
    resynth-only         resynthesis only
    seq-rewrite-resynth  first half of the budget rules-only, then resynthesis
    seq-resynth-rewrite  the opposite order
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .circuit import Circuit, count_gates, is_two_qubit
from .gateset import GateSetDef, NOISELESS, NoiseModel, get_gate_set, validate_circuit
from .qasm import QasmError, emit_qasm, load_qasm_file
from .rewrite import as_transformation, builtin_rules, load_rules
from .resynth import resynthesis_transformation
from .search import CostFunction, SearchConfig, SearchResult, optimize
from .unitary import approx_equiv, fidelity_score, gate_reduction

MODES = (
    "guoq",
    "rewrite-only",
    "resynth-only",
    "seq-rewrite-resynth",
    "seq-resynth-rewrite",
)

VALIDATION_CAP_QUBITS = 8


def corpus_dir() -> Path:
    """The in-repo benchmark corpus shipped with the package."""
    return Path(__file__).resolve().parent / "corpus"


def class_counts(circuit: Circuit) -> dict:
    return {
        "total": len(circuit.gates),
        "two_qubit": count_gates(circuit, is_two_qubit),
        "t_like": count_gates(circuit, lambda g: g.name in ("t", "tdg")),
        "cx": count_gates(circuit, lambda g: g.name == "cx"),
    }


@dataclass
class RunReport:
    gate_set: str
    objective: str
    mode: str
    epsilon_f: float
    seed: int
    time_limit: Optional[float]
    records: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "gate_set": self.gate_set,
            "objective": self.objective,
            "mode": self.mode,
            "epsilon_f": self.epsilon_f,
            "seed": self.seed,
            "time_limit": self.time_limit,
            "records": self.records,
        }


def canonical_record(record: dict, exclude_times: bool = True) -> str:
    """Stable serialization of one benchmark record; timing fields are
    excluded so reproducibility checks compare only deterministic content.
    """
    skip = {"wall_time_s"} if exclude_times else set()
    return json.dumps(
        {k: v for k, v in sorted(record.items()) if k not in skip}, sort_keys=True
    )


def _transformations(gate_set, cost, config, kinds: str, rules, plugin):
    out = []
    if "rewrite" in kinds:
        out.extend(as_transformation(r) for r in rules)
    if "resynth" in kinds:
        out.append(resynthesis_transformation(gate_set, cost, config, plugin=plugin))
    return out


def optimize_circuit(
    circuit: Circuit,
    gate_set: GateSetDef,
    cost: CostFunction,
    config: SearchConfig,
    mode: str = "guoq",
    rules=None,
    plugin=None,
) -> SearchResult:
    """Run one optimization in the given mode. Sequential modes split the
    time (and iteration) budget in half and feed the first phase's best
    circuit and remaining error budget into the second.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; available: {MODES}")
    if rules is None:
        rules = builtin_rules(gate_set)
    if mode in ("guoq", "rewrite-only", "resynth-only"):
        kinds = {"guoq": "rewrite+resynth", "rewrite-only": "rewrite", "resynth-only": "resynth"}[mode]
        moves = _transformations(gate_set, cost, config, kinds, rules, plugin)
        return optimize(circuit, moves, cost, config)

    first, second = (
        ("rewrite", "resynth") if mode == "seq-rewrite-resynth" else ("resynth", "rewrite")
    )
    half_time = None if config.time_limit is None else config.time_limit / 2
    half_iters = None if config.max_iterations is None else config.max_iterations // 2
    cfg1 = replace(config, time_limit=half_time, max_iterations=half_iters)
    res1 = optimize(
        circuit, _transformations(gate_set, cost, cfg1, first, rules, plugin), cost, cfg1
    )
    cfg2 = replace(
        cfg1,
        seed=config.seed + 0x9E3779B9,
        epsilon_f=config.epsilon_f - res1.budget.spent,
    )
    res2 = optimize(
        res1.circuit, _transformations(gate_set, cost, cfg2, second, rules, plugin), cost, cfg2
    )
    shift = res1.iterations
    trace = list(res1.trace) + [
        replace(r, iteration=r.iteration + shift) for r in res2.trace
    ]
    budget = res2.budget
    budget.limit = config.epsilon_f
    budget.spent += res1.budget.spent
    return SearchResult(
        circuit=res2.circuit,
        budget=budget,
        trace=trace,
        iterations=res1.iterations + res2.iterations,
        wall_time=res1.wall_time + res2.wall_time,
        cost_best=res2.cost_best,
    )


def run(
    corpus_path,
    gate_set_name: str,
    config: SearchConfig,
    mode: str = "guoq",
    objective: str = "two-qubit-count",
    noise_model: NoiseModel = NOISELESS,
    rules_path=None,
    plugin=None,
    out_dir=None,
) -> RunReport:
    """Optimize every .qasm file under ``corpus_path``; unparseable files are
    recorded as failed entries and the run continues. Outputs below the
    validation qubit cap are re-checked against the error budget with the
    full-unitary oracle.
    """
    gate_set = get_gate_set(gate_set_name)
    cost = CostFunction(objective, noise_model)
    rules = builtin_rules(gate_set)
    if rules_path is not None:
        rules = rules + load_rules(rules_path, gate_set)
    corpus = Path(corpus_path)
    files = sorted(corpus.rglob("*.qasm")) if corpus.is_dir() else [corpus]
    report = RunReport(
        gate_set=gate_set_name,
        objective=objective,
        mode=mode,
        epsilon_f=config.epsilon_f,
        seed=config.seed,
        time_limit=config.time_limit,
    )
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "traces").mkdir(parents=True, exist_ok=True)
        (out / "circuits").mkdir(parents=True, exist_ok=True)
    for path in files:
        name = path.stem
        try:
            circuit = load_qasm_file(path, gate_set)
        except (QasmError, OSError) as exc:
            report.records.append({"name": name, "status": "failed", "error": str(exc)})
            continue
        started = time.monotonic()
        result = optimize_circuit(circuit, gate_set, cost, config, mode, rules, plugin)
        record = {
            "name": name,
            "status": "ok",
            "num_qubits": circuit.num_qubits,
            "counts_before": class_counts(circuit),
            "counts_after": class_counts(result.circuit),
            "gate_reduction": (
                gate_reduction(len(circuit.gates), len(result.circuit.gates))
                if circuit.gates
                else 0.0
            ),
            "two_qubit_reduction": _safe_reduction(
                count_gates(circuit, is_two_qubit), count_gates(result.circuit, is_two_qubit)
            ),
            "fidelity_before": fidelity_score(circuit, noise_model),
            "fidelity_after": fidelity_score(result.circuit, noise_model),
            "cost_before": cost(circuit),
            "cost_after": result.cost_best,
            "error_budget_spent": result.budget.spent,
            "epsilon_f": config.epsilon_f,
            "iterations": result.iterations,
            "wall_time_s": time.monotonic() - started,
            "seed": config.seed,
            "mode": mode,
            "validated": _validate_output(circuit, result.circuit, gate_set, config.epsilon_f),
        }
        if out is not None:
            trace_file = out / "traces" / f"{name}.seed{config.seed}.jsonl"
            with open(trace_file, "w", encoding="utf-8") as fh:
                for entry in result.trace:
                    fh.write(json.dumps(entry.as_dict()) + "\n")
            record["trace_file"] = str(trace_file.relative_to(out))
            circuit_file = out / "circuits" / f"{name}.seed{config.seed}.qasm"
            circuit_file.write_text(emit_qasm(result.circuit, gate_set), encoding="utf-8")
            record["circuit_file"] = str(circuit_file.relative_to(out))
        report.records.append(record)
    if out is not None:
        write_report(report, out)
    return report


def _safe_reduction(before: int, after: int) -> Optional[float]:
    return gate_reduction(before, after) if before > 0 else None


def _validate_output(original, optimized, gate_set, epsilon_f) -> bool:
    validate_circuit(optimized, gate_set)
    if original.num_qubits <= VALIDATION_CAP_QUBITS:
        return approx_equiv(original, optimized, epsilon_f)
    return True


def write_report(report: RunReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8"
    )
    rows = [r for r in report.records if r.get("status") == "ok"]
    with open(out / "report.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "name", "num_qubits", "mode", "seed",
                "total_before", "total_after", "two_qubit_before", "two_qubit_after",
                "gate_reduction", "two_qubit_reduction",
                "fidelity_before", "fidelity_after",
                "error_budget_spent", "iterations", "wall_time_s",
            ]
        )
        for r in rows:
            writer.writerow(
                [
                    r["name"], r["num_qubits"], r["mode"], r["seed"],
                    r["counts_before"]["total"], r["counts_after"]["total"],
                    r["counts_before"]["two_qubit"], r["counts_after"]["two_qubit"],
                    r["gate_reduction"], r["two_qubit_reduction"],
                    r["fidelity_before"], r["fidelity_after"],
                    r["error_budget_spent"], r["iterations"], r["wall_time_s"],
                ]
            )


# Lower is better unless listed here.
_HIGHER_BETTER = {"gate_reduction", "two_qubit_reduction", "fidelity_after"}


def _metric_value(record: dict, metric: str):
    if metric == "two_qubit_after":
        return record["counts_after"]["two_qubit"]
    if metric == "total_after":
        return record["counts_after"]["total"]
    return record[metric]


def compare(reports: list[RunReport], metric: str = "two_qubit_after") -> dict:
    """Pairwise outperform/match/underperform counts over a shared benchmark
    set; benchmarks missing from any report are listed and excluded.
    """
    by_label = {}
    for i, rep in enumerate(reports):
        label = f"{rep.mode}#{i}"
        by_label[label] = {
            r["name"]: r for r in rep.records if r.get("status") == "ok"
        }
    name_sets = [set(recs) for recs in by_label.values()]
    shared = set.intersection(*name_sets) if name_sets else set()
    excluded = sorted(set.union(*name_sets) - shared) if name_sets else []
    labels = list(by_label)
    pairs = []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            a, b = labels[i], labels[j]
            outperform = match = underperform = 0
            for name in sorted(shared):
                va = _metric_value(by_label[a][name], metric)
                vb = _metric_value(by_label[b][name], metric)
                if va == vb:
                    match += 1
                elif (va > vb) == (metric in _HIGHER_BETTER):
                    outperform += 1
                else:
                    underperform += 1
            pairs.append(
                {
                    "a": a,
                    "b": b,
                    "metric": metric,
                    "outperform": outperform,
                    "match": match,
                    "underperform": underperform,
                }
            )
    per_benchmark = [
        {"name": name, **{label: _metric_value(by_label[label][name], metric) for label in labels}}
        for name in sorted(shared)
    ]
    return {"metric": metric, "pairs": pairs, "excluded": excluded, "per_benchmark": per_benchmark}


def write_comparison(summary: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "compare.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    rows = summary["per_benchmark"]
    if not rows:
        return
    with open(out / "compare.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
