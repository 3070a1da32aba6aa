"""Benchmark the compiled kernel backend against the pure-NumPy fallback.

The workloads mirror where the optimizer actually spends time: composing
many tiny matrices during template fitting (2-4 qubits) and building
whole-circuit unitaries for validation (8 qubits).

Usage: python benchmarks/kernel_bench.py [--repeats N]
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from qcopt.circuit import Angle, Circuit, Gate
from qcopt.kernels import available_backends
from qcopt.unitary import gate_unitary


def _chain(num_qubits: int, length: int, seed: int) -> Circuit:
    rng = np.random.default_rng(seed)
    gates = []
    for _ in range(length):
        if num_qubits >= 2 and rng.random() < 0.3:
            a, b = rng.choice(num_qubits, size=2, replace=False)
            gates.append(Gate("cx", (int(a), int(b))))
        else:
            q = int(rng.integers(num_qubits))
            gates.append(Gate("rz", (q,), (Angle.of(float(rng.uniform(0, 2 * math.pi))),)))
            gates.append(Gate("h", (q,)))
    return Circuit(num_qubits, tuple(gates))


WORKLOADS = [
    ("2q x 16 gates (template fit inner loop)", 2, 16, 2000),
    ("3q x 24 gates (subcircuit synthesis)", 3, 24, 600),
    ("4q x 32 gates (synthesis cap)", 4, 32, 200),
    ("8q x 148 gates (validation oracle)", 8, 148, 4),
]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3, help="best-of repeats")
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; showing pure backend only")
    header = f"{'workload':<44}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, nq, length, reps in WORKLOADS:
        circuit = _chain(nq, length, seed=nq)
        mats = [gate_unitary(g) for g in circuit.gates]
        quba = [g.qubits for g in circuit.gates]
        times = {}
        reference = None
        for name, impl in backends.items():
            best = math.inf
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                for _ in range(reps):
                    out = impl.compose(nq, mats, quba)
                best = min(best, (time.perf_counter() - t0) / reps)
            times[name] = best
            if reference is None:
                reference = out
            else:
                assert np.allclose(out, reference, atol=1e-12), f"{name} disagrees"
        row = f"{label:<44}" + "".join(
            f"{times[name] * 1e6:>12.1f}us" for name in backends
        )
        if "compiled" in times and "pure" in times:
            row += f"{times['pure'] / times['compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
