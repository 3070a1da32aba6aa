"""Pure NumPy kernel backend.

Row-index convention: qubit 0 is the most significant bit of the basis index,
so reshaping the row axis to (2,)*n puts qubit q on tensor axis q.
"""
from __future__ import annotations

import numpy as np

BACKEND = "pure"


def apply_gate(acc: np.ndarray, g: np.ndarray, qubits: tuple, n: int) -> np.ndarray:
    """Return emb(g) @ acc for a gate matrix g acting on ``qubits``.

    ``acc`` has 2**n rows; columns are carried along untouched.
    """
    m = len(qubits)
    cols = acc.shape[1]
    tensor = acc.reshape((2,) * n + (cols,))
    gt = g.reshape((2,) * (2 * m))
    moved = np.tensordot(gt, tensor, axes=(tuple(range(m, 2 * m)), tuple(qubits)))
    # tensordot puts the gate's output axes first; put them back in place.
    moved = np.moveaxis(moved, tuple(range(m)), tuple(qubits))
    return np.ascontiguousarray(moved.reshape(acc.shape))


def compose(n: int, mats: list, qubit_lists: list) -> np.ndarray:
    dim = 1 << n
    acc = np.eye(dim, dtype=np.complex128)
    for g, qubits in zip(mats, qubit_lists):
        acc = apply_gate(acc, np.asarray(g, dtype=np.complex128), tuple(qubits), n)
    return acc
