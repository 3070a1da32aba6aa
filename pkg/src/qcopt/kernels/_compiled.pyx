# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend: gate application on dense unitaries.

Same semantics as the pure backend; exists because resynthesis spends nearly
all of its time composing many tiny (<= 4 qubit) matrices, where per-call
NumPy overhead dominates.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


cdef void _apply(double complex[:, ::1] out,
                 double complex[:, ::1] acc,
                 double complex[:, ::1] g,
                 Py_ssize_t[::1] place,
                 Py_ssize_t[::1] rest_shifts,
                 Py_ssize_t n, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t dim = 1 << n
    cdef Py_ssize_t sub = 1 << m
    cdef Py_ssize_t n_rest = 1 << (n - m)
    cdef Py_ssize_t cols = acc.shape[1]
    cdef Py_ssize_t r, base, i, k, l, c, s, low
    cdef Py_ssize_t rows[16]
    cdef double complex coef
    for r in range(n_rest):
        # Scatter the rest-index bits around the gate's bit positions.
        base = r
        for i in range(m):
            s = rest_shifts[i]
            low = base & ((<Py_ssize_t> 1 << s) - 1)
            base = ((base >> s) << (s + 1)) | low
        for k in range(sub):
            rows[k] = base | place[k]
        for k in range(sub):
            for c in range(cols):
                out[rows[k], c] = 0
            for l in range(sub):
                coef = g[k, l]
                if coef == 0:
                    continue
                for c in range(cols):
                    out[rows[k], c] = out[rows[k], c] + coef * acc[rows[l], c]


def _placement(qubits, Py_ssize_t n):
    cdef Py_ssize_t m = len(qubits)
    shifts = [n - 1 - q for q in qubits]
    place = np.zeros(1 << m, dtype=np.intp)
    for k in range(1 << m):
        v = 0
        for j in range(m):
            if (k >> (m - 1 - j)) & 1:
                v |= 1 << shifts[j]
        place[k] = v
    rest = np.array(sorted(shifts), dtype=np.intp)
    return place, rest


def apply_gate(acc, g, qubits, Py_ssize_t n):
    cdef Py_ssize_t m = len(qubits)
    if m > 4:
        raise ValueError("compiled kernel supports gates on at most 4 qubits")
    acc = np.ascontiguousarray(acc, dtype=np.complex128)
    g = np.ascontiguousarray(g, dtype=np.complex128)
    out = np.empty_like(acc)
    place, rest = _placement(qubits, n)
    _apply(out, acc, g, place, rest, n, m)
    return out


def compose(Py_ssize_t n, mats, qubit_lists):
    cdef Py_ssize_t dim = 1 << n
    cdef Py_ssize_t m
    buf_a = np.eye(dim, dtype=np.complex128)
    buf_b = np.empty((dim, dim), dtype=np.complex128)
    cdef double complex[:, ::1] va = buf_a
    cdef double complex[:, ::1] vb = buf_b
    for g, qubits in zip(mats, qubit_lists):
        m = len(qubits)
        if m > 4:
            raise ValueError("compiled kernel supports gates on at most 4 qubits")
        g = np.ascontiguousarray(g, dtype=np.complex128)
        place, rest = _placement(qubits, n)
        _apply(vb, va, g, place, rest, n, m)
        va, vb = vb, va
        buf_a, buf_b = buf_b, buf_a
    return buf_a
