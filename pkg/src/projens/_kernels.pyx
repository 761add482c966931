# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled statevector kernels.

Amplitude ordering is little-endian: qubit q is bit q of the array index.
A two-qubit gate on (qa, qb) uses the local basis |x y> with x = bit(qa)
and y = bit(qb), local index 2*x + y (qa is the first tensor factor).

The accumulation order of the 4-term (2-term) sums is fixed and must match
projens._kernels_py exactly; both backends produce bit-identical output.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def apply_two_qubit(cnp.complex128_t[::1] psi, cnp.complex128_t[:, ::1] gate,
                    int num_qubits, int qa, int qb):
    """Apply a 4x4 gate to qubits (qa, qb) of psi, in place."""
    cdef Py_ssize_t dim = 1 << num_qubits
    cdef Py_ssize_t ma = 1 << qa
    cdef Py_ssize_t mb = 1 << qb
    cdef Py_ssize_t pair = ma | mb
    cdef Py_ssize_t i, i1, i2, i3
    cdef double complex a0, a1, a2, a3
    cdef double complex g00 = gate[0, 0], g01 = gate[0, 1], g02 = gate[0, 2], g03 = gate[0, 3]
    cdef double complex g10 = gate[1, 0], g11 = gate[1, 1], g12 = gate[1, 2], g13 = gate[1, 3]
    cdef double complex g20 = gate[2, 0], g21 = gate[2, 1], g22 = gate[2, 2], g23 = gate[2, 3]
    cdef double complex g30 = gate[3, 0], g31 = gate[3, 1], g32 = gate[3, 2], g33 = gate[3, 3]
    for i in range(dim):
        if i & pair:
            continue
        i1 = i | mb
        i2 = i | ma
        i3 = i | pair
        a0 = psi[i]
        a1 = psi[i1]
        a2 = psi[i2]
        a3 = psi[i3]
        psi[i] = ((g00 * a0 + g01 * a1) + g02 * a2) + g03 * a3
        psi[i1] = ((g10 * a0 + g11 * a1) + g12 * a2) + g13 * a3
        psi[i2] = ((g20 * a0 + g21 * a1) + g22 * a2) + g23 * a3
        psi[i3] = ((g30 * a0 + g31 * a1) + g32 * a2) + g33 * a3


def apply_one_qubit(cnp.complex128_t[::1] psi, cnp.complex128_t[:, ::1] gate,
                    int num_qubits, int q):
    """Apply a 2x2 gate to qubit q of psi, in place."""
    cdef Py_ssize_t dim = 1 << num_qubits
    cdef Py_ssize_t m = 1 << q
    cdef Py_ssize_t i, i1
    cdef double complex a0, a1
    cdef double complex g00 = gate[0, 0], g01 = gate[0, 1]
    cdef double complex g10 = gate[1, 0], g11 = gate[1, 1]
    for i in range(dim):
        if i & m:
            continue
        i1 = i | m
        a0 = psi[i]
        a1 = psi[i1]
        psi[i] = g00 * a0 + g01 * a1
        psi[i1] = g10 * a0 + g11 * a1
