"""Pure-numpy statevector kernels (fallback for the compiled extension).

Same conventions as projens._kernels. Complex products are expanded into
real/imaginary components because numpy's vectorized complex multiply uses
FMA on some platforms while the extension is built with -ffp-contract=off;
with explicit real arithmetic and the same accumulation order the two
backends produce bit-identical amplitudes.
"""

import numpy as np


def _mul(gr, gi, ar, ai):
    # naive complex product, same ordering the C compiler emits
    return gr * ar - gi * ai, gr * ai + gi * ar


def apply_two_qubit(psi, gate, num_qubits, qa, qb):
    """Apply a 4x4 gate to qubits (qa, qb) of psi, in place."""
    ma = 1 << qa
    mb = 1 << qb
    idx = np.arange(1 << num_qubits)
    base = idx[(idx & (ma | mb)) == 0]
    rows = (base, base | mb, base | ma, base | ma | mb)
    re = [psi[r].real.copy() for r in rows]
    im = [psi[r].imag.copy() for r in rows]
    for out, r in enumerate(rows):
        sr = si = None
        for col in range(4):
            pr, pi = _mul(gate[out, col].real, gate[out, col].imag, re[col], im[col])
            if sr is None:
                sr, si = pr, pi
            else:
                sr = sr + pr
                si = si + pi
        psi[r] = sr + 1j * si


def apply_one_qubit(psi, gate, num_qubits, q):
    """Apply a 2x2 gate to qubit q of psi, in place."""
    m = 1 << q
    idx = np.arange(1 << num_qubits)
    rows = (idx[(idx & m) == 0],)
    base = rows[0]
    i1 = base | m
    a0r, a0i = psi[base].real.copy(), psi[base].imag.copy()
    a1r, a1i = psi[i1].real.copy(), psi[i1].imag.copy()
    for out, r in enumerate((base, i1)):
        p0r, p0i = _mul(gate[out, 0].real, gate[out, 0].imag, a0r, a0i)
        p1r, p1i = _mul(gate[out, 1].real, gate[out, 1].imag, a1r, a1i)
        psi[r] = (p0r + p1r) + 1j * (p0i + p1i)
