"""Dense statevector update kernels.

Amplitudes live in one contiguous complex128 array of length 2^q; ion k of a
circuit occupies one fixed bit position of the basis index.  Every kernel
takes an explicit `limit` (a power of two): amplitudes at indices >= limit
are known to be zero because the corresponding qubits have not been touched
yet, so passes over a growing prefix keep early-circuit gates cheap.

Update kernels return the squared L2 norm of the prefix so the engine can
verify norm preservation at no extra memory cost.  The measurement-side
kernels (sample_index, pair_reduce, pair_condition) support exact Born
sampling by the chain rule over pending two-qubit unitaries, which avoids
materializing the fully transformed state.
"""

from __future__ import annotations

import numba as nb
import numpy as np

C16 = nb.complex128
F8 = nb.float64
I8 = nb.int64


@nb.njit(F8(C16[::1], I8, I8, C16, C16, C16, C16), cache=True, fastmath=True)
def apply_1q(amps, limit, pos, m00, m01, m10, m11):
    bit = 1 << pos
    acc = 0.0
    for base in range(0, limit, 2 * bit):
        for off in range(bit):
            i0 = base + off
            i1 = i0 + bit
            v0 = amps[i0]
            v1 = amps[i1]
            a = m00 * v0 + m01 * v1
            b = m10 * v0 + m11 * v1
            amps[i0] = a
            amps[i1] = b
            acc += a.real * a.real + a.imag * a.imag
            acc += b.real * b.real + b.imag * b.imag
    return acc


@nb.njit(F8(C16[::1], I8, I8, I8, C16[:, ::1]), cache=True, fastmath=True)
def apply_2q(amps, limit, pos_i, pos_j, m):
    """Apply a 4x4 unitary on (ion i, ion j); local index is v_i + 2*v_j."""
    p1, p2 = (pos_i, pos_j) if pos_i < pos_j else (pos_j, pos_i)
    bi = 1 << pos_i
    bj = 1 << pos_j
    quarter = limit >> 2
    low_mask = (1 << p1) - 1
    mid_mask = (1 << (p2 - p1 - 1)) - 1
    acc = 0.0
    m00, m01, m02, m03 = m[0, 0], m[0, 1], m[0, 2], m[0, 3]
    m10, m11, m12, m13 = m[1, 0], m[1, 1], m[1, 2], m[1, 3]
    m20, m21, m22, m23 = m[2, 0], m[2, 1], m[2, 2], m[2, 3]
    m30, m31, m32, m33 = m[3, 0], m[3, 1], m[3, 2], m[3, 3]
    for c in range(quarter):
        low = c & low_mask
        mid = (c >> p1) & mid_mask
        high = c >> (p2 - 1)
        k = (high << (p2 + 1)) | (mid << (p1 + 1)) | low
        k1 = k | bi
        k2 = k | bj
        k3 = k1 | bj
        v0 = amps[k]
        v1 = amps[k1]
        v2 = amps[k2]
        v3 = amps[k3]
        a0 = m00 * v0 + m01 * v1 + m02 * v2 + m03 * v3
        a1 = m10 * v0 + m11 * v1 + m12 * v2 + m13 * v3
        a2 = m20 * v0 + m21 * v1 + m22 * v2 + m23 * v3
        a3 = m30 * v0 + m31 * v1 + m32 * v2 + m33 * v3
        amps[k] = a0
        amps[k1] = a1
        amps[k2] = a2
        amps[k3] = a3
        acc += a0.real * a0.real + a0.imag * a0.imag
        acc += a1.real * a1.real + a1.imag * a1.imag
        acc += a2.real * a2.real + a2.imag * a2.imag
        acc += a3.real * a3.real + a3.imag * a3.imag
    return acc


@nb.njit(I8(C16[::1], I8, F8), cache=True)
def sample_index(amps, limit, target):
    """First basis index where the running probability sum exceeds target.

    Strict sequential accumulation (no fastmath) so the selection is
    bit-reproducible across all execution paths that share it.
    """
    acc = 0.0
    for k in range(limit):
        v = amps[k]
        acc += v.real * v.real + v.imag * v.imag
        if acc > target:
            return k
    return limit - 1


@nb.njit(F8(C16[::1], I8), cache=True)
def norm_sq(amps, limit):
    acc = 0.0
    for k in range(limit):
        v = amps[k]
        acc += v.real * v.real + v.imag * v.imag
    return acc


@nb.njit(nb.void(C16[::1], I8, I8, I8, C16[:, ::1]), cache=True, fastmath=True)
def pair_reduce(amps, limit, pos_i, pos_j, out):
    """Reduced 4x4 density matrix of the (i, j) pair: out[a, b] =
    sum_rest amps[a, rest] * conj(amps[b, rest])."""
    p1, p2 = (pos_i, pos_j) if pos_i < pos_j else (pos_j, pos_i)
    bi = 1 << pos_i
    bj = 1 << pos_j
    quarter = limit >> 2
    low_mask = (1 << p1) - 1
    mid_mask = (1 << (p2 - p1 - 1)) - 1
    r00 = r01 = r02 = r03 = 0j
    r11 = r12 = r13 = 0j
    r22 = r23 = 0j
    r33 = 0j
    for c in range(quarter):
        low = c & low_mask
        mid = (c >> p1) & mid_mask
        high = c >> (p2 - 1)
        k = (high << (p2 + 1)) | (mid << (p1 + 1)) | low
        v0 = amps[k]
        v1 = amps[k | bi]
        v2 = amps[k | bj]
        v3 = amps[k | bi | bj]
        c0 = v0.real - 1j * v0.imag
        c1 = v1.real - 1j * v1.imag
        c2 = v2.real - 1j * v2.imag
        c3 = v3.real - 1j * v3.imag
        r00 += v0 * c0
        r01 += v0 * c1
        r02 += v0 * c2
        r03 += v0 * c3
        r11 += v1 * c1
        r12 += v1 * c2
        r13 += v1 * c3
        r22 += v2 * c2
        r23 += v2 * c3
        r33 += v3 * c3
    out[0, 0] = r00
    out[0, 1] = r01
    out[0, 2] = r02
    out[0, 3] = r03
    out[1, 0] = r01.real - 1j * r01.imag
    out[1, 1] = r11
    out[1, 2] = r12
    out[1, 3] = r13
    out[2, 0] = r02.real - 1j * r02.imag
    out[2, 1] = r12.real - 1j * r12.imag
    out[2, 2] = r22
    out[2, 3] = r23
    out[3, 0] = r03.real - 1j * r03.imag
    out[3, 1] = r13.real - 1j * r13.imag
    out[3, 2] = r23.real - 1j * r23.imag
    out[3, 3] = r33


@nb.njit(F8(C16[::1], I8, I8, I8, C16[::1], C16[::1]), cache=True, fastmath=True)
def pair_condition(amps, limit, pos_i, pos_j, row, out):
    """Project the pair onto one measured outcome: out[rest] =
    sum_a row[a] * amps[a, rest], compacted (the two bits are removed).
    Returns the squared norm of the unnormalized conditional state."""
    p1, p2 = (pos_i, pos_j) if pos_i < pos_j else (pos_j, pos_i)
    bi = 1 << pos_i
    bj = 1 << pos_j
    quarter = limit >> 2
    low_mask = (1 << p1) - 1
    mid_mask = (1 << (p2 - p1 - 1)) - 1
    w0, w1, w2, w3 = row[0], row[1], row[2], row[3]
    acc = 0.0
    for c in range(quarter):
        low = c & low_mask
        mid = (c >> p1) & mid_mask
        high = c >> (p2 - 1)
        k = (high << (p2 + 1)) | (mid << (p1 + 1)) | low
        v = (w0 * amps[k] + w1 * amps[k | bi]
             + w2 * amps[k | bj] + w3 * amps[k | bi | bj])
        out[c] = v
        acc += v.real * v.real + v.imag * v.imag
    return acc


def warm_kernels() -> None:
    """Trigger JIT compilation once (cheap; children inherit via fork)."""
    a = np.zeros(8, dtype=np.complex128)
    a[0] = 1.0
    apply_1q(a, 8, 0, 1 + 0j, 0j, 0j, 1 + 0j)
    apply_2q(a, 8, 0, 1, np.eye(4, dtype=np.complex128))
    sample_index(a, 8, 0.5)
    norm_sq(a, 8)
    r = np.zeros((4, 4), dtype=np.complex128)
    pair_reduce(a, 8, 0, 1, r)
    out = np.zeros(2, dtype=np.complex128)
    pair_condition(a, 8, 0, 1, np.ones(4, dtype=np.complex128), out)
