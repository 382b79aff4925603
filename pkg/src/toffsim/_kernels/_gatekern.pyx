# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loop: apply a dense 2^k x 2^k matrix to target qubits.

The caller precomputes `base` (indices of every non-target bit pattern) and
`offs` (the 2^k index offsets of the target bit patterns); this routine only
does the gather / matmul / scatter, in place.
"""


def apply_dense(double complex[::1] vec,
                double complex[:, :] u,
                Py_ssize_t[::1] base,
                Py_ssize_t[::1] offs):
    cdef Py_ssize_t nb = base.shape[0]
    cdef Py_ssize_t d = offs.shape[0]
    cdef Py_ssize_t i, r, c, b
    cdef double complex acc
    cdef double complex tmp[64]
    if d > 64:
        raise ValueError("kernel handles at most 6 target qubits")
    if u.shape[0] != d or u.shape[1] != d:
        raise ValueError("matrix size does not match offset table")
    with nogil:
        for i in range(nb):
            b = base[i]
            for r in range(d):
                tmp[r] = vec[b + offs[r]]
            for r in range(d):
                acc = 0
                for c in range(d):
                    acc = acc + u[r, c] * tmp[c]
                vec[b + offs[r]] = acc
