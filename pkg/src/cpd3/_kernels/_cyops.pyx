# Compiled twin of pyops.row_block; see that module for the contract.

import numpy as np

cimport numpy as cnp

cnp.import_array()


def row_block(const double[:, :, ::1] t,
              const cnp.int64_t[::1] i_idx, const cnp.int64_t[::1] j_idx,
              const cnp.int64_t[::1] free_i, const cnp.int64_t[::1] free_j,
              const cnp.int64_t[:, ::1] perms, const double[::1] signs,
              const cnp.int64_t[::1] sym_index, const double[::1] col_scale,
              double[::1] out):
    cdef Py_ssize_t m = i_idx.shape[0]
    cdef Py_ssize_t l = free_i.shape[0]
    cdef Py_ssize_t K = t.shape[2]
    cdef Py_ssize_t nperm = perms.shape[0]
    cdef Py_ssize_t D = out.shape[0]

    cdef Py_ssize_t km = 1
    cdef Py_ssize_t kl = 1
    cdef Py_ssize_t b, p, a, q, rem, idx
    for b in range(m):
        km *= K
    for b in range(l):
        kl *= K

    cdef cnp.ndarray[double, ndim=1] det_arr = np.empty(km, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] extra_arr = np.empty(kl, dtype=np.float64)
    cdef double[::1] det = det_arr
    cdef double[::1] extra = extra_arr

    # slice-minor determinants over all m-tuples of third-mode indices
    cdef double acc, prod, d
    cdef Py_ssize_t digit
    for a in range(km):
        acc = 0.0
        for p in range(nperm):
            prod = signs[p]
            rem = a
            for b in range(m - 1, -1, -1):
                digit = rem % K
                rem //= K
                prod *= t[i_idx[perms[p, b]], j_idx[b], digit]
            acc += prod
        det[a] = acc

    # products of the free entries over all l-tuples
    extra[0] = 1.0
    cdef Py_ssize_t filled = 1
    for p in range(l):
        for a in range(filled - 1, -1, -1):
            d = extra[a]
            for q in range(K):
                extra[a * K + q] = d * t[free_i[p], free_j[p], q]
        filled *= K

    for idx in range(D):
        out[idx] = 0.0
    for a in range(km):
        d = det[a]
        rem = a * kl
        for q in range(kl):
            out[sym_index[rem + q]] += d * extra[q]
    for idx in range(D):
        out[idx] *= col_scale[idx]
    return np.asarray(out)
