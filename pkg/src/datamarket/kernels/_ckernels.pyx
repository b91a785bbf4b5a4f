# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled twins of the kernels in ``_pykernels``."""
from cython.operator cimport dereference as deref
from libc.math cimport log2
from libc.stdint cimport uint64_t, int64_t
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef uint64_t FNV_OFFSET = 0xCBF29CE484222325ULL
cdef uint64_t FNV_PRIME = 0x100000001B3ULL


cdef inline uint64_t _splitmix64(uint64_t x) nogil:
    x = x + 0x9E3779B97F4A7C15ULL
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL
    return x ^ (x >> 31)


cdef inline uint64_t _hash64(const unsigned char[:] data, uint64_t seed) nogil:
    cdef uint64_t h = FNV_OFFSET ^ _splitmix64(seed)
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        h = h ^ data[i]
        h = h * FNV_PRIME
    return _splitmix64(h)


def splitmix64(x):
    return int(_splitmix64(<uint64_t>(x & 0xFFFFFFFFFFFFFFFF)))


def hash64(bytes data, seed):
    cdef const unsigned char[:] view = data
    return int(_hash64(view, <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)))


def hash_unit(keys, seed):
    cdef Py_ssize_t n = len(keys)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef const unsigned char[:] view
    cdef Py_ssize_t i
    for i in range(n):
        view = keys[i]
        out[i] = (_hash64(view, s) >> 11) * (1.0 / 9007199254740992.0)
    return out


def refine(labels, codes):
    cdef const int64_t[:] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef const int64_t[:] cod = np.ascontiguousarray(codes, dtype=np.int64)
    cdef Py_ssize_t n = lab.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    cdef unordered_map[uint64_t, int64_t] seen
    cdef unordered_map[uint64_t, int64_t].iterator it
    cdef uint64_t key
    cdef int64_t nxt = 0
    cdef Py_ssize_t i
    seen.reserve(n)
    for i in range(n):
        # labels and codes are both < 2**32 for any relation we can hold
        key = (<uint64_t>lab[i] << 32) | <uint64_t>cod[i]
        it = seen.find(key)
        if it == seen.end():
            seen[key] = nxt
            out[i] = nxt
            nxt += 1
        else:
            out[i] = deref(it).second
    return out, int(nxt)


def correct_mask(x_labels, Py_ssize_t kx, xy_labels, Py_ssize_t kxy):
    cdef const int64_t[:] xl = np.ascontiguousarray(x_labels, dtype=np.int64)
    cdef const int64_t[:] xyl = np.ascontiguousarray(xy_labels, dtype=np.int64)
    cdef Py_ssize_t n = xl.shape[0]
    cdef vector[int64_t] size = vector[int64_t](kxy, 0)
    cdef vector[int64_t] owner = vector[int64_t](kxy, 0)
    cdef vector[int64_t] best = vector[int64_t](kx, -1)
    cdef cnp.ndarray[cnp.npy_bool, ndim=1] mask = np.zeros(n, dtype=np.bool_)
    cdef Py_ssize_t i, c
    cdef int64_t o, b
    for i in range(n):
        size[xyl[i]] += 1
        owner[xyl[i]] = xl[i]
    for c in range(kxy):
        o = owner[c]
        b = best[o]
        if b < 0 or size[c] > size[b]:
            best[o] = c
    for i in range(n):
        if best[xl[i]] == xyl[i]:
            mask[i] = True
    return mask


def label_entropy(labels, Py_ssize_t k):
    cdef const int64_t[:] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = lab.shape[0]
    if n == 0:
        return 0.0
    cdef vector[int64_t] counts = vector[int64_t](k, 0)
    cdef Py_ssize_t i
    cdef double h = 0.0, p
    for i in range(n):
        counts[lab[i]] += 1
    for i in range(k):
        if counts[i]:
            p = counts[i] / <double>n
            h -= p * log2(p)
    return h


cdef inline int _candidates(const double[:] price, double budget, int m,
                            int64_t s, int* out) nogil:
    cdef int a, nc = 0
    cdef int64_t bit
    for a in range(m):
        bit = (<int64_t>1) << a
        if (s & bit) or price[s | bit] <= budget:
            out[nc] = a
            nc += 1
    return nc


def subset_chain(f, price, double budget, int m, int64_t start, uniforms):
    cdef const double[:] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef const double[:] pv = np.ascontiguousarray(price, dtype=np.float64)
    cdef const double[:, :] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t ell = u.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] states = np.empty(ell + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.npy_bool, ndim=1] accepted = np.zeros(ell, dtype=np.bool_)
    cdef vector[int] cand = vector[int](m + 1)
    cdef vector[int] cand_nxt = vector[int](m + 1)
    cdef int nc, nc_nxt, idx, a
    cdef int64_t cur = start, nxt
    cdef double fcur, fnxt, ratio, acc
    cdef Py_ssize_t t
    states[0] = cur
    nc = _candidates(pv, budget, m, cur, &cand[0])
    fcur = fv[cur]
    for t in range(ell):
        idx = <int>(u[t, 0] * nc)
        if idx > nc - 1:
            idx = nc - 1
        a = cand[idx]
        nxt = cur ^ ((<int64_t>1) << a)
        if nxt != 0:
            fnxt = fv[nxt]
            nc_nxt = _candidates(pv, budget, m, nxt, &cand_nxt[0])
            ratio = (fnxt * <double>nc) / (fcur * <double>nc_nxt)
            acc = ratio if ratio < 1.0 else 1.0
            if u[t, 1] < acc:
                cur = nxt
                fcur = fnxt
                cand.swap(cand_nxt)
                nc = nc_nxt
                accepted[t] = True
        states[t + 1] = cur
    return states, accepted
