# cython: language_level=3
"""Compiled fast-marching kernel.

Same algorithm and tie-breaking as ``_fmm_py.march``: first-order Godunov
upwind updates, lazy-deletion binary heap keyed on (value, flat index).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, sqrt
from libc.stdlib cimport free, malloc

cnp.import_array()

cdef enum:
    FAR = 0
    TRIAL = 1
    KNOWN = 2
    SEED = 3


cdef struct Heap:
    double* val
    long* idx
    Py_ssize_t size
    Py_ssize_t cap


cdef inline int heap_init(Heap* h, Py_ssize_t cap) except -1:
    h.val = <double*> malloc(cap * sizeof(double))
    h.idx = <long*> malloc(cap * sizeof(long))
    if h.val == NULL or h.idx == NULL:
        raise MemoryError("fast-marching heap allocation failed")
    h.size = 0
    h.cap = cap
    return 0


cdef inline void heap_free(Heap* h) noexcept:
    free(h.val)
    free(h.idx)


cdef inline int heap_grow(Heap* h) except -1:
    cdef Py_ssize_t new_cap = h.cap * 2
    cdef double* nv = <double*> malloc(new_cap * sizeof(double))
    cdef long* ni = <long*> malloc(new_cap * sizeof(long))
    cdef Py_ssize_t k
    if nv == NULL or ni == NULL:
        raise MemoryError("fast-marching heap growth failed")
    for k in range(h.size):
        nv[k] = h.val[k]
        ni[k] = h.idx[k]
    free(h.val)
    free(h.idx)
    h.val = nv
    h.idx = ni
    h.cap = new_cap
    return 0


cdef inline bint heap_less(Heap* h, Py_ssize_t a, Py_ssize_t b) noexcept:
    if h.val[a] != h.val[b]:
        return h.val[a] < h.val[b]
    return h.idx[a] < h.idx[b]


cdef inline void heap_swap(Heap* h, Py_ssize_t a, Py_ssize_t b) noexcept:
    cdef double tv = h.val[a]
    cdef long ti = h.idx[a]
    h.val[a] = h.val[b]
    h.idx[a] = h.idx[b]
    h.val[b] = tv
    h.idx[b] = ti


cdef inline int heap_push(Heap* h, double v, long i) except -1:
    cdef Py_ssize_t c, parent
    if h.size == h.cap:
        heap_grow(h)
    h.val[h.size] = v
    h.idx[h.size] = i
    c = h.size
    h.size += 1
    while c > 0:
        parent = (c - 1) >> 1
        if heap_less(h, c, parent):
            heap_swap(h, c, parent)
            c = parent
        else:
            break
    return 0


cdef inline long heap_pop(Heap* h) noexcept:
    cdef long top = h.idx[0]
    cdef Py_ssize_t c = 0, child
    h.size -= 1
    h.val[0] = h.val[h.size]
    h.idx[0] = h.idx[h.size]
    while True:
        child = 2 * c + 1
        if child >= h.size:
            break
        if child + 1 < h.size and heap_less(h, child + 1, child):
            child += 1
        if heap_less(h, child, c):
            heap_swap(h, c, child)
            c = child
        else:
            break
    return top


cdef inline double _update(double[:, ::1] u, unsigned char[:, ::1] status,
                           double fc, Py_ssize_t i, Py_ssize_t j,
                           Py_ssize_t n0, Py_ssize_t n1,
                           double h0, double h1, double p, double q) noexcept:
    cdef double ua = INFINITY
    cdef double ub = INFINITY
    cdef double s, b, c, disc, t

    if i > 0 and status[i - 1, j] >= KNOWN:
        ua = u[i - 1, j]
    if i < n0 - 1 and status[i + 1, j] >= KNOWN and u[i + 1, j] < ua:
        ua = u[i + 1, j]
    if j > 0 and status[i, j - 1] >= KNOWN:
        ub = u[i, j - 1]
    if j < n1 - 1 and status[i, j + 1] >= KNOWN and u[i, j + 1] < ub:
        ub = u[i, j + 1]

    if fc < 0.0:
        fc = 0.0

    if ua < INFINITY and ub < INFINITY:
        s = p + q
        b = p * ua + q * ub
        c = p * ua * ua + q * ub * ub - fc * fc
        disc = b * b - s * c
        if disc >= 0.0:
            t = (b + sqrt(disc)) / s
            if t >= ua and t >= ub:
                return t
    s = ua + fc * h0
    t = ub + fc * h1
    return s if s < t else t


def march(f, double h0, double h1, seed_i, seed_j, seed_u):
    """Compiled counterpart of ``_fmm_py.march`` (same contract)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] f_arr = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t n0 = f_arr.shape[0]
    cdef Py_ssize_t n1 = f_arr.shape[1]

    cdef cnp.ndarray[cnp.float64_t, ndim=2] u_arr = np.full((n0, n1), np.inf)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] st_arr = np.zeros((n0, n1), dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] order_arr = np.full((n0, n1), -1, dtype=np.int64)

    cdef double[:, ::1] u = u_arr
    cdef unsigned char[:, ::1] status = st_arr
    cdef long[:, ::1] order = order_arr
    cdef double[:, ::1] fv = f_arr

    cdef cnp.ndarray[cnp.int64_t, ndim=1] si = np.ascontiguousarray(seed_i, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sj = np.ascontiguousarray(seed_j, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] su = np.ascontiguousarray(seed_u, dtype=np.float64)
    cdef Py_ssize_t ns = si.shape[0]

    cdef double p = 1.0 / (h0 * h0)
    cdef double q = 1.0 / (h1 * h1)

    cdef Heap heap
    heap_init(&heap, 4 * n0 * n1 + 4 * ns + 16)

    cdef Py_ssize_t k, ci, cj, ni, nj, m
    cdef long idx, rank = 0
    cdef double t
    cdef unsigned char st

    try:
        for k in range(ns):
            ci = si[k]
            cj = sj[k]
            u[ci, cj] = su[k]
            status[ci, cj] = SEED
            heap_push(&heap, su[k], ci * n1 + cj)

        while heap.size > 0:
            idx = heap_pop(&heap)
            ci = idx // n1
            cj = idx - ci * n1
            if status[ci, cj] == KNOWN:
                continue
            status[ci, cj] = KNOWN
            order[ci, cj] = rank
            rank += 1

            for m in range(4):
                if m == 0:
                    ni = ci - 1; nj = cj
                elif m == 1:
                    ni = ci + 1; nj = cj
                elif m == 2:
                    ni = ci; nj = cj - 1
                else:
                    ni = ci; nj = cj + 1
                if ni < 0 or ni >= n0 or nj < 0 or nj >= n1:
                    continue
                st = status[ni, nj]
                if st == KNOWN or st == SEED:
                    continue
                t = _update(u, status, fv[ni, nj], ni, nj, n0, n1, h0, h1, p, q)
                if t < u[ni, nj]:
                    u[ni, nj] = t
                    status[ni, nj] = TRIAL
                    heap_push(&heap, t, ni * n1 + nj)
    finally:
        heap_free(&heap)

    return u_arr, order_arr
