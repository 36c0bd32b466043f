# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled mask kernels: RLE codec, intersection/union counting, dilation.

Mirrors the contracts of ``_pure.py``; one of the two is picked at import
time by :mod:`scenedit.kernels`.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def rle_encode(flat):
    cdef cnp.uint8_t[::1] data = np.ascontiguousarray(flat, dtype=np.uint8)
    cdef Py_ssize_t n = data.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    # worst case: alternating pixels plus a leading zero count
    out_arr = np.empty(n + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t m = 0
    cdef cnp.uint8_t current = 0
    cdef cnp.int64_t run = 0
    cdef Py_ssize_t i
    for i in range(n):
        if data[i] == current:
            run += 1
        else:
            out[m] = run
            m += 1
            current = data[i]
            run = 1
    out[m] = run
    m += 1
    return out_arr[:m].copy()


def rle_decode(counts, total):
    cdef cnp.int64_t[::1] runs = np.ascontiguousarray(counts, dtype=np.int64)
    cdef Py_ssize_t k = runs.shape[0]
    cdef cnp.int64_t s = 0
    cdef Py_ssize_t i
    for i in range(k):
        if runs[i] < 0:
            raise ValueError("negative run length")
        s += runs[i]
    if s != total:
        raise ValueError(f"run lengths sum to {s}, expected {total}")
    out_arr = np.zeros(total, dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_arr
    cdef Py_ssize_t pos = 0
    cdef cnp.int64_t j
    for i in range(k):
        if i % 2 == 1:
            for j in range(runs[i]):
                out[pos + j] = 1
        pos += runs[i]
    return out_arr


def inter_union(a, b):
    cdef cnp.uint8_t[::1] va = np.ascontiguousarray(a, dtype=np.uint8)
    cdef cnp.uint8_t[::1] vb = np.ascontiguousarray(b, dtype=np.uint8)
    cdef Py_ssize_t n = va.shape[0]
    cdef cnp.int64_t inter = 0, union = 0
    cdef Py_ssize_t i
    for i in range(n):
        if va[i] and vb[i]:
            inter += 1
        if va[i] or vb[i]:
            union += 1
    return int(inter), int(union)


def dilate(mask, radius):
    arr = np.ascontiguousarray(mask, dtype=np.uint8)
    if radius <= 0:
        return arr.copy()
    cdef cnp.uint8_t[:, ::1] src = arr
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef Py_ssize_t r = radius
    tmp_arr = np.zeros((h, w), dtype=np.uint8)
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] tmp = tmp_arr
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, lo, hi, k
    # horizontal pass
    for y in range(h):
        for x in range(w):
            if src[y, x]:
                lo = x - r if x - r > 0 else 0
                hi = x + r if x + r < w - 1 else w - 1
                for k in range(lo, hi + 1):
                    tmp[y, k] = 1
    # vertical pass
    for y in range(h):
        for x in range(w):
            if tmp[y, x]:
                lo = y - r if y - r > 0 else 0
                hi = y + r if y + r < h - 1 else h - 1
                for k in range(lo, hi + 1):
                    out[k, x] = 1
    return out_arr
