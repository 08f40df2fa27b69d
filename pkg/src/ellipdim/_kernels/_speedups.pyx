# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: P1 stiffness triplets and masked energy Grams."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def stiffness_triplets(cnp.int32_t[:, ::1] tris,
                       double[:, ::1] bx, double[:, ::1] by,
                       double[::1] area,
                       double[::1] a11, double[::1] a12, double[::1] a22):
    """COO triplets of the stiffness form int a grad(u) . grad(v) dx."""
    cdef Py_ssize_t ne = tris.shape[0]
    rows_arr = np.empty(9 * ne, dtype=np.int64)
    cols_arr = np.empty(9 * ne, dtype=np.int64)
    vals_arr = np.empty(9 * ne, dtype=np.float64)
    cdef cnp.int64_t[::1] rows = rows_arr
    cdef cnp.int64_t[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr
    cdef Py_ssize_t e, i, j, p
    cdef double w, c11, c12, c22, gi_x, gi_y
    p = 0
    for e in range(ne):
        w = area[e]
        c11 = w * a11[e]
        c12 = w * a12[e]
        c22 = w * a22[e]
        for i in range(3):
            gi_x = bx[e, i]
            gi_y = by[e, i]
            for j in range(3):
                rows[p] = tris[e, i]
                cols[p] = tris[e, j]
                vals[p] = (c11 * gi_x * bx[e, j]
                           + c12 * (gi_x * by[e, j] + gi_y * bx[e, j])
                           + c22 * gi_y * by[e, j])
                p += 1
    return rows_arr, cols_arr, vals_arr


def energy_gram(cnp.int32_t[:, ::1] tris,
                double[:, ::1] bx, double[:, ::1] by,
                double[::1] area,
                double[::1] a11, double[::1] a12, double[::1] a22,
                double[:, ::1] u, cnp.int64_t[::1] elems):
    """Gram matrix of the energy form over a subset of elements.

    u has one column per function; elems lists the element ids to include.
    """
    cdef Py_ssize_t m = u.shape[1]
    gram_arr = np.zeros((m, m), dtype=np.float64)
    gx_arr = np.empty(m, dtype=np.float64)
    gy_arr = np.empty(m, dtype=np.float64)
    cdef double[:, ::1] gram = gram_arr
    cdef double[::1] gx = gx_arr
    cdef double[::1] gy = gy_arr
    cdef Py_ssize_t idx, e, f, l
    cdef Py_ssize_t i0, i1, i2
    cdef double w, c11, c12, c22
    for idx in range(elems.shape[0]):
        e = elems[idx]
        i0 = tris[e, 0]
        i1 = tris[e, 1]
        i2 = tris[e, 2]
        for f in range(m):
            gx[f] = bx[e, 0] * u[i0, f] + bx[e, 1] * u[i1, f] + bx[e, 2] * u[i2, f]
            gy[f] = by[e, 0] * u[i0, f] + by[e, 1] * u[i1, f] + by[e, 2] * u[i2, f]
        w = area[e]
        c11 = w * a11[e]
        c12 = w * a12[e]
        c22 = w * a22[e]
        for f in range(m):
            for l in range(f, m):
                gram[f, l] += (c11 * gx[f] * gx[l]
                               + c12 * (gx[f] * gy[l] + gy[f] * gx[l])
                               + c22 * gy[f] * gy[l])
    for f in range(m):
        for l in range(f + 1, m):
            gram[l, f] = gram[f, l]
    return gram_arr
