# cython: language_level=3
"""Compiled hot kernels.

Same algorithms as ``_kernels_py``; see that module for the reference
version. Only the inner loops live here.
"""
from libc.math cimport sqrt, fabs, copysign, INFINITY
from libc.stdlib cimport malloc, free
from libcpp.vector cimport vector

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double _FEAS_TOL = 1e-12
cdef double _BARY_TOL = 1e-12
cdef double _PIVOT_TOL = 1e-13


cdef int _solve2(double* G, double* ra, double* rb, int m) noexcept nogil:
    # in-place elimination on G (m x m, row major), solving for ra and rb
    cdef int col, i, k, piv
    cdef double scale = 0.0, best, f, tmp, s
    for i in range(m):
        if fabs(G[i * m + i]) > scale:
            scale = fabs(G[i * m + i])
    if scale == 0.0:
        scale = 1.0
    for col in range(m):
        piv = col
        best = fabs(G[col * m + col])
        for i in range(col + 1, m):
            if fabs(G[i * m + col]) > best:
                best = fabs(G[i * m + col])
                piv = i
        if best <= _PIVOT_TOL * scale:
            return 0
        if piv != col:
            for k in range(m):
                tmp = G[col * m + k]
                G[col * m + k] = G[piv * m + k]
                G[piv * m + k] = tmp
            tmp = ra[col]; ra[col] = ra[piv]; ra[piv] = tmp
            tmp = rb[col]; rb[col] = rb[piv]; rb[piv] = tmp
        for i in range(col + 1, m):
            f = G[i * m + col] / G[col * m + col]
            if f != 0.0:
                for k in range(col, m):
                    G[i * m + k] -= f * G[col * m + k]
                ra[i] -= f * ra[col]
                rb[i] -= f * rb[col]
    for i in range(m - 1, -1, -1):
        s = ra[i]
        for k in range(i + 1, m):
            s -= G[i * m + k] * ra[k]
        ra[i] = s / G[i * m + i]
        s = rb[i]
        for k in range(i + 1, m):
            s -= G[i * m + k] * rb[k]
        rb[i] = s / G[i * m + i]
    return 1


cdef double _objective(const double* pts, const double* radii, int n, int d,
                       const double* w) noexcept nogil:
    cdef double best = -INFINITY, s, diff, v
    cdef int i, c
    for i in range(n):
        s = 0.0
        for c in range(d):
            diff = pts[i * d + c] - w[c]
            s += diff * diff
        v = sqrt(s) - radii[i]
        if v > best:
            best = v
    return best


cdef int _next_combination(int* idx, int k, int n) noexcept nogil:
    cdef int i = k - 1, j
    while i >= 0 and idx[i] == n - k + i:
        i -= 1
    if i < 0:
        return 0
    idx[i] += 1
    for j in range(i + 1, k):
        idx[j] = idx[j - 1] + 1
    return 1


cdef double _sib(const double* pts, const double* radii, int n, int d) noexcept nogil:
    cdef double scale = 1.0, tol, best = INFINITY
    cdef int i, j, c, k, m, kmax, ok, nroots, ri, good
    cdef double r0, A, B, C, disc, sq, q, T, val, bGb, aGb, aGa, bsum, bmin
    cdef double roots[2]
    cdef int* idx = <int*> malloc((d + 2) * sizeof(int))
    cdef double* E = <double*> malloc((d + 1) * d * sizeof(double))
    cdef double* G = <double*> malloc((d + 1) * (d + 1) * sizeof(double))
    cdef double* ra = <double*> malloc((d + 1) * sizeof(double))
    cdef double* rb = <double*> malloc((d + 1) * sizeof(double))
    cdef double* rb0 = <double*> malloc((d + 1) * sizeof(double))
    cdef double* ra0 = <double*> malloc((d + 1) * sizeof(double))
    cdef double* w = <double*> malloc(d * sizeof(double))
    cdef double* alpha = <double*> malloc((d + 1) * sizeof(double))

    for i in range(n * d):
        if fabs(pts[i]) > scale:
            scale = fabs(pts[i])
    for i in range(n):
        if fabs(radii[i]) > scale:
            scale = fabs(radii[i])
    tol = _FEAS_TOL * scale

    kmax = n if n < d + 1 else d + 1
    for k in range(1, kmax + 1):
        for i in range(k):
            idx[i] = i
        while True:
            r0 = radii[idx[0]]
            m = k - 1
            nroots = 0
            if k == 1:
                roots[0] = -r0
                nroots = 1
            else:
                for i in range(m):
                    for c in range(d):
                        E[i * d + c] = pts[idx[i + 1] * d + c] - pts[idx[0] * d + c]
                for i in range(m):
                    for j in range(m):
                        q = 0.0
                        for c in range(d):
                            q += E[i * d + c] * E[j * d + c]
                        G[i * m + j] = q
                for i in range(m):
                    ra[i] = (G[i * m + i] - radii[idx[i + 1]] * radii[idx[i + 1]] + r0 * r0) * 0.5
                    rb[i] = -(radii[idx[i + 1]] - r0)
                    ra0[i] = ra[i]
                    rb0[i] = rb[i]
                ok = _solve2(G, ra, rb, m)
                if ok:
                    bGb = 0.0; aGb = 0.0; aGa = 0.0
                    for i in range(m):
                        bGb += rb[i] * rb0[i]
                        aGb += ra[i] * rb0[i]
                        aGa += ra[i] * ra0[i]
                    A = bGb - 1.0
                    B = aGb - r0
                    C = aGa - r0 * r0
                    if fabs(A) <= 1e-14:
                        if B != 0.0:
                            roots[0] = -C / (2.0 * B)
                            nroots = 1
                    else:
                        disc = B * B - A * C
                        if disc < 0.0 and disc >= -1e-14 * (B * B + fabs(A * C) + 1.0):
                            disc = 0.0
                        if disc >= 0.0:
                            sq = sqrt(disc)
                            q = -(B + copysign(sq, B))
                            roots[0] = q / A
                            nroots = 1
                            if q != 0.0:
                                roots[1] = C / q
                                nroots = 2
            for ri in range(nroots):
                T = roots[ri]
                good = 1
                for i in range(k):
                    if T + radii[idx[i]] < -tol:
                        good = 0
                if not good:
                    continue
                if k == 1:
                    for c in range(d):
                        w[c] = pts[idx[0] * d + c]
                    bmin = 1.0
                else:
                    bsum = 0.0
                    bmin = INFINITY
                    for i in range(m):
                        alpha[i] = ra[i] + T * rb[i]
                        bsum += alpha[i]
                        if alpha[i] < bmin:
                            bmin = alpha[i]
                    if 1.0 - bsum < bmin:
                        bmin = 1.0 - bsum
                    for c in range(d):
                        q = pts[idx[0] * d + c]
                        for i in range(m):
                            q += alpha[i] * E[i * d + c]
                        w[c] = q
                val = _objective(pts, radii, n, d, w)
                if val < best:
                    best = val
                if bmin < -_BARY_TOL:
                    continue
                if val <= T + tol:
                    free(idx); free(E); free(G); free(ra); free(rb)
                    free(ra0); free(rb0); free(w); free(alpha)
                    return val
            if not _next_combination(idx, k, n):
                break
    free(idx); free(E); free(G); free(ra); free(rb)
    free(ra0); free(rb0); free(w); free(alpha)
    return best


def smallest_intersecting_ball(pts, radii):
    """Minimise ``max_i (|x_i - w| - r_i)`` over ``w`` (points pre-centred)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] P = np.ascontiguousarray(pts, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] R = np.ascontiguousarray(radii, dtype=np.float64)
    return _sib(<double*> P.data, <double*> R.data, P.shape[0], P.shape[1])


def smallest_intersecting_ball_batch(coords, radii, simplices):
    """Centre each vertex subset on its centroid and solve it."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] X = np.ascontiguousarray(coords, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] R = np.ascontiguousarray(radii, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] S = np.ascontiguousarray(simplices, dtype=np.int64)
    cdef Py_ssize_t m = S.shape[0], k = S.shape[1], d = X.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m, dtype=np.float64)
    cdef double* buf = <double*> malloc(k * d * sizeof(double))
    cdef double* rbuf = <double*> malloc(k * sizeof(double))
    cdef double mean
    cdef Py_ssize_t i, j, c
    with nogil:
        for i in range(m):
            for c in range(d):
                mean = 0.0
                for j in range(k):
                    mean += X[S[i, j], c]
                mean /= k
                for j in range(k):
                    buf[j * d + c] = X[S[i, j], c] - mean
            for j in range(k):
                rbuf[j] = R[S[i, j]]
            out[i] = _sib(buf, rbuf, <int> k, <int> d)
    free(buf)
    free(rbuf)
    return out


def reduce_boundary(indptr, indices, Py_ssize_t ncols):
    """Left-to-right GF(2) column reduction; returns lowest rows (-1 if zero)."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] P = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] I = np.ascontiguousarray(indices, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] low = np.full(ncols, -1, dtype=np.int64)
    cdef vector[vector[long long]] cols
    cdef vector[long long] pivot_of
    cdef vector[long long] cur, tmp
    cdef Py_ssize_t j, a, b, na, nb
    cdef long long piv, k, x, y
    cols.resize(ncols)
    pivot_of.assign(ncols, -1)
    with nogil:
        for j in range(ncols):
            cur.clear()
            for a in range(P[j], P[j + 1]):
                cur.push_back(I[a])
            while cur.size() > 0:
                piv = cur.back()
                k = pivot_of[piv]
                if k < 0:
                    break
                # symmetric difference of two sorted vectors
                tmp.clear()
                na = cur.size()
                nb = cols[k].size()
                a = 0
                b = 0
                while a < na and b < nb:
                    x = cur[a]
                    y = cols[k][b]
                    if x < y:
                        tmp.push_back(x)
                        a += 1
                    elif y < x:
                        tmp.push_back(y)
                        b += 1
                    else:
                        a += 1
                        b += 1
                while a < na:
                    tmp.push_back(cur[a])
                    a += 1
                while b < nb:
                    tmp.push_back(cols[k][b])
                    b += 1
                cur.swap(tmp)
            if cur.size() > 0:
                piv = cur.back()
                low[j] = piv
                pivot_of[piv] = j
                cols[j] = cur
    return low
