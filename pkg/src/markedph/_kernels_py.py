"""Pure-Python implementation of the hot kernels.

Mirrors ``_kernels.pyx`` line for line so both backends return the same
numbers; the compiled module is preferred when it is importable.
"""
import math
from itertools import combinations

import numpy as np

# relative tolerances for accepting a support-set candidate
_FEAS_TOL = 1e-12
_BARY_TOL = 1e-12
_PIVOT_TOL = 1e-13


def _solve_small(G, rhs_list):
    """Gaussian elimination with partial pivoting on a tiny dense system.

    Solves ``G x = rhs`` for every right-hand side in ``rhs_list``.
    Returns None when ``G`` is numerically singular.
    """
    m = len(G)
    A = [row[:] for row in G]
    B = [list(r) for r in rhs_list]
    scale = max(abs(A[i][i]) for i in range(m)) or 1.0
    for col in range(m):
        piv = max(range(col, m), key=lambda i: abs(A[i][col]))
        if abs(A[piv][col]) <= _PIVOT_TOL * scale:
            return None
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            for b in B:
                b[col], b[piv] = b[piv], b[col]
        inv = 1.0 / A[col][col]
        for i in range(col + 1, m):
            f = A[i][col] * inv
            if f != 0.0:
                Ai, Ac = A[i], A[col]
                for k in range(col, m):
                    Ai[k] -= f * Ac[k]
                for b in B:
                    b[i] -= f * b[col]
    out = []
    for b in B:
        x = [0.0] * m
        for i in range(m - 1, -1, -1):
            s = b[i]
            Ai = A[i]
            for k in range(i + 1, m):
                s -= Ai[k] * x[k]
            x[i] = s / Ai[i]
        out.append(x)
    return out


def _objective(pts, radii, w):
    best = -math.inf
    for p, r in zip(pts, radii):
        s = 0.0
        for a, b in zip(p, w):
            s += (a - b) * (a - b)
        v = math.sqrt(s) - r
        if v > best:
            best = v
    return best


def _quadratic_roots(A, B, C, tol):
    # roots of A T^2 + 2 B T + C = 0
    if abs(A) <= tol:
        if B == 0.0:
            return []
        return [-C / (2.0 * B)]
    disc = B * B - A * C
    if disc < 0.0:
        if disc < -tol * (B * B + abs(A * C) + 1.0):
            return []
        disc = 0.0
    sq = math.sqrt(disc)
    q = -(B + math.copysign(sq, B))
    roots = [q / A]
    if q != 0.0:
        roots.append(C / q)
    return roots


def smallest_intersecting_ball(pts, radii):
    """Minimise ``max_i (|x_i - w| - r_i)`` over ``w``.

    The optimum is pinned by a support set of at most ``d + 1`` points on
    which all terms are equal and whose convex hull contains ``w``; every
    such set is enumerated and the first one satisfying the optimality
    conditions is returned. ``pts`` should already be centred.
    """
    pts = [list(map(float, p)) for p in pts]
    radii = [float(r) for r in radii]
    n = len(pts)
    d = len(pts[0])
    scale = 1.0
    for p in pts:
        for c in p:
            scale = max(scale, abs(c))
    for r in radii:
        scale = max(scale, abs(r))
    tol = _FEAS_TOL * scale
    best = math.inf
    for k in range(1, min(n, d + 1) + 1):
        for S in combinations(range(n), k):
            x0 = pts[S[0]]
            r0 = radii[S[0]]
            if k == 1:
                cands = [(-r0, list(x0), [1.0])]
            else:
                E = [[pts[j][c] - x0[c] for c in range(d)] for j in S[1:]]
                G = [[sum(a * b for a, b in zip(ei, ej)) for ej in E] for ei in E]
                rs = [radii[j] for j in S[1:]]
                rhs_a = [(G[i][i] - rs[i] * rs[i] + r0 * r0) * 0.5 for i in range(k - 1)]
                rhs_b = [-(rs[i] - r0) for i in range(k - 1)]
                sol = _solve_small(G, [rhs_a, rhs_b])
                if sol is None:
                    continue
                a, b = sol
                bGb = sum(u * v for u, v in zip(b, rhs_b))
                aGb = sum(u * v for u, v in zip(a, rhs_b))
                aGa = sum(u * v for u, v in zip(a, rhs_a))
                cands = []
                for T in _quadratic_roots(bGb - 1.0, aGb - r0, aGa - r0 * r0, 1e-14):
                    alpha = [a[i] + T * b[i] for i in range(k - 1)]
                    w = [x0[c] + sum(alpha[i] * E[i][c] for i in range(k - 1)) for c in range(d)]
                    cands.append((T, w, [1.0 - sum(alpha)] + alpha))
            for T, w, bary in cands:
                if any(T + radii[j] < -tol for j in S):
                    continue
                val = _objective(pts, radii, w)
                if val < best:
                    best = val
                if min(bary) < -_BARY_TOL:
                    continue
                if val <= T + tol:
                    return val
    return best


def smallest_intersecting_ball_batch(coords, radii, simplices):
    """Evaluate :func:`smallest_intersecting_ball` on many vertex subsets.

    Each row of ``simplices`` indexes into ``coords``/``radii``; the subset
    is centred on its centroid before solving.
    """
    coords = np.asarray(coords, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    simplices = np.asarray(simplices, dtype=np.int64)
    out = np.empty(len(simplices), dtype=np.float64)
    for i, row in enumerate(simplices):
        sub = coords[row]
        sub = sub - sub.mean(axis=0)
        out[i] = smallest_intersecting_ball(sub.tolist(), radii[row].tolist())
    return out


def reduce_boundary(indptr, indices, ncols):
    """Left-to-right column reduction over GF(2).

    ``indptr``/``indices`` give the boundary matrix in compressed-column
    form with row indices referring to earlier columns. Returns the lowest
    nonzero row of every reduced column (``-1`` for zero columns).
    """
    indptr = np.asarray(indptr, dtype=np.int64).tolist()
    indices = np.asarray(indices, dtype=np.int64).tolist()
    low = [-1] * ncols
    pivot_of = {}
    reduced = {}
    for j in range(ncols):
        col = set(indices[indptr[j]:indptr[j + 1]])
        while col:
            piv = max(col)
            k = pivot_of.get(piv)
            if k is None:
                break
            col ^= reduced[k]
        if col:
            piv = max(col)
            low[j] = piv
            pivot_of[piv] = j
            reduced[j] = col
    return np.asarray(low, dtype=np.int64)
