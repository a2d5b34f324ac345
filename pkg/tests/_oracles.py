"""Independent reference computations used by the tests.

None of these share code paths with the package's solvers: they use
generic optimisation, exhaustive enumeration or one-dimensional interval
arithmetic.
"""
import itertools
import math

import numpy as np
from scipy.optimize import minimize


def cech_radii_reference(pos, radii):
    """``max(0, min_w max_i |w - x_i| - r_i)`` by SLSQP on the epigraph, multi-start."""
    pos = np.asarray(pos, dtype=float).reshape(len(radii), -1)
    radii = np.asarray(radii, dtype=float)
    n, d = pos.shape
    if n == 1:
        return 0.0

    def obj(w):
        return float(np.max(np.linalg.norm(pos - w, axis=1) - radii))

    best = math.inf
    starts = [pos.mean(axis=0)] + [pos[i] * 0.5 + pos[j] * 0.5 for i, j in itertools.combinations(range(n), 2)]
    for w0 in starts:
        z0 = np.append(w0, obj(w0) + 1e-3)
        cons = [
            {"type": "ineq", "fun": (lambda z, i=i: z[d] + radii[i] - np.linalg.norm(z[:d] - pos[i]))}
            for i in range(n)
        ]
        res = minimize(lambda z: z[d], z0, constraints=cons, method="SLSQP",
                       options={"ftol": 1e-15, "maxiter": 500})
        best = min(best, obj(res.x[:d]))
    return max(best, 0.0)


def interval_first_meet(centres, halfwidth_fns, tol=1e-13):
    """1-D: first ``t`` at which intervals ``[c_i - h_i(t), c_i + h_i(t)]`` share a point."""
    centres = np.asarray(centres, dtype=float)

    def meet(t):
        h = np.array([f(t) for f in halfwidth_fns])
        return np.max(centres - h) <= np.min(centres + h)

    lo, hi = 0.0, 1.0
    if meet(0.0):
        return 0.0
    while not meet(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if meet(mid) else (mid, hi)
    return hi


def brute_force_complex(kappa, pos, marks, q_max, t_max):
    """``{vertex tuple: birth}`` over all subsets of size ``<= q_max + 1``.

    Births are the largest κ over all nonempty faces, which equals κ
    itself up to round-off because κ is monotone.
    """
    n = len(pos)
    raw = {}
    for k in range(1, q_max + 2):
        for sigma in itertools.combinations(range(n), k):
            idx = list(sigma)
            raw[sigma] = kappa.value(pos[idx], marks[idx])
    out = {}
    for sigma, v in raw.items():
        if v > t_max:
            continue
        faces = [f for k in range(1, len(sigma)) for f in itertools.combinations(sigma, k)]
        if any(raw[f] > t_max for f in faces):
            continue
        out[sigma] = max([v] + [raw[f] for f in faces])
    return out


def union_find_betti0(n, edges, r, s):
    """``β_0^{r,s}`` of a graph filtration: components at ``r`` that stay distinct at ``s``.

    ``edges`` is a list of ``(u, v, birth)``; all vertices are born at 0.
    """
    def components(t):
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for u, v, b in edges:
            if b <= t:
                parent[find(u)] = find(v)
        return [find(i) for i in range(n)]

    cr, cs = components(r), components(s)
    return len({cs[i] for i in set(cr)})


def growth_inverse_closed_form(g, y):
    """Closed-form generalised inverse of the registered growth laws (vectorised)."""
    p = g.param_dict
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if g.name == "linear":
            return y / p["c"]
        if g.name == "affine":
            return np.maximum(0.0, (y - p["b"]) / p["c"])
        if g.name == "power":
            return (y / p["c"]) ** (1.0 / p["p"])
        u = (y - p["b"]) / p["a"]
        out = -p["tau"] * np.log1p(-np.clip(u, 0.0, 1.0))
        return np.where(u <= 0, 0.0, np.where(u >= 1, np.inf, out))


def cech_objective(kappa, pos, marks):
    """The inner objective ``w -> max_i g_i(w)`` of a Čech-type κ, vectorised over ``W``."""
    pos = np.asarray(pos, dtype=float)

    def radii(W):
        dist = np.linalg.norm(W[:, None, :] - pos[None], axis=2)
        return np.maximum(np.max(dist - marks[None], axis=1), 0.0)

    def growth(W):
        dist = np.linalg.norm(W[:, None, :] - pos[None], axis=2)
        cols = [growth_inverse_closed_form(kappa.growth[int(m)], dist[:, i]) for i, m in enumerate(marks)]
        return np.max(np.stack(cols, axis=1), axis=1)

    def shape(W):
        cols = [kappa.shapes[int(m)].gauge(W - pos[i]) for i, m in enumerate(marks)]
        return np.max(np.stack(cols, axis=1), axis=1)

    return {"cech_radii": radii, "cech_growth": growth, "cech_shape": shape}[kappa.kind]


def dense_grid_minimum(objective, lo, hi, n=401):
    """Minimum of ``objective`` over a single ``n^d`` grid, its spacing, and an
    empirical Lipschitz constant from neighbouring nodes."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = len(lo)
    axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    W = np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    vals = objective(W).reshape((n,) * d)
    h = float(np.max((hi - lo) / (n - 1)))
    lip = 0.0
    for ax in range(d):
        with np.errstate(invalid="ignore"):
            diff = np.abs(np.diff(vals, axis=ax))
        finite = diff[np.isfinite(diff)]
        if finite.size:
            lip = max(lip, float(finite.max()) / h)
    return float(vals.min()), h, lip
