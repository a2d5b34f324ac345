"""Numerical helpers behind the Čech-type filtration functions."""
import math
from typing import Callable

import numpy as np

BISECT_TOL = 1e-12
_DOUBLING_CAP = 1e15


def first_true(pred: Callable[[float], bool], tol: float = BISECT_TOL) -> float:
    """Infimum of ``{t >= 0 : pred(t)}`` for a monotone predicate.

    The bracket is found by doubling from 1; ``inf`` is returned when the
    predicate never holds below ``1e15``. The result is the upper end of
    the final bracket, so ``pred(result)`` holds.
    """
    if pred(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while not pred(hi):
        lo = hi
        hi *= 2.0
        if hi > _DOUBLING_CAP:
            return math.inf
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def generalized_inverse(fn: Callable[[float], float], y: float, tol: float = BISECT_TOL) -> float:
    """``inf{s >= 0 : fn(s) >= y}`` for a nondecreasing right-continuous ``fn``."""
    return first_true(lambda s: fn(s) >= y, tol)


def _soc_terms(z, soc_x, soc_a):
    d = soc_x.shape[1]
    u = z[:d] - soc_x
    t = z[d]
    s = soc_a**2 * t * t - np.einsum("ij,ij->i", u, u)
    grad_s = np.empty((len(soc_a), d + 1))
    grad_s[:, :d] = -2.0 * u
    grad_s[:, d] = 2.0 * soc_a**2 * t
    return s, grad_s


def minimax_barrier(
    lin_rows: np.ndarray,
    lin_rhs: np.ndarray,
    soc_x: np.ndarray,
    soc_a: np.ndarray,
    z0: np.ndarray,
    gap_tol: float,
) -> np.ndarray:
    """Minimise ``t`` over ``z = (w, t)`` subject to cone constraints.

    Linear constraints read ``lin_rows @ z <= lin_rhs``; second-order ones
    read ``|w - soc_x[i]| <= soc_a[i] * t``. A log-barrier path is followed
    with damped Newton steps (the barrier is self-concordant, so the step
    ``1 / (1 + decrement)`` stays feasible) until the duality gap bound
    falls below ``gap_tol``. ``z0`` must be strictly feasible.
    """
    z = np.asarray(z0, dtype=np.float64).copy()
    d = len(z) - 1
    nu = len(lin_rhs) + 2 * len(soc_a)
    c = np.zeros(d + 1)
    c[d] = 1.0
    tau = nu / max(abs(z[d]), 1e-12)
    has_soc = len(soc_a) > 0

    def feasible(zz):
        if len(lin_rhs) and np.any(lin_rhs - lin_rows @ zz <= 0.0):
            return False
        if has_soc:
            if zz[d] <= 0.0:
                return False
            s, _ = _soc_terms(zz, soc_x, soc_a)
            if np.any(s <= 0.0):
                return False
        return True

    for _ in range(200):
        for _ in range(50):
            g = tau * c
            H = np.zeros((d + 1, d + 1))
            if len(lin_rhs):
                sl = lin_rhs - lin_rows @ z
                inv = 1.0 / sl
                g = g + lin_rows.T @ inv
                H += (lin_rows * (inv * inv)[:, None]).T @ lin_rows
            if has_soc:
                s, gs = _soc_terms(z, soc_x, soc_a)
                inv = 1.0 / s
                g = g - gs.T @ inv
                H += (gs * (inv * inv)[:, None]).T @ gs
                # -Hess(s)/s with Hess(s) = diag(-2, ..., -2, 2 a^2)
                H[np.diag_indices(d)] += 2.0 * inv.sum()
                H[d, d] -= np.sum(2.0 * soc_a**2 * inv)
            try:
                step = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(H, g, rcond=None)[0]
            lam2 = float(-g @ step)
            if not np.isfinite(lam2) or lam2 < 0.0:
                break
            lam = math.sqrt(lam2)
            alpha = 1.0 if lam < 0.25 else 1.0 / (1.0 + lam)
            while alpha > 1e-12 and not feasible(z + alpha * step):
                alpha *= 0.5
            if alpha <= 1e-12:
                break
            z_new = z + alpha * step
            # at large tau the decrement stagnates at round-off level
            stalled = np.all(z_new == z)
            z = z_new
            if lam2 < 1e-10 or stalled:
                break
        if nu / tau < gap_tol:
            break
        tau *= 50.0
    return z
