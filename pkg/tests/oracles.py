"""Independent reference implementations used only by the test suite.

Each oracle deliberately takes a different computational route from the
code under test: closed-form characteristic polynomials instead of
iterative rotations, explicit normal equations instead of lstsq,
projected gradient ascent instead of SMO, brute-force window means
instead of cumulative sums.
"""

from __future__ import annotations

import math

import numpy as np


def charpoly_eigvalsh(a) -> np.ndarray:
    """Closed-form eigenvalues of a symmetric matrix up to 3x3, descending."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a[0, :1].copy()
    if n == 2:
        mean = 0.5 * (a[0, 0] + a[1, 1])
        disc = math.sqrt(max(0.0, (0.5 * (a[0, 0] - a[1, 1])) ** 2 + a[0, 1] ** 2))
        return np.array([mean + disc, mean - disc])
    if n != 3:
        raise ValueError("oracle handles matrices up to 3x3")
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    q = np.trace(a) / 3.0
    if p1 == 0.0:
        return np.sort(np.diag(a))[::-1]
    p2 = sum((a[i, i] - q) ** 2 for i in range(3)) + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    b = (a - q * np.eye(3)) / p
    r = np.linalg.det(b) / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    lam1 = q + 2.0 * p * math.cos(phi)
    lam3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    lam2 = 3.0 * q - lam1 - lam3
    return np.sort(np.array([lam1, lam2, lam3]))[::-1]


def eigvec_3x3(a, lam) -> np.ndarray:
    """Unit eigenvector of a symmetric 3x3 matrix for a simple eigenvalue."""
    a = np.asarray(a, dtype=float)
    m = a - lam * np.eye(3)
    candidates = [
        np.cross(m[0], m[1]),
        np.cross(m[0], m[2]),
        np.cross(m[1], m[2]),
    ]
    v = max(candidates, key=lambda c: float(np.linalg.norm(c)))
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("eigenvalue is not simple")
    return v / norm


def brute_moving_average(x, window_m: int) -> np.ndarray:
    """Direct shrink-window mean, one python loop per output element."""
    x = np.asarray(x, dtype=float)
    half = window_m // 2
    out = np.empty_like(x)
    for i in range(x.size):
        lo = max(0, i - half)
        hi = min(x.size, i + half + 1)
        out[i] = x[lo:hi].mean()
    return out


def normal_eq_polyfit(s, y, degree: int) -> np.ndarray:
    """Polynomial coefficients from the explicit normal equations."""
    s = np.asarray(s, dtype=float)
    v = np.vander(s, degree + 1, increasing=True)
    return np.linalg.solve(v.T @ v, v.T @ np.asarray(y, dtype=float))


def project_box_hyperplane(z, y, c, tol: float = 1e-14) -> np.ndarray:
    """Euclidean projection onto {0 <= a <= C, sum(a*y) = 0} by bisection."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)

    def clipped(mu):
        return np.clip(z - mu * y, 0.0, c)

    span = float(np.abs(z).max() + c + 1.0)
    lo, hi = -span, span
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = float(clipped(mid) @ y)
        if abs(g) <= tol:
            break
        if g > 0:
            lo = mid
        else:
            hi = mid
    return clipped(0.5 * (lo + hi))


def projected_gradient_dual(k, y, c, iters: int = 30000):
    """Maximize the SVM dual by projected gradient ascent.

    Returns (alpha, objective).  Step size is 1/lambda_max(Q) from power
    iteration; wholly independent of the SMO updates it checks.
    """
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    q = (y[:, None] * y[None, :]) * k
    v = np.ones(y.size) / math.sqrt(y.size)
    for _ in range(100):
        w = q @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break
        v = w / norm
    lam_max = float(v @ q @ v)
    step = 1.0 / max(lam_max, 1e-12)

    alpha = project_box_hyperplane(np.zeros(y.size), y, c)
    prev_obj = -np.inf
    for it in range(iters):
        grad = 1.0 - q @ alpha
        alpha = project_box_hyperplane(alpha + step * grad, y, c)
        if it % 200 == 0:
            obj = float(alpha.sum() - 0.5 * alpha @ q @ alpha)
            if abs(obj - prev_obj) < 1e-12:
                break
            prev_obj = obj
    obj = float(alpha.sum() - 0.5 * alpha @ q @ alpha)
    return alpha, obj


def grid_min_power_law(conc, excess, n_a: int = 120, n_b: int = 120):
    """Coarse grid search of sum((a*c**b - excess)^2); returns (a, b, sse)."""
    conc = np.asarray(conc, dtype=float)
    excess = np.asarray(excess, dtype=float)
    best = (math.inf, 0.0, 0.0)
    for b in np.linspace(0.02, 1.0, n_b):
        x = conc**b
        for a in np.linspace(0.0, 3.0, n_a):
            sse = float(np.sum((a * x - excess) ** 2))
            if sse < best[0]:
                best = (sse, a, b)
    return best[1], best[2], best[0]
