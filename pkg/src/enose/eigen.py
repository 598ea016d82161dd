"""Self-contained symmetric eigensolver (cyclic Jacobi, batched rotations).

Pairs are visited in round-robin rounds so every round rotates n/2
disjoint planes at once; disjoint plane rotations commute, which makes
the batched update exactly equivalent to the sequential cyclic sweep
while keeping the inner loop in numpy.
"""

from __future__ import annotations

import numpy as np


def _round_robin_rounds(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: m-1 rounds of m/2 disjoint index pairs (m even)."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p = np.array([players[k] for k in range(m // 2)])
        q = np.array([players[m - 1 - k] for k in range(m // 2)])
        rounds.append((p, q))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigenvalues and eigenvectors of a symmetric matrix.

    Returns (w, v) with eigenvalues descending (ties keep diagonal
    order) and eigenvectors in the columns of v, so a = v @ diag(w) @ v.T.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    if not np.allclose(a, a.T, atol=1e-10 * (1.0 + np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if n == 1:
        return a[0, :1].copy(), v

    base = float(np.sqrt(np.sum(a * a)))
    if base == 0.0:
        return np.zeros(n), v
    floor_cut = tol * base / (10.0 * n)

    m = n if n % 2 == 0 else n + 1
    rounds = _round_robin_rounds(m)

    for _ in range(max_sweeps):
        # off-diagonal Frobenius norm, computed directly (a difference of
        # squared norms cancels catastrophically near convergence)
        offmat = a - np.diag(np.diag(a))
        off = float(np.sqrt(np.sum(offmat * offmat)))
        if off <= tol * base:
            break
        # threshold sweep: skip rotations that are small against the
        # remaining off-diagonal mass; the cut shrinks with it, so the
        # final accuracy is still set by tol alone
        skip_cut = max(floor_cut, 0.25 * off / n)
        for p_all, q_all in rounds:
            real = (p_all < n) & (q_all < n)
            p, q = p_all[real], q_all[real]
            apq = a[p, q]
            active = np.abs(apq) > skip_cut
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]

            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(theta == 0.0, 1.0, t)  # sign(0) = 0 would stall
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            ap, aq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    else:
        raise RuntimeError(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def orient_columns(v: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's largest-magnitude entry is positive."""
    v = v.copy()
    for j in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        if v[i, j] < 0:
            v[:, j] = -v[:, j]
    return v
