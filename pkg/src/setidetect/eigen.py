"""Eigenvalues of Hermitian matrices.

``eigvalsh(a, method="lapack")`` wraps LAPACK's Hermitian driver through numpy.
``method="jacobi"`` runs a cyclic complex Jacobi iteration with round-robin
ordering: each step applies ``m/2`` disjoint plane rotations at once.
"""

from __future__ import annotations

import numpy as np

JACOBI_TOL = 1e-12
MAX_SWEEPS = 60


def _round_robin(m: int) -> list[list[tuple[int, int]]]:
    """Pairings covering every (p, q), p < q, once per sweep of ``m - 1`` steps."""
    players = list(range(m + (m % 2)))
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = []
        for i in range(size // 2):
            p, q = players[i], players[size - 1 - i]
            if p < m and q < m:
                pairs.append((min(p, q), max(p, q)))
        rounds.append(pairs)
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.sqrt(max(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2), 0.0)))


def jacobi_eigvalsh(a: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Ascending eigenvalues of Hermitian ``a`` by cyclic Jacobi rotations.

    Stops once the off-diagonal Frobenius mass is at most
    ``tol * max(|trace|, ||a||_F)``.
    """
    a = np.array(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    m = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    if m == 1:
        return a.real.diagonal().copy()

    scale = max(abs(np.trace(a).real), np.linalg.norm(a))
    if scale == 0:
        return np.zeros(m)
    rounds = _round_robin(m)
    for _ in range(max_sweeps):
        if off_diagonal_norm(a) <= tol * scale:
            break
        for pairs in rounds:
            p = np.array([pq[0] for pq in pairs])
            q = np.array([pq[1] for pq in pairs])
            apq = a[p, q]
            mag = np.abs(apq)
            active = mag > 0
            if not active.any():
                continue
            p, q, apq, mag = p[active], q[active], apq[active], mag[active]
            app, aqq = a[p, p].real, a[q, q].real
            theta = (aqq - app) / (2.0 * mag)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta**2 + 1.0))
            cs = 1.0 / np.sqrt(t**2 + 1.0)
            sn = t * cs
            phase = np.conj(apq) / mag
            v = np.eye(m, dtype=np.complex128)
            v[p, p] = cs
            v[p, q] = sn
            v[q, p] = -sn * phase
            v[q, q] = cs * phase
            a = v.conj().T @ a @ v
        a = 0.5 * (a + a.conj().T)
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    return np.sort(a.real.diagonal())


def eigvalsh(a: np.ndarray, method: str = "lapack") -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix."""
    if method == "lapack":
        return np.linalg.eigvalsh(a)
    if method == "jacobi":
        return jacobi_eigvalsh(a)
    raise ValueError(f"unknown eigen method {method!r}")
