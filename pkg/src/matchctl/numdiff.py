"""Central finite differences on dimensionless charts.

Step 1e-5 balances truncation against roundoff for O(1) quantities.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

DEFAULT_STEP = 1e-5


def fd_gradient(f: Callable[[np.ndarray], float], q: np.ndarray,
                h: float = DEFAULT_STEP) -> np.ndarray:
    """Gradient of a scalar function by central differences."""
    q = np.asarray(q, dtype=float)
    out = np.empty(q.size)
    for i in range(q.size):
        qp, qm = q.copy(), q.copy()
        qp[i] += h
        qm[i] -= h
        out[i] = (f(qp) - f(qm)) / (2.0 * h)
    return out


def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], q: np.ndarray,
                h: float = DEFAULT_STEP) -> np.ndarray:
    """Jacobian J[i, j] = d f_i / d q_j by central differences."""
    q = np.asarray(q, dtype=float)
    cols = []
    for j in range(q.size):
        qp, qm = q.copy(), q.copy()
        qp[j] += h
        qm[j] -= h
        cols.append((np.asarray(f(qp), dtype=float)
                     - np.asarray(f(qm), dtype=float)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def fd_hessian(f: Callable[[np.ndarray], float], q: np.ndarray,
               h: float = 1e-4) -> np.ndarray:
    """Symmetric Hessian by second-order central differences."""
    q = np.asarray(q, dtype=float)
    n = q.size
    out = np.empty((n, n))
    f0 = f(q)
    for i in range(n):
        qp, qm = q.copy(), q.copy()
        qp[i] += h
        qm[i] -= h
        out[i, i] = (f(qp) - 2.0 * f0 + f(qm)) / h**2
    for i in range(n):
        for j in range(i + 1, n):
            qpp, qpm, qmp, qmm = q.copy(), q.copy(), q.copy(), q.copy()
            qpp[[i, j]] += h
            qmm[[i, j]] -= h
            qpm[i] += h
            qpm[j] -= h
            qmp[i] -= h
            qmp[j] += h
            out[i, j] = out[j, i] = (f(qpp) - f(qpm) - f(qmp) + f(qmm)) / (4.0 * h**2)
    return out
