"""NumPy implementation of the multiplicative-update factorization loop.

Fallback for the compiled kernel in ``_mu_cy``; both implement the same
alternating updates for the Frobenius objective and must stay numerically
equivalent (same update order, same convergence rule).
"""

from __future__ import annotations

import numpy as np


def mu_factorize(
    V: np.ndarray,
    W: np.ndarray,
    H: np.ndarray,
    max_iter: int,
    tol: float,
    eps: float = 1e-12,
) -> np.ndarray:
    """Run multiplicative updates in place; returns the error trajectory.

    ``err[0]`` is the initial reconstruction error; one entry is appended per
    completed iteration. Iteration stops when the absolute error change drops
    below ``tol`` relative to the previous error.
    """
    err = [float(np.linalg.norm(V - W @ H))]
    for _ in range(max_iter):
        H *= (W.T @ V) / (W.T @ W @ H + eps)
        W *= (V @ H.T) / (W @ (H @ H.T) + eps)
        e = float(np.linalg.norm(V - W @ H))
        err.append(e)
        if abs(err[-2] - e) <= tol * max(err[-2], 1e-300):
            break
    return np.asarray(err)
