from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..errors import SingularSystem

JITTER = 1e-10


def weighted_least_squares(A, b, w, ridge: float = 0.0, intercept: int | None = None):
    """Minimize ``sum_s w_s (A_s . theta - b_s)^2 + ridge * |theta|^2``.

    The column ``intercept`` (if given) is left out of the penalty. Solved via
    the normal equations with a Cholesky factorization; a ``1e-10`` diagonal
    jitter is added only if the first factorization fails.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    w = np.asarray(w, dtype=float)
    if A.ndim != 2 or A.shape[0] != b.shape[0] or w.shape != b.shape:
        raise ValueError("shape mismatch between A, b and w")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative with at least one positive")
    Aw = A * w[:, None]
    G = A.T @ Aw
    rhs = Aw.T @ b
    if ridge:
        pen = np.full(A.shape[1], float(ridge))
        if intercept is not None:
            pen[intercept] = 0.0
        G[np.diag_indices_from(G)] += pen
    try:
        return cho_solve(cho_factor(G), rhs)
    except (LinAlgError, ValueError):
        pass
    G[np.diag_indices_from(G)] += JITTER
    try:
        return cho_solve(cho_factor(G), rhs)
    except (LinAlgError, ValueError) as exc:
        raise SingularSystem(str(exc)) from None
