"""Independent oracles the implementation is checked against.

Everything here deliberately avoids the code paths under test: the
eigenvalue oracle runs on the characteristic-polynomial recurrence
p_k(x) = (q_k - x) p_{k-1}(x) - lambda_{k-1}^2 p_{k-2}(x) instead of the
pivot recursion, and resolvent columns come from dense LAPACK solves.
"""

import numpy as np


def charpoly_chain_variations(diag, offdiag, x):
    """Sign variations along (p_0, ..., p_N)(x); equals #eigenvalues < x."""
    p_prev, p = 1.0, diag[0] - x
    variations = 1 if p < 0.0 else 0
    sign_prev = -1.0 if p < 0.0 else 1.0
    # rescale to dodge over/underflow; only signs matter
    for k in range(1, len(diag)):
        p_next = (diag[k] - x) * p - offdiag[k - 1] ** 2 * p_prev
        scale = max(abs(p_next), abs(p), 1e-280)
        p_prev, p = p / scale, p_next / scale
        sign = -1.0 if p < 0.0 else (1.0 if p > 0.0 else -sign_prev)
        if sign != sign_prev:
            variations += 1
        sign_prev = sign
    return variations


def charpoly_eigenvalues(diag, offdiag, tol=1e-13):
    """All eigenvalues by bisection on the characteristic-polynomial chain."""
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    n = diag.shape[0]
    radius = np.zeros(n)
    if n > 1:
        radius[:-1] += np.abs(offdiag)
        radius[1:] += np.abs(offdiag)
    lo = float(np.min(diag - radius)) - 1.0
    hi = float(np.max(diag + radius)) + 1.0
    eigs = []
    for k in range(1, n + 1):
        a, b = lo, hi
        while b - a > tol:
            mid = 0.5 * (a + b)
            if charpoly_chain_variations(diag, offdiag, mid) >= k:
                b = mid
            else:
                a = mid
        eigs.append(0.5 * (a + b))
    return np.asarray(eigs)


def dense_resolvent_column(slice_, z):
    """(T - z)^(-1) e_1 via a dense solve."""
    n = slice_.size
    m = slice_.as_dense().astype(complex) - z * np.eye(n)
    rhs = np.zeros(n, dtype=complex)
    rhs[0] = 1.0
    return np.linalg.solve(m, rhs)


def dense_opnorm(matrix):
    return float(np.linalg.norm(np.asarray(matrix), 2))
