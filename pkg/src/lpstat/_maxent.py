"""Moment-matching exponential families on a weighted finite support.

Solves ``E_theta[F] = target`` for ``p_theta(i) = w_i exp(F_i . theta - K)``
by Newton's method on the convex dual ``K(theta) - theta . target``.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError

MAX_ITER = 200
GRAD_TOL = 1e-10
# accepted when no descent is possible any more
STALL_TOL = 1e-8


def _log_partition(F, logw, theta):
    s = logw + F @ theta
    top = s.max()
    e = np.exp(s - top)
    return top + np.log(e.sum()), e / e.sum()


def fit_maxent(F: np.ndarray, w: np.ndarray, target: np.ndarray, tol: float = GRAD_TOL):
    """Return ``(theta, K, iterations)``.

    Parameters
    ----------
    F : ndarray, shape (N, q)
        Sufficient statistics at the support points.
    w : ndarray, shape (N,)
        Base measure (masses or quadrature weights), summing to one.
    target : ndarray, shape (q,)

    Raises
    ------
    NumericalError
        If the gradient norm is not below `tol` after 200 iterations;
        ``residual`` carries the final moment mismatch.
    """
    F = np.asarray(F, dtype=float)
    target = np.asarray(target, dtype=float)
    q = target.size
    theta = np.zeros(q)
    if q == 0:
        return theta, 0.0, 0
    logw = np.log(np.asarray(w, dtype=float))
    K, p = _log_partition(F, logw, theta)
    obj = K - theta @ target
    for it in range(1, MAX_ITER + 1):
        mean = p @ F
        grad = mean - target
        if np.max(np.abs(grad)) < tol:
            return theta, float(K), it - 1
        C = F - mean
        H = (C * p[:, None]).T @ C
        try:
            step = np.linalg.solve(H + 1e-14 * np.eye(q), grad)
        except np.linalg.LinAlgError:
            step = grad
        t = 1.0
        while True:
            cand = theta - t * step
            K_new, p_new = _log_partition(F, logw, cand)
            obj_new = K_new - cand @ target
            # rounding slack: near the optimum the objective is flat to machine precision
            slack = 8 * np.finfo(float).eps * max(1.0, abs(obj))
            if obj_new <= obj - 1e-4 * t * (grad @ step) + slack or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12 and obj_new > obj + slack:
            if np.max(np.abs(grad)) < STALL_TOL:
                return theta, float(K), it
            break
        theta, K, p, obj = cand, K_new, p_new, obj_new
    residual = (p @ F) - target
    raise NumericalError(
        f"exponential model did not converge: max moment residual {np.max(np.abs(residual)):.3g}",
        residual=residual,
    )
