"""Single-target regression solvers: ridge, LASSO coordinate descent, SAFE screening.

All solvers work on the design exactly as given; normalising columns is the
caller's business.  The LASSO objective is ``0.5*||y - Xw||^2 + lam*||w||_1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np
import scipy.linalg


class RankDeficiencyError(np.linalg.LinAlgError):
    """Unpenalised normal equations are numerically singular."""


class DegeneratePenaltyError(ValueError):
    """The penalty lies outside ``(0, lambda_max]``."""


@dataclass
class LassoFit:
    weights: np.ndarray
    lam: float
    iterations: int
    converged: bool
    objective: float
    history: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(frozen=True)
class SafeScreenResult:
    kept: np.ndarray
    discarded: np.ndarray
    lambda_max: float


def _as_design(X, y=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if y is None:
        return X
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError("X and y disagree on the number of samples")
    return X, y


def ridge(X, y, lambda2: float) -> np.ndarray:
    """Solve ``(X^T X + lambda2 I) w = X^T y``.

    Columns are Jacobi-scaled before the Cholesky factorisation; this changes
    the conditioning, not the solution.
    """
    X, y = _as_design(X, y)
    if lambda2 < 0:
        raise ValueError("lambda2 must be non-negative")
    m = X.shape[1]
    if m == 0:
        return np.zeros(0)
    norms = np.linalg.norm(X, axis=0)
    live = norms > 0
    w = np.zeros(m)
    if not np.any(live):
        if lambda2 == 0:
            raise RankDeficiencyError("all-zero design with lambda2 = 0")
        return w
    if lambda2 == 0 and not np.all(live):
        raise RankDeficiencyError("zero column with lambda2 = 0")
    Xs = X[:, live] / norms[live]
    G = Xs.T @ Xs
    G[np.diag_indices_from(G)] += lambda2 / norms[live] ** 2
    rhs = Xs.T @ y
    if lambda2 == 0 and np.linalg.cond(G) > 1.0 / (np.finfo(float).eps * max(m, 1)):
        raise RankDeficiencyError("normal equations are numerically singular")
    try:
        v = scipy.linalg.cho_solve(scipy.linalg.cho_factor(G), rhs)
    except np.linalg.LinAlgError:
        if lambda2 == 0:
            raise RankDeficiencyError("normal equations are not positive definite") from None
        v = scipy.linalg.lstsq(G, rhs)[0]
    w[live] = v / norms[live]
    return w


def lasso_lambda_max(X, y) -> float:
    """Smallest penalty at which the LASSO solution is identically zero."""
    X, y = _as_design(X, y)
    if X.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(X.T @ y)))


def safe_screen(X, y, lam: float) -> SafeScreenResult:
    """Basic SAFE test: drop columns that are provably inactive at ``lam``."""
    X, y = _as_design(X, y)
    corr = np.abs(X.T @ y)
    lmax = float(corr.max()) if corr.size else 0.0
    if lmax == 0.0:
        raise DegeneratePenaltyError("lambda_max is zero (y orthogonal to every column)")
    if not 0 < lam <= lmax:
        raise DegeneratePenaltyError(f"lambda={lam} outside (0, lambda_max={lmax}]")
    bound = lam - np.linalg.norm(X, axis=0) * np.linalg.norm(y) * (lmax - lam) / lmax
    drop = corr < bound
    return SafeScreenResult(np.flatnonzero(~drop), np.flatnonzero(drop), lmax)


@numba.njit(cache=True)
def _cd_kernel(G, c, yy, lam, w, tol, max_iter, reverse, record):
    m = c.shape[0]
    grad = c - G @ w  # X^T (y - Xw)
    hist = np.empty(max_iter if record else 0)
    it = 0
    converged = False
    while it < max_iter:
        maxup = 0.0
        for jj in range(m):
            j = m - 1 - jj if reverse else jj
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            old = w[j]
            z = grad[j] + gjj * old
            if z > lam:
                new = (z - lam) / gjj
            elif z < -lam:
                new = (z + lam) / gjj
            else:
                new = 0.0
            d = new - old
            if d != 0.0:
                for k in range(m):
                    grad[k] -= d * G[k, j]
                w[j] = new
                if abs(d) > maxup:
                    maxup = abs(d)
        if record:
            # 0.5*||y - Xw||^2 = 0.5*(yy - w.c - w.grad)
            hist[it] = 0.5 * (yy - w @ c - w @ grad) + lam * np.sum(np.abs(w))
        it += 1
        scale = 1.0
        wmax = np.max(np.abs(w)) if m > 0 else 0.0
        if wmax > scale:
            scale = wmax
        if maxup < tol * scale:
            converged = True
            break
    return w, it, converged, hist[:it]


def lasso_objective(X, y, w, lam) -> float:
    X, y = _as_design(X, y)
    r = y - X @ w
    return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(w)))


def lasso_cd(
    X,
    y,
    lam: float,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    w0=None,
    reverse: bool = False,
    record: bool = False,
    gram=None,
) -> LassoFit:
    """Cyclic coordinate descent with exact soft-threshold updates.

    Converged when the largest single-coordinate change in a sweep is below
    ``tol * max(1, ||w||_inf)``.  Hitting ``max_iter`` returns
    ``converged=False``; it is up to the caller to decide what that means.
    ``gram`` may pass a precomputed ``X.T @ X``.
    """
    X, y = _as_design(X, y)
    if not lam > 0:
        raise ValueError("lam must be positive")
    m = X.shape[1]
    G = np.ascontiguousarray(X.T @ X if gram is None else gram, dtype=float)
    c = X.T @ y
    w = np.zeros(m) if w0 is None else np.array(w0, dtype=float)
    if m == 0:
        return LassoFit(w, lam, 0, True, 0.5 * float(y @ y))
    w, it, conv, hist = _cd_kernel(G, c, float(y @ y), float(lam), w, float(tol), int(max_iter), bool(reverse), bool(record))
    return LassoFit(w, lam, int(it), bool(conv), lasso_objective(X, y, w, lam), hist if record else None)


def kkt_violation(X, y, w, lam) -> float:
    """Largest excess of the LASSO optimality conditions, in correlation units."""
    X, y = _as_design(X, y)
    g = X.T @ (y - X @ w)
    nz = w != 0
    out = np.maximum(np.abs(g) - lam, 0.0)
    out[nz] = np.abs(g[nz] - lam * np.sign(w[nz]))
    return float(out.max()) if out.size else 0.0


def lambda_grid(lambda_max: float, n_points: int = 50, ratio: float = 1e-4) -> np.ndarray:
    """Geometric grid from ``lambda_max`` down to ``lambda_max * ratio``."""
    if lambda_max <= 0:
        return np.zeros(0)
    return lambda_max * np.geomspace(1.0, ratio, n_points)


def theory_lambda(n_samples: int, n_features: int, constant: float = 1.0) -> float:
    """The ``sqrt(T log m)`` penalty scaling (no constant is prescribed)."""
    return constant * float(np.sqrt(n_samples * np.log(max(n_features, 2))))
