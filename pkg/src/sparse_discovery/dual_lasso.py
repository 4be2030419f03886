"""Dual-LASSO feature selection over a fixed library, plus the plain LASSO baseline.

Per target the pipeline is: SAFE screen, LASSO on the kept (unit-norm) columns,
dual point ``theta = y - X w`` from stationarity, the KKT-saturated columns as
the active set, a ridge refit on those columns, then scale-based thresholding
with refits until the support is stable.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .dynamics import StateTrajectory
from .featurelib import FeatureLibrary, evaluate, scale_magnitudes
from .sparse_solvers import (
    lambda_grid,
    lasso_cd,
    lasso_lambda_max,
    ridge,
    safe_screen,
)

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    """A fitting pipeline failed; ``diagnostics`` holds per-target details."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class DualPoint:
    theta: np.ndarray


@dataclass
class SparseLinearModel:
    """Weights ``W`` (m x n) over ``library`` with ``Xdot ~ X W``."""

    library: FeatureLibrary
    weights: np.ndarray
    active: List[np.ndarray]
    lam: tuple = ()
    lambda2: float = 0.0
    residual_fro: float = 0.0
    method: str = ""
    diagnostics: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(self.library.m, -1)
        self.active = [np.asarray(sorted(int(j) for j in a), dtype=int) for a in self.active]
        for i, a in enumerate(self.active):
            outside = np.setdiff1d(np.flatnonzero(self.weights[:, i]), a)
            if outside.size:
                raise ValueError(f"target {i}: nonzero weights outside the active set")

    @property
    def n_targets(self) -> int:
        return self.weights.shape[1]

    def nonzero_counts(self) -> list:
        return [int(np.count_nonzero(self.weights[:, i])) for i in range(self.n_targets)]

    def predict(self, states) -> np.ndarray:
        return evaluate(self.library, states).values @ self.weights

    def to_json_dict(self) -> dict:
        lam = list(self.lam)
        return {
            "basis": self.library.basis,
            "equations": [
                {
                    "target": f"x{i + 1}",
                    "terms": [
                        {"index": list(self.library.descriptors[j].index), "coef": float(self.weights[j, i])}
                        for j in range(self.library.m)
                        if self.weights[j, i] != 0
                    ],
                }
                for i in range(self.n_targets)
            ],
            "lambda": lam[0] if len(set(lam)) == 1 else lam,
            "lambda2": self.lambda2,
            "residual": self.residual_fro,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def dual_from_primal(X, y, primal_weights) -> DualPoint:
    """Unique dual solution from any primal solution: the residual ``y - X w``."""
    X = np.asarray(X, dtype=float)
    return DualPoint(np.asarray(y, dtype=float) - X @ np.asarray(primal_weights, dtype=float))


def dual_objective(y, theta) -> float:
    y = np.asarray(y, dtype=float)
    d = np.asarray(theta) - y
    return float(y @ y - d @ d)


def dual_active_set(X, theta, lam: float, eps_active: float = 1e-3) -> np.ndarray:
    """Columns whose dual correlation saturates the constraint ``|X_j^T theta| <= lam``."""
    corr = np.abs(np.asarray(X, dtype=float).T @ np.asarray(theta, dtype=float))
    return np.flatnonzero(corr >= lam * (1.0 - eps_active))


# -- per-target machinery ---------------------------------------------------


class _NormalizedDesign:
    """Unit-norm copy of a design with its Gram matrix, shared across targets."""

    def __init__(self, X: np.ndarray):
        self.X = X
        norms = np.linalg.norm(X, axis=0)
        self.usable = norms > 0
        self.norms = np.where(self.usable, norms, 1.0)
        self.Xn = X / self.norms
        self.Xn[:, ~self.usable] = 0.0
        self.G = self.Xn.T @ self.Xn


def _threshold_refit(X, y, cols, library, lambda2, tau):
    """Ridge refit on ``cols`` then drop small scale magnitudes until stable."""
    cols = np.asarray(cols, dtype=int)
    w = np.zeros(X.shape[1])
    while cols.size:
        wc = ridge(X[:, cols], y, lambda2)
        mags = scale_magnitudes(library.subset(cols), wc)
        top = mags.max()
        keep = mags >= tau * top if top > 0 else np.zeros(cols.size, dtype=bool)
        if keep.all():
            w[cols] = wc
            return cols, w
        cols = cols[keep]
    return cols, w


@dataclass
class _TargetFit:
    lam: float
    weights: np.ndarray
    active: np.ndarray
    lasso_weights: np.ndarray
    lasso_active: np.ndarray
    converged: bool
    iterations: int
    rel_residual: float
    n_kept: int


def _lasso_point(nd: _NormalizedDesign, y, lam, w0, tol, max_iter):
    """LASSO at one penalty on the SAFE-kept columns (normalised units)."""
    m = nd.X.shape[1]
    scr = safe_screen(nd.Xn, y, lam)
    kept = scr.kept[nd.usable[scr.kept]]
    sub = np.ix_(kept, kept)
    fit = lasso_cd(nd.Xn[:, kept], y, lam, tol=tol, max_iter=max_iter, w0=w0[kept], gram=nd.G[sub])
    w = np.zeros(m)
    w[kept] = fit.weights
    return w, kept, fit


def _dual_point_fit(nd, y, lam, w0, library, lambda2, eps_active, tau, tol, max_iter) -> _TargetFit:
    wn, kept, fit = _lasso_point(nd, y, lam, w0, tol, max_iter)
    theta = dual_from_primal(nd.Xn, y, wn).theta
    # SAFE-discarded columns are inactive constraints at the optimum
    act = kept[dual_active_set(nd.Xn[:, kept], theta, lam, eps_active)]
    cols, w = _threshold_refit(nd.X, y, act, library, lambda2, tau)
    r = y - nd.X @ w
    return _TargetFit(
        lam, w, cols, wn / nd.norms, np.flatnonzero(wn), fit.converged, fit.iterations,
        float(np.linalg.norm(r) / np.linalg.norm(y)), int(kept.size),
    )


def _select(path: List[_TargetFit], slack: float, floor: float) -> _TargetFit:
    """Largest penalty whose refit residual is within ``1 + slack`` of the best."""
    best = min(p.rel_residual for p in path)
    for p in path:
        if p.rel_residual <= (1.0 + slack) * best + floor:
            return p
    return path[-1]


@dataclass
class DualLassoConfig:
    lam: Optional[float] = None  # normalised-column units; None selects along a path
    lambda2: Optional[float] = None  # default 1e-6 * T
    eps_active: float = 1e-3
    tau_dual: float = 1e-2
    tol: float = 1e-10
    max_iter: int = 100_000
    n_lambda: int = 88
    lambda_ratio: float = 1e-7
    select_slack: float = 0.1
    residual_floor: float = 1e-7


def fit_dual_lasso_target(nd: _NormalizedDesign, y, library, cfg: DualLassoConfig, lambda2) -> tuple:
    m = nd.X.shape[1]
    lmax = lasso_lambda_max(nd.Xn, y)
    if lmax == 0.0:
        zero = _TargetFit(0.0, np.zeros(m), np.zeros(0, int), np.zeros(m), np.zeros(0, int), True, 0, 0.0, 0)
        return zero, {"lambda_max": 0.0, "path": 0}
    if cfg.lam is not None:
        if cfg.lam >= lmax:
            fit = _TargetFit(cfg.lam, np.zeros(m), np.zeros(0, int), np.zeros(m), np.zeros(0, int), True, 0, 1.0, 0)
            return fit, {"lambda_max": lmax, "path": 1}
        fit = _dual_point_fit(nd, y, cfg.lam, np.zeros(m), library, lambda2, cfg.eps_active, cfg.tau_dual, cfg.tol, cfg.max_iter)
        if not fit.converged:
            raise PipelineError(
                f"LASSO did not converge at lambda={cfg.lam:g}",
                {"lambda": cfg.lam, "lambda_max": lmax, "iterations": fit.iterations},
            )
        return fit, {"lambda_max": lmax, "path": 1}
    path = []
    w0 = np.zeros(m)
    for lam in lambda_grid(lmax, cfg.n_lambda, cfg.lambda_ratio)[1:]:
        fit = _dual_point_fit(nd, y, lam, w0, library, lambda2, cfg.eps_active, cfg.tau_dual, cfg.tol, cfg.max_iter)
        w0 = fit.lasso_weights * nd.norms
        path.append(fit)
        if fit.rel_residual <= cfg.residual_floor:
            break
    chosen = _select(path, cfg.select_slack, cfg.residual_floor)
    if not chosen.converged:
        log.warning("selected penalty %.3g has an unconverged primal fit (%d sweeps)", chosen.lam, chosen.iterations)
    return chosen, {"lambda_max": lmax, "path": len(path)}


def fit_dual_lasso(
    trajectory: StateTrajectory,
    library: FeatureLibrary,
    lam: Optional[float] = None,
    lambda2: Optional[float] = None,
    eps_active: float = 1e-3,
    config: Optional[DualLassoConfig] = None,
) -> SparseLinearModel:
    """Fit every state equation with the dual-LASSO selection pipeline.

    ``lam`` is in the units of the unit-norm design.  With ``lam=None`` each
    target walks a geometric penalty path and keeps the largest penalty whose
    thresholded refit is within ``select_slack`` of the best residual.
    """
    cfg = config or DualLassoConfig()
    if lam is not None:
        if not lam > 0:
            raise ValueError("lam must be positive")
        cfg = replace(cfg, lam=lam)
    if lambda2 is not None:
        cfg = replace(cfg, lambda2=lambda2)
    if eps_active != cfg.eps_active:
        cfg = replace(cfg, eps_active=eps_active)
    X = evaluate(library, trajectory.states).values
    Y = np.asarray(trajectory.derivatives)
    T = X.shape[0]
    l2 = 1e-6 * T if cfg.lambda2 is None else cfg.lambda2
    if not l2 > 0:
        raise ValueError("lambda2 must be positive")
    nd = _NormalizedDesign(X)
    W = np.zeros((library.m, Y.shape[1]))
    active, lams, diags = [], [], []
    for i in range(Y.shape[1]):
        try:
            fit, info = fit_dual_lasso_target(nd, Y[:, i], library, cfg, l2)
        except PipelineError as err:
            err.diagnostics = {"target": i, **err.diagnostics}
            raise
        W[:, i] = fit.weights
        active.append(fit.active)
        lams.append(float(fit.lam))
        diags.append({
            "target": i, "lambda": float(fit.lam), "converged": fit.converged,
            "iterations": fit.iterations, "lasso_nonzero": int(fit.lasso_active.size),
            "safe_kept": fit.n_kept, **info,
        })
    res = float(np.linalg.norm(Y - X @ W))
    return SparseLinearModel(library, W, active, tuple(lams), float(l2), res, "dual_lasso", diags)


def fit_lasso(
    trajectory: StateTrajectory,
    library: FeatureLibrary,
    lam: Optional[float] = None,
    lambda_ratio: float = 1e-4,
    n_lambda: int = 50,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> SparseLinearModel:
    """Plain LASSO on unit-norm columns, weights mapped back to the raw design.

    Without ``lam`` the penalty is the last point of the default geometric grid
    (``lambda_max * lambda_ratio``), reached by warm-started continuation.
    """
    X = evaluate(library, trajectory.states).values
    Y = np.asarray(trajectory.derivatives)
    nd = _NormalizedDesign(X)
    m = library.m
    W = np.zeros((m, Y.shape[1]))
    active, lams, diags = [], [], []
    for i in range(Y.shape[1]):
        y = Y[:, i]
        lmax = lasso_lambda_max(nd.Xn, y)
        if lmax == 0.0:
            active.append(np.zeros(0, int))
            lams.append(0.0)
            diags.append({"target": i, "lambda": 0.0, "converged": True, "iterations": 0, "lambda_max": 0.0})
            continue
        grid = [lam] if lam is not None else lambda_grid(lmax, n_lambda, lambda_ratio)[1:]
        w = np.zeros(m)
        fit = None
        for lv in grid:
            if lv >= lmax:
                w = np.zeros(m)
                continue
            w, kept, fit = _lasso_point(nd, y, lv, w, tol, max_iter)
        if lam is not None and fit is not None and not fit.converged:
            raise PipelineError(f"LASSO did not converge at lambda={lam:g}", {"target": i, "iterations": fit.iterations})
        W[:, i] = w / nd.norms
        active.append(np.flatnonzero(W[:, i]))
        lams.append(float(grid[-1]))
        diags.append({
            "target": i, "lambda": float(grid[-1]), "lambda_max": lmax,
            "converged": True if fit is None else fit.converged,
            "iterations": 0 if fit is None else fit.iterations,
        })
    res = float(np.linalg.norm(Y - X @ W))
    return SparseLinearModel(library, W, active, tuple(lams), 0.0, res, "lasso", diags)

