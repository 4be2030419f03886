"""Sequentially thresholded ridge regression with scale-based thresholding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .featurelib import DesignMatrix, FeatureLibrary, scale_magnitudes
from .sparse_solvers import ridge

ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True)
class StridgeConfig:
    lambda0: float = 1.0
    decay: float = 0.5
    max_rounds: int = 20
    tau_rel: float = 1e-3
    lambda_final: float = 1e-8

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if not 0 < self.decay < 1:
            raise ValueError("decay must lie in (0, 1)")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be positive")
        if not 0 <= self.tau_rel < 1:
            raise ValueError("tau_rel must lie in [0, 1)")


def normalized_condition_number(X) -> float:
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=0)
    live = norms > 0
    if not live.any():
        return 1.0
    s = np.linalg.svd(X[:, live] / norms[live], compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def is_orthonormal(X, tol: float = ORTHONORMAL_TOL) -> bool:
    X = np.asarray(X, dtype=float)
    G = X.T @ X
    return bool(np.max(np.abs(G - np.eye(G.shape[0])), initial=0.0) < tol)


def ridge_step(X, y, lam: float, use_shortcut: Optional[bool] = None) -> np.ndarray:
    """Ridge solve; on an orthonormal design this is ``X^T y / (1 + lam)``."""
    if use_shortcut is None:
        use_shortcut = is_orthonormal(X)
    if use_shortcut:
        return (np.asarray(X).T @ np.asarray(y)) / (1.0 + lam)
    return ridge(X, y, lam)


def stridge_fit(
    X,
    y,
    cfg: StridgeConfig,
    library: FeatureLibrary,
    return_history: bool = False,
    use_shortcut: Optional[bool] = None,
):
    """Fit one target by sequentially thresholded ridge regression.

    Round ``k`` solves ridge with ``lambda0 * kappa * decay**k`` on the current
    survivors (``kappa`` is the condition number of the unit-norm design,
    computed once), then drops features whose scale magnitude is below
    ``tau_rel`` times the largest.  Stops once a round keeps every survivor.
    The returned weights come from a ridge solve at ``lambda_final``, itself
    thresholded and refit until no column drops.

    Returns ``(weights, active)``; with ``return_history`` also the list of
    active sets after each scheduled round (the final refit can only shrink
    the last one).
    """
    values = X.values if isinstance(X, DesignMatrix) else np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    m = values.shape[1]
    if m == 0:
        raise ValueError("need at least one column")
    if library.m != m:
        raise ValueError("library does not match the design")
    kappa = normalized_condition_number(values)
    if not np.isfinite(kappa):
        kappa = 1.0 / np.finfo(float).eps
    active = np.arange(m)
    history: List[np.ndarray] = []
    for k in range(cfg.max_rounds):
        lam = cfg.lambda0 * kappa * cfg.decay**k
        w = ridge_step(values[:, active], y, lam, use_shortcut)
        mags = scale_magnitudes(library.subset(active), w)
        top = mags.max()
        keep = mags >= cfg.tau_rel * top if top > 0 else np.zeros(active.size, dtype=bool)
        survivors = active[keep]
        history.append(survivors)
        if survivors.size == active.size:
            break
        active = survivors
        if active.size == 0:
            break
    weights = np.zeros(m)
    # the schedule can settle while the penalty still smears weight across
    # columns, so the near-unpenalised refit is thresholded too
    while active.size:
        w = ridge_step(values[:, active], y, cfg.lambda_final, use_shortcut)
        mags = scale_magnitudes(library.subset(active), w)
        keep = mags >= cfg.tau_rel * mags.max() if mags.max() > 0 else np.zeros(active.size, dtype=bool)
        if keep.all():
            weights[active] = w
            break
        active = active[keep]
    if return_history:
        return weights, active, history
    return weights, active
