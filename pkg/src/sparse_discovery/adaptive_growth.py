"""Adaptive growth of a Legendre feature library.

Candidates from the tensor-product Legendre family are tried one at a time.
A candidate is kept when the joint STRidge loss over all targets drops to at
most ``r_a`` times the current loss.  Every ``k_r`` candidates a removal sweep
drops each column whose absence raises the loss by at most a factor ``r_r``.
The stream is cycled until nothing changes for ``stall_limit`` candidates.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .dual_lasso import SparseLinearModel
from .dynamics import StateTrajectory
from .featurelib import (
    FeatureDescriptor,
    FeatureLibrary,
    estimate_scales,
    evaluate,
    graded_lex,
)
from .stridge import StridgeConfig, stridge_fit


class NoModelFoundError(RuntimeError):
    """The grown library ended up empty."""


@dataclass(frozen=True)
class GrowthConfig:
    r_a: float = 0.75
    r_r: float = 1.25
    k_r: int = 10
    lambda0: float = 1.0
    max_degree: int = 6
    max_features: int = 50
    stall_limit: Optional[int] = None  # default: one full pass over the stream
    max_passes: int = 20
    loss_floor_rel: float = 1e-20
    scale_kind: str = "rms"

    def __post_init__(self):
        if not self.r_a <= 1 <= self.r_r:
            raise ValueError("need r_a <= 1 <= r_r")
        if self.k_r < 1 or self.max_degree < 0 or self.max_features < 1 or self.max_passes < 1:
            raise ValueError("k_r, max_features and max_passes must be positive")


@dataclass(frozen=True)
class GrowthStep:
    step: int
    descriptor: FeatureDescriptor
    action: str  # added | rejected | removed
    loss_before: float
    loss_after: float


@dataclass
class GrowthTrace:
    steps: List[GrowthStep] = field(default_factory=list)

    def record(self, *args):
        self.steps.append(GrowthStep(*args))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "action", "descriptor", "loss_before", "loss_after"])
        for s in self.steps:
            w.writerow([s.step, s.action, " ".join(map(str, s.descriptor.index)), repr(s.loss_before), repr(s.loss_after)])
        return buf.getvalue()

    def actions(self, kind: str) -> List[GrowthStep]:
        return [s for s in self.steps if s.action == kind]


def candidate_stream(n: int, max_degree: int) -> List[FeatureDescriptor]:
    """Tensor-product Legendre descriptors in graded lexicographic order."""
    return [FeatureDescriptor("legendre", ix) for ix in graded_lex(n, max_degree)]


class _Fitter:
    def __init__(self, trajectory, candidates, scales, stridge_cfg, floor):
        self.Y = np.asarray(trajectory.derivatives, dtype=float)
        self.n = self.Y.shape[1]
        self.scales = tuple(scales)
        lib = FeatureLibrary(trajectory.n, tuple(candidates), self.scales)
        values = evaluate(lib, trajectory.states).values
        self.columns = {d: values[:, j] for j, d in enumerate(candidates)}
        self.cfg = stridge_cfg
        self.floor = floor
        self.empty_loss = max(float(np.sum(self.Y**2)), floor)

    def __call__(self, descs: List[FeatureDescriptor]) -> Tuple[np.ndarray, float]:
        if not descs:
            return np.zeros((0, self.n)), self.empty_loss
        lib = FeatureLibrary(len(descs[0].index), tuple(descs), self.scales)
        X = np.column_stack([self.columns[d] for d in descs])
        W = np.column_stack([stridge_fit(X, self.Y[:, i], self.cfg, lib)[0] for i in range(self.n)])
        return W, max(float(np.sum((self.Y - X @ W) ** 2)), self.floor)


def grow(
    trajectory: StateTrajectory,
    cfg: GrowthConfig = GrowthConfig(),
    stridge_cfg: Optional[StridgeConfig] = None,
) -> Tuple[SparseLinearModel, GrowthTrace]:
    """Grow a Legendre library from empty and fit it with STRidge."""
    if stridge_cfg is None:
        stridge_cfg = StridgeConfig(lambda0=cfg.lambda0)
    n = trajectory.n
    stream = candidate_stream(n, cfg.max_degree)
    scales = estimate_scales(trajectory.states, cfg.scale_kind)
    floor = cfg.loss_floor_rel * float(np.sum(np.asarray(trajectory.derivatives) ** 2))
    fit = _Fitter(trajectory, stream, scales, stridge_cfg, floor)
    stall_limit = cfg.stall_limit or len(stream)

    lib: List[FeatureDescriptor] = []
    W = np.zeros((0, n))
    loss = math.inf
    trace = GrowthTrace()
    k = 0

    def sweep() -> bool:
        nonlocal lib, W, loss
        changed = False
        i = 0
        while i < len(lib):
            trial = lib[:i] + lib[i + 1:]
            Wt, lt = fit(trial)
            if lt <= cfg.r_r * loss:
                trace.record(k, lib[i], "removed", loss, lt)
                lib, W, loss = trial, Wt, lt
                changed = True
            else:
                i += 1
        return changed

    stall = 0
    done = False
    swept_last = False
    for _ in range(cfg.max_passes):
        for cand in stream:
            if cand in lib:
                continue
            k += 1
            changed = False
            trial = lib + [cand]
            Wt, lt = fit(trial)
            # strict decrease keeps a zero-loss fit from absorbing every candidate
            if lt <= cfg.r_a * loss and lt < loss:
                trace.record(k, cand, "added", loss, lt)
                lib, W, loss = trial, Wt, lt
                changed = True
            else:
                trace.record(k, cand, "rejected", loss, lt)
            swept_last = k % cfg.k_r == 0
            if swept_last:
                changed = sweep() or changed
            stall = 0 if changed else stall + 1
            if stall >= stall_limit or len(lib) >= cfg.max_features:
                done = True
                break
        if done:
            break
    if not swept_last:
        sweep()

    if not lib:
        raise NoModelFoundError("adaptive growth ended with an empty library")
    library = FeatureLibrary(n, tuple(lib), tuple(scales))
    X = evaluate(library, trajectory.states).values
    res = float(np.linalg.norm(np.asarray(trajectory.derivatives) - X @ W))
    active = [np.flatnonzero(W[:, i]) for i in range(n)]
    model = SparseLinearModel(
        library, W, active, (stridge_cfg.lambda0,) * n, stridge_cfg.lambda_final, res, "adaptive",
        [{"candidates_tried": k, "final_loss": loss}],
    )
    return model, trace
