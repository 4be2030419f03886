"""Benchmark ODE systems, fixed-step RK4 integration and derivative estimation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .symbolic import DiscoveredModel, MonomialPolynomial


class IntegrationBlowupError(ArithmeticError):
    """Raised when the integrated state stops being finite."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state encountered at step {step}")
        self.step = step


class UnsupportedGridError(ValueError):
    """Raised for non-uniform sampling grids."""


@dataclass(frozen=True)
class OdeSystem:
    """Autonomous vector field ``dx/dt = rhs(x)`` on R^n."""

    name: str
    dimension: int
    rhs: Callable[[np.ndarray], np.ndarray]
    true_model: Optional[DiscoveredModel] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.true_model is not None and self.true_model.n != self.dimension:
            raise ValueError("true_model dimension does not match system")

    def __call__(self, state: np.ndarray) -> np.ndarray:
        out = np.asarray(self.rhs(np.asarray(state, dtype=float)), dtype=float)
        if out.shape != (self.dimension,):
            raise ValueError(f"rhs returned shape {out.shape}, expected ({self.dimension},)")
        return out


@dataclass(frozen=True)
class StateTrajectory:
    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    derivative_source: str = "exact_rhs"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.atleast_2d(np.asarray(self.states, dtype=float))
        dx = np.atleast_2d(np.asarray(self.derivatives, dtype=float))
        if x.shape[0] != t.shape[0] or dx.shape != x.shape:
            raise ValueError("times, states and derivatives must agree in length")
        if t.shape[0] < 3:
            raise ValueError("a trajectory needs at least 3 samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.derivative_source not in ("exact_rhs", "finite_difference"):
            raise ValueError(f"unknown derivative source {self.derivative_source!r}")
        for name, arr in (("times", t), ("states", x), ("derivatives", dx)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.times.shape[0]


def integrate(system: OdeSystem, x0: Sequence[float], dt: float, steps: int) -> StateTrajectory:
    """Classical fourth-order Runge-Kutta with a fixed step.

    Returns ``steps + 1`` samples at ``t = k * dt`` (the initial state included).
    Derivatives are the vector field evaluated at each sample.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if steps < 2:
        raise ValueError("steps must be at least 2")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (system.dimension,):
        raise ValueError(f"x0 must have length {system.dimension}")
    states = np.empty((steps + 1, system.dimension))
    states[0] = x
    for k in range(1, steps + 1):
        # overflow is reported below as a blow-up, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = system(x)
            k2 = system(x + 0.5 * dt * k1)
            k3 = system(x + 0.5 * dt * k2)
            k4 = system(x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowupError(k)
        states[k] = x
    derivatives = np.array([system(s) for s in states])
    times = dt * np.arange(steps + 1)
    return StateTrajectory(times, states, derivatives, "exact_rhs")


def finite_difference_derivatives(times: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Second-order finite differences on a uniform grid.

    Central differences inside, second-order one-sided stencils at both ends.
    """
    t = np.asarray(times, dtype=float)
    x = np.asarray(states, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if t.shape[0] < 3 or x.shape[0] != t.shape[0]:
        raise ValueError("need at least 3 samples with matching times")
    steps = np.diff(t)
    dt = steps.mean()
    if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-9 * max(abs(dt), np.max(np.abs(t))):
        raise UnsupportedGridError("finite differences require a uniform time grid")
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt)
    d[-1] = (3.0 * x[-1] - 4.0 * x[-2] + x[-3]) / (2.0 * dt)
    return d


def with_finite_differences(traj: StateTrajectory) -> StateTrajectory:
    """Copy of ``traj`` whose derivatives are re-estimated from the states."""
    dx = finite_difference_derivatives(traj.times, traj.states)
    return StateTrajectory(traj.times, traj.states, dx, "finite_difference")


# -- benchmark systems ------------------------------------------------------
# Coefficients exactly as printed, including the yz term in dx/dt.


def _lorenz63(s):
    x, y, z = s
    return np.array([10.0 * (y * z - x), x * (28.0 - z), x * y - 2.667 * z])


def _lorenz_quadratic(s):
    x, y, z = s
    return np.array([10.0 * (y * z - x), x * (28.0 - z), (x * y) ** 2 - 2.667 * z])


def _poly(terms):
    return MonomialPolynomial({tuple(k): v for k, v in terms.items()})


def lorenz63() -> OdeSystem:
    truth = DiscoveredModel(3, [
        _poly({(0, 1, 1): 10.0, (1, 0, 0): -10.0}),
        _poly({(1, 0, 0): 28.0, (1, 0, 1): -1.0}),
        _poly({(1, 1, 0): 1.0, (0, 0, 1): -2.667}),
    ])
    return OdeSystem("lorenz63", 3, _lorenz63, truth)


def lorenz_quadratic() -> OdeSystem:
    truth = DiscoveredModel(3, [
        _poly({(0, 1, 1): 10.0, (1, 0, 0): -10.0}),
        _poly({(1, 0, 0): 28.0, (1, 0, 1): -1.0}),
        _poly({(2, 2, 0): 1.0, (0, 0, 1): -2.667}),
    ])
    return OdeSystem("lorenz_quadratic", 3, _lorenz_quadratic, truth)


SYSTEMS = {"lorenz63": lorenz63, "lorenz_quadratic": lorenz_quadratic}


def get_system(name: str) -> OdeSystem:
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise KeyError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None


# -- trajectory CSV ---------------------------------------------------------


def write_trajectory_csv(traj: StateTrajectory, path) -> None:
    n = traj.n
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"dx{i + 1}" for i in range(n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, x, dx in zip(traj.times, traj.states, traj.derivatives):
            # repr() of a Python float round-trips exactly
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x] + [repr(float(v)) for v in dx])


def read_trajectory_csv(path, derivative_source: str = "exact_rhs") -> StateTrajectory:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "t" or (len(header) - 1) % 2:
        raise ValueError(f"{path}: expected header t,x1..xn,dx1..dxn")
    n = (len(header) - 1) // 2
    expected = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"dx{i + 1}" for i in range(n)]
    if header != expected:
        raise ValueError(f"{path}: expected header {','.join(expected)}")
    data = np.array([[float(v) for v in r] for r in body if r], dtype=float)
    return StateTrajectory(data[:, 0], data[:, 1:1 + n], data[:, 1 + n:], derivative_source)
