"""End-to-end experiment driver: data, library, fit, score, artifacts."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import dynamics
from .adaptive_growth import GrowthConfig, GrowthTrace, grow
from .dual_lasso import DualLassoConfig, SparseLinearModel, fit_dual_lasso, fit_lasso
from .featurelib import enumerate_monomials, estimate_scales, evaluate
from .sparse_solvers import theory_lambda
from .stridge import StridgeConfig, stridge_fit
from .symbolic import DiscoveredModel, expand_model, render_model, threshold_model

METHODS = ("lasso", "dual_lasso", "stridge", "adaptive")
LARGE_DEGREE = 10


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    system: str = "lorenz63"  # lorenz63 | lorenz_quadratic | path to a trajectory CSV
    dt: float = 1e-3
    steps: int = 10_000
    x0: object = (1.0, 1.0, 1.0)  # sequence, or "random" (uses seed)
    derivatives: str = "exact"  # exact | fd
    method: str = "dual_lasso"
    degree: int = 3
    lam: Optional[float] = None
    lambda_mode: str = "path"  # path | fixed | theory
    lambda2: Optional[float] = None
    eps_active: float = 1e-3
    tau_final: float = 0.05
    scale_kind: str = "rms"
    scales: Optional[Sequence[float]] = None
    r_a: float = 0.75
    r_r: float = 1.25
    k_r: int = 10
    lambda0: float = 1.0
    max_degree: int = 6
    allow_large_degree: bool = False
    out: Optional[str] = None
    seed: int = 0

    def validate(self) -> "ExperimentConfig":
        if self.system not in dynamics.SYSTEMS and not Path(self.system).is_file():
            raise ConfigError(f"unknown system or missing trajectory file: {self.system!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.derivatives not in ("exact", "fd"):
            raise ConfigError("derivatives must be 'exact' or 'fd'")
        if not self.dt > 0 or self.steps < 2:
            raise ConfigError("need dt > 0 and steps >= 2")
        if self.degree < 0:
            raise ConfigError("degree must be non-negative")
        if self.degree > LARGE_DEGREE and not self.allow_large_degree:
            raise ConfigError(f"degree {self.degree} > {LARGE_DEGREE} needs allow_large_degree")
        if self.lambda_mode not in ("path", "fixed", "theory"):
            raise ConfigError("lambda_mode must be path, fixed or theory")
        if self.lambda_mode == "fixed" and (self.lam is None or not self.lam > 0):
            raise ConfigError("fixed lambda mode needs a positive lam")
        if self.lambda2 is not None and not self.lambda2 > 0:
            raise ConfigError("lambda2 must be positive")
        if not 0 < self.tau_final < 1:
            raise ConfigError("tau_final must lie in (0, 1)")
        if self.scale_kind not in ("max", "rms"):
            raise ConfigError("scale_kind must be max or rms")
        if self.scales is not None and any(not s > 0 for s in self.scales):
            raise ConfigError("scales must be positive")
        if not self.r_a <= 1 <= self.r_r or self.k_r < 1:
            raise ConfigError("need r_a <= 1 <= r_r and k_r >= 1")
        if isinstance(self.x0, str) and self.x0 != "random":
            raise ConfigError("x0 must be a list of numbers or 'random'")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        return cls.from_dict(data)


@dataclass
class MethodResult:
    method: str
    degree: int
    residual_fro: float
    normalized_residual: float
    nonzero_counts: List[int]
    model: SparseLinearModel = field(repr=False)
    discovered: DiscoveredModel = field(repr=False)
    final: DiscoveredModel = field(repr=False)
    precision: Optional[float] = None
    recall: Optional[float] = None
    coefficient_error: Optional[float] = None
    wall_clock: float = 0.0
    trace: Optional[GrowthTrace] = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "method": self.method,
            "degree": self.degree,
            "residual_fro": self.residual_fro,
            "normalized_residual": self.normalized_residual,
            "nonzero_counts": self.nonzero_counts,
            "precision": self.precision,
            "recall": self.recall,
            "coefficient_error": self.coefficient_error,
        }


@dataclass
class ComparisonReport:
    system: str
    results: List[MethodResult]

    def get(self, method: str, degree: Optional[int] = None) -> MethodResult:
        for r in self.results:
            if r.method == method and (degree is None or r.degree == degree):
                return r
        raise KeyError((method, degree))

    def to_dict(self) -> dict:
        return {"system": self.system, "results": [r.summary() for r in self.results]}


# -- scoring ----------------------------------------------------------------


def score_against_truth(model: DiscoveredModel, truth: DiscoveredModel, scales, tau: float) -> dict:
    """Support precision/recall and worst relative coefficient error.

    Both models are scale-thresholded at ``tau`` first; supports are sets of
    (equation, multi-index) pairs.
    """
    if model.n != truth.n:
        raise ValueError("models have different dimensions")
    m = threshold_model(model, scales, tau)
    t = threshold_model(truth, scales, tau)
    found = {(i, k) for i, eq in enumerate(m.equations) for k in eq.support()}
    true = {(i, k) for i, eq in enumerate(t.equations) for k in eq.support()}
    hit = found & true
    precision = len(hit) / len(found) if found else float(not true)
    recall = len(hit) / len(true) if true else 1.0
    errs = []
    for i, k in hit:
        c_true = t.equations[i].coefficient(k)
        errs.append(abs(m.equations[i].coefficient(k) - c_true) / abs(c_true))
    return {"precision": precision, "recall": recall, "coefficient_error": max(errs) if errs else 0.0}


# -- running ----------------------------------------------------------------


def load_trajectory(cfg: ExperimentConfig):
    if cfg.system in dynamics.SYSTEMS:
        system = dynamics.get_system(cfg.system)
        if isinstance(cfg.x0, str):
            x0 = np.random.default_rng(cfg.seed).uniform(-10, 10, system.dimension)
        else:
            x0 = np.asarray(cfg.x0, dtype=float)
        traj = dynamics.integrate(system, x0, cfg.dt, cfg.steps)
        truth = system.true_model
    else:
        traj = dynamics.read_trajectory_csv(cfg.system)
        truth = None
    if cfg.derivatives == "fd":
        traj = dynamics.with_finite_differences(traj)
    return traj, truth


def _scales(cfg, traj):
    if cfg.scales is not None:
        if len(cfg.scales) != traj.n:
            raise ConfigError("need one scale per state variable")
        return np.asarray(cfg.scales, dtype=float)
    return estimate_scales(traj.states, cfg.scale_kind)


def fit_method(cfg: ExperimentConfig, traj, method: Optional[str] = None, degree: Optional[int] = None):
    """Fit one method; returns ``(model, trace)`` with a trace only for adaptive growth."""
    method = method or cfg.method
    degree = cfg.degree if degree is None else degree
    scales = _scales(cfg, traj)
    n = traj.n
    if method == "adaptive":
        gcfg = GrowthConfig(r_a=cfg.r_a, r_r=cfg.r_r, k_r=cfg.k_r, lambda0=cfg.lambda0,
                            max_degree=cfg.max_degree, scale_kind=cfg.scale_kind)
        return grow(traj, gcfg, StridgeConfig(lambda0=cfg.lambda0))
    library = enumerate_monomials(n, degree).with_scales(scales)
    lam = cfg.lam
    if cfg.lambda_mode == "theory":
        lam = theory_lambda(len(traj), library.m)
    elif cfg.lambda_mode == "path":
        lam = None
    if method == "lasso":
        return fit_lasso(traj, library, lam=lam), None
    if method == "dual_lasso":
        return fit_dual_lasso(traj, library, lam=lam, lambda2=cfg.lambda2, eps_active=cfg.eps_active), None
    X = evaluate(library, traj.states)
    scfg = StridgeConfig(lambda0=cfg.lambda0)
    W = np.zeros((library.m, n))
    active = []
    for i in range(n):
        W[:, i], act = stridge_fit(X, traj.derivatives[:, i], scfg, library)
        active.append(act)
    res = float(np.linalg.norm(traj.derivatives - X.values @ W))
    return SparseLinearModel(library, W, active, (scfg.lambda0,) * n, scfg.lambda_final, res, "stridge"), None


def _zero_model(traj, degree) -> SparseLinearModel:
    lib = enumerate_monomials(traj.n, degree)
    return SparseLinearModel(lib, np.zeros((lib.m, traj.n)), [[] for _ in range(traj.n)], (0.0,) * traj.n, 0.0, 0.0, "zero")


def _run_one(cfg, traj, truth, method, degree) -> MethodResult:
    start = time.perf_counter()
    if not np.any(traj.derivatives):
        model, trace = _zero_model(traj, degree), None
    else:
        model, trace = fit_method(cfg, traj, method, degree)
    elapsed = time.perf_counter() - start
    scales = _scales(cfg, traj)
    discovered = expand_model(model)
    final = threshold_model(discovered, scales, cfg.tau_final)
    norm = float(np.linalg.norm(traj.derivatives))
    res = MethodResult(
        method, degree, model.residual_fro, model.residual_fro / norm if norm > 0 else 0.0,
        model.nonzero_counts(), model, discovered, final, wall_clock=elapsed, trace=trace,
    )
    if truth is not None:
        s = score_against_truth(final, truth, scales, cfg.tau_final)
        res.precision, res.recall, res.coefficient_error = s["precision"], s["recall"], s["coefficient_error"]
    return res


def run_experiment(cfg: ExperimentConfig, methods: Optional[Sequence[str]] = None,
                   degrees: Optional[Sequence[int]] = None, write: bool = True) -> ComparisonReport:
    """Generate or load data, fit each (method, degree) pair, write artifacts."""
    cfg.validate()
    methods = list(methods or [cfg.method])
    degrees = list(degrees or [cfg.degree])
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}")
    for d in degrees:
        replace(cfg, degree=d).validate()
    traj, truth = load_trajectory(cfg)
    jobs = [(m, d) for m in methods for d in (degrees if m != "adaptive" else degrees[:1])]
    with ThreadPoolExecutor(max_workers=min(len(jobs), 4)) as pool:
        results = list(pool.map(lambda job: _run_one(cfg, traj, truth, *job), jobs))
    report = ComparisonReport(cfg.system, results)
    if write and cfg.out:
        write_artifacts(cfg, traj, report)
    return report


# -- artifacts --------------------------------------------------------------


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_artifacts(cfg: ExperimentConfig, traj, report: ComparisonReport) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    scales = _scales(cfg, traj)
    dynamics.write_trajectory_csv(traj, out / "trajectory.csv")
    cfg_dict = asdict(cfg)
    cfg_dict["x0"] = cfg.x0 if isinstance(cfg.x0, str) else list(cfg.x0)
    (out / "config.json").write_text(json.dumps(cfg_dict, indent=2, sort_keys=True) + "\n")
    residual_rows, nonzero_rows, coef_rows, timing_rows = [], [], [], []
    for r in report.results:
        tag = f"{r.method}_p{r.degree}" if r.method != "adaptive" else "adaptive"
        (out / f"model_{tag}.json").write_text(r.model.dumps() + "\n")
        (out / f"library_{tag}.json").write_text(r.model.library.dumps() + "\n")
        (out / f"equations_{tag}.txt").write_text(
            "# expanded\n" + render_model(r.discovered, scales) + "\n# thresholded\n" + render_model(r.final, scales) + "\n"
        )
        if r.trace is not None:
            (out / f"trace_{tag}.csv").write_text(r.trace.to_csv())
        residual_rows.append([r.method, r.degree, repr(r.residual_fro), repr(r.normalized_residual)])
        for i, c in enumerate(r.nonzero_counts):
            nonzero_rows.append([r.method, r.degree, f"x{i + 1}", c])
        lib = r.model.library
        for i in range(r.model.n_targets):
            for j in np.flatnonzero(r.model.weights[:, i]):
                coef_rows.append([r.method, r.degree, f"x{i + 1}", lib.descriptors[j].basis,
                                  " ".join(map(str, lib.descriptors[j].index)), repr(abs(float(r.model.weights[j, i])))])
        timing_rows.append([r.method, r.degree, f"{r.wall_clock:.3f}"])
    _write_csv(out / "residuals.csv", ["method", "degree", "residual_fro", "normalized_residual"], residual_rows)
    _write_csv(out / "nonzero.csv", ["method", "degree", "target", "nonzero"], nonzero_rows)
    _write_csv(out / "coefficients.csv", ["method", "degree", "target", "basis", "index", "abs_weight"], coef_rows)
    _write_csv(out / "timings.csv", ["method", "degree", "seconds"], timing_rows)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return out
