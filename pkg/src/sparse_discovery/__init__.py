"""Sparse identification of polynomial dynamics.

LASSO with SAFE screening, a dual-LASSO active-set refit, STRidge and adaptive
Legendre library growth, plus exact symbolic expansion to monomials.
"""

from .adaptive_growth import GrowthConfig, GrowthTrace, NoModelFoundError, grow
from .dual_lasso import DualLassoConfig, PipelineError, SparseLinearModel, fit_dual_lasso, fit_lasso
from .dynamics import StateTrajectory, get_system, integrate, lorenz63, lorenz_quadratic, with_finite_differences
from .experiments import ComparisonReport, ConfigError, ExperimentConfig, run_experiment, score_against_truth
from .featurelib import FeatureLibrary, enumerate_legendre, enumerate_monomials, estimate_scales, evaluate
from .sparse_solvers import lasso_cd, ridge, safe_screen
from .stridge import StridgeConfig, stridge_fit
from .symbolic import DiscoveredModel, MonomialPolynomial, expand_model, render_model, threshold_model

__version__ = "0.1.0"
