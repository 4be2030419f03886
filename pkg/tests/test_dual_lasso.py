import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_discovery import dynamics
from sparse_discovery.dual_lasso import (
    DualLassoConfig,
    PipelineError,
    SparseLinearModel,
    dual_active_set,
    dual_from_primal,
    dual_objective,
    fit_dual_lasso,
    fit_lasso,
)
from sparse_discovery.featurelib import enumerate_monomials, estimate_scales, evaluate
from sparse_discovery.sparse_solvers import lasso_cd, lasso_lambda_max

X_, Y_, Z_ = (1, 0, 0), (0, 1, 0), (0, 0, 1)
TRUE_SUPPORT = [{X_, (0, 1, 1)}, {X_, (1, 0, 1)}, {(1, 1, 0), Z_}]
TRUE_COEFS = [{X_: -10.0, (0, 1, 1): 10.0}, {X_: 28.0, (1, 0, 1): -1.0}, {(1, 1, 0): 1.0, Z_: -2.667}]


def support(model):
    idx = model.library.indices()
    return [{idx[j] for j in np.flatnonzero(model.weights[:, i])} for i in range(model.n_targets)]


def test_dual_from_zero_weights_is_target():
    y = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(dual_from_primal(np.eye(3), y, np.zeros(3)).theta, y)


def test_dual_unique_for_duplicated_column():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((30, 5))
    X = np.column_stack([A, A[:, 2]])
    y = rng.standard_normal(30)
    lam = 0.1 * lasso_lambda_max(X, y)
    w1 = lasso_cd(X, y, lam).weights
    w2 = lasso_cd(X, y, lam, reverse=True).weights
    # a second primal solution: move mass between the duplicates
    w3 = w1.copy()
    w3[2], w3[5] = 0.3 * (w1[2] + w1[5]), 0.7 * (w1[2] + w1[5])
    t1 = dual_from_primal(X, y, w1).theta
    for w in (w2, w3):
        np.testing.assert_allclose(dual_from_primal(X, y, w).theta, t1, atol=1e-8)


def test_scalar_active_set():
    X = np.array([[1.0], [0.0]])
    y = np.array([2.0, 0.0])
    fit = lasso_cd(X, y, 1.0)
    assert fit.weights[0] == pytest.approx(1.0)
    theta = dual_from_primal(X, y, fit.weights).theta
    np.testing.assert_allclose(theta, [1.0, 0.0])
    np.testing.assert_array_equal(dual_active_set(X, theta, 1.0), [0])
    assert dual_active_set(X, np.zeros(2), 1.0).size == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 0.95))
def test_dual_feasibility_and_identity(seed, frac):
    rng = np.random.default_rng(seed)
    X, y = rng.standard_normal((25, 15)), rng.standard_normal(25)
    lam = frac * lasso_lambda_max(X, y)
    fit = lasso_cd(X, y, lam)
    assert fit.converged
    theta = dual_from_primal(X, y, fit.weights).theta
    assert np.max(np.abs(X.T @ theta)) <= lam * (1 + 1e-6)
    fitted = X @ fit.weights
    assert dual_objective(y, theta) == pytest.approx(y @ y - fitted @ fitted, rel=1e-6, abs=1e-9)
    assert y @ y - theta @ theta == pytest.approx(2 * y @ fitted - fitted @ fitted, rel=1e-6, abs=1e-9)
    # every primal nonzero is dual-active
    assert set(np.flatnonzero(fit.weights)) <= set(dual_active_set(X, theta, lam))


def test_model_rejects_weights_outside_active_set():
    lib = enumerate_monomials(1, 1)
    with pytest.raises(ValueError):
        SparseLinearModel(lib, np.array([[1.0], [0.0]]), [[1]])


def test_zero_derivatives_give_zero_model():
    traj = dynamics.StateTrajectory(np.arange(5.0), np.random.default_rng(0).standard_normal((5, 2)), np.zeros((5, 2)))
    lib = enumerate_monomials(2, 2)
    for fit in (fit_dual_lasso, fit_lasso):
        model = fit(traj, lib)
        assert not model.weights.any()
        assert all(a.size == 0 for a in model.active)
        assert model.residual_fro == 0.0


def test_lorenz_p3_exact(lorenz_exact):
    lib = enumerate_monomials(3, 3).with_scales(estimate_scales(lorenz_exact.states, "rms"))
    model = fit_dual_lasso(lorenz_exact, lib)
    assert support(model) == TRUE_SUPPORT
    idx = lib.indices()
    for i, coefs in enumerate(TRUE_COEFS):
        for k, c in coefs.items():
            assert model.weights[idx.index(k), i] == pytest.approx(c, rel=0.02)
    # the stored residual is the residual of the stored weights
    X = evaluate(lib, lorenz_exact.states).values
    assert model.residual_fro == pytest.approx(np.linalg.norm(lorenz_exact.derivatives - X @ model.weights), rel=1e-10)
    for i in range(3):
        assert set(np.flatnonzero(model.weights[:, i])) <= set(model.active[i])


def test_active_set_stable_across_initial_conditions():
    sys = dynamics.lorenz63()
    supports = []
    for x0 in ((1.0, 1.0, 1.0), (-2.0, 3.0, 10.0)):
        traj = dynamics.integrate(sys, x0, 1e-3, 10_000)
        lib = enumerate_monomials(3, 3).with_scales(estimate_scales(traj.states, "rms"))
        supports.append(support(fit_dual_lasso(traj, lib)))
    assert supports[0] == supports[1] == TRUE_SUPPORT


def test_fixed_lambda_nonconvergence_raises(lorenz_exact):
    lib = enumerate_monomials(3, 3)
    with pytest.raises(PipelineError) as err:
        fit_dual_lasso(lorenz_exact, lib, lam=1e-6, config=DualLassoConfig(max_iter=3))
    assert err.value.diagnostics["target"] == 0


def test_lasso_denser_than_dual(lorenz_exact):
    lib = enumerate_monomials(3, 3).with_scales(estimate_scales(lorenz_exact.states, "rms"))
    lasso = fit_lasso(lorenz_exact, lib)
    assert sum(lasso.nonzero_counts()) > 6


def test_model_json_format(lorenz_exact):
    lib = enumerate_monomials(3, 2)
    model = fit_dual_lasso(lorenz_exact, lib)
    data = json.loads(model.dumps())
    assert set(data) >= {"basis", "equations", "lambda", "lambda2", "residual"}
    assert data["equations"][0]["target"] == "x1"
    assert all(set(t) == {"index", "coef"} for eq in data["equations"] for t in eq["terms"])
