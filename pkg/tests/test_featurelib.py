from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_discovery import featurelib as fl
from sparse_discovery.featurelib import FeatureDescriptor, FeatureLibrary


@pytest.mark.parametrize("n", range(1, 6))
@pytest.mark.parametrize("p", range(0, 11))
def test_library_size_matches_binomial(n, p):
    assert fl.enumerate_monomials(n, p).m == comb(n + p, n)


def test_graded_lex_order():
    assert list(fl.graded_lex(2, 2)) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert list(fl.graded_lex(3, 4)) == list(fl.graded_lex(3, 4))


def test_monomial_prefix_property():
    rng = np.random.default_rng(1)
    states = rng.uniform(-2, 2, (30, 3))
    small = fl.evaluate(fl.enumerate_monomials(3, 2), states).values
    big = fl.evaluate(fl.enumerate_monomials(3, 4), states).values
    np.testing.assert_array_equal(big[:, : small.shape[1]], small)


def test_evaluate_monomials_by_hand():
    lib = fl.enumerate_monomials(2, 2)
    X = fl.evaluate(lib, np.array([[2.0, 3.0]])).values[0]
    np.testing.assert_array_equal(X, [1, 2, 3, 4, 6, 9])
    assert [d.name(["x", "y"]) for d in lib.descriptors][4] == "x*y"


def test_evaluate_rejects_nonfinite():
    with pytest.raises(ValueError):
        fl.evaluate(fl.enumerate_monomials(1, 1), np.array([[np.nan]]))


def test_legendre_orthogonality_by_quadrature():
    u, w = np.polynomial.legendre.leggauss(64)
    for a in range(9):
        for b in range(9):
            val = np.sum(w * fl.legendre_eval(a, u) * fl.legendre_eval(b, u))
            expect = 2.0 / (2 * a + 1) if a == b else 0.0
            assert abs(val - expect) < 1e-10


def test_legendre_matches_numpy():
    u = np.linspace(-1.5, 1.5, 13)
    for d in range(12):
        c = np.zeros(d + 1)
        c[d] = 1.0
        np.testing.assert_allclose(fl.legendre_eval(d, u), np.polynomial.legendre.legval(u, c), atol=1e-12)


def test_legendre_coefficients_degree_four():
    from fractions import Fraction

    c = fl.legendre_coefficients(4)
    assert (c[4], c[2], c[0]) == (Fraction(35, 8), Fraction(-30, 8), Fraction(3, 8))
    assert c[1] == c[3] == 0


@pytest.mark.parametrize(
    "index,scales,w,expect",
    [((1, 0, 1), (10, 10, 10), 0.5, 50.0), ((2, 0, 0), (2, 1, 1), 3.0, 12.0), ((1, 1, 1), (3, 4, 5), 0.0, 0.0)],
)
def test_scale_magnitude_examples(index, scales, w, expect):
    lib = FeatureLibrary(3, (FeatureDescriptor("monomial", index),), scales)
    assert fl.scale_magnitude(lib, 0, w) == pytest.approx(expect)


def test_legendre_scale_uses_majorant():
    # |L2|(L) = 1.5 L^2 + 0.5 has no root, unlike L2(1/sqrt(3)) = 0
    lib = FeatureLibrary(1, (FeatureDescriptor("legendre", (2,)),), (3 ** -0.5,))
    assert fl.scale_magnitude(lib, 0, 1.0) == pytest.approx(1.0)


def test_estimate_scales():
    np.testing.assert_array_equal(fl.estimate_scales(np.tile([1.0, -2.0, 3.0], (5, 1))), [1, 2, 3])
    np.testing.assert_array_equal(fl.estimate_scales(np.zeros((4, 2))), [1e-8, 1e-8])


def test_lorenz_scales(lorenz_exact):
    # these fall outside [10, 60] for x because of the 10*(y*z - x) term
    np.testing.assert_allclose(fl.estimate_scales(lorenz_exact.states), [163.6, 28.1, 55.2], atol=0.1)
    np.testing.assert_allclose(fl.estimate_scales(lorenz_exact.states, "rms"), [45.9, 5.81, 27.9], atol=0.05)


def test_duplicate_descriptor_rejected():
    d = FeatureDescriptor("legendre", (0, 0))
    with pytest.raises(ValueError):
        FeatureLibrary(2, (d, d))


def test_manifest_round_trip():
    lib = fl.enumerate_legendre(3, 2).with_scales([1.0, 2.0, 3.0])
    back = FeatureLibrary.from_manifest(lib.to_manifest())
    assert back == lib
    assert lib.to_manifest()["basis"] == "legendre"


def test_overflow_guard():
    with pytest.raises(OverflowError):
        fl.enumerate_monomials(60, 60)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 5))
def test_library_descriptors_distinct_and_sized(n, p):
    lib = fl.enumerate_legendre(n, p)
    assert len(set(lib.descriptors)) == lib.m == fl.library_size(n, p)
    degrees = [d.degree for d in lib.descriptors]
    assert degrees == sorted(degrees)
