from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_discovery.featurelib import FeatureDescriptor, FeatureLibrary, legendre_eval
from sparse_discovery.symbolic import (
    DiscoveredModel,
    MonomialPolynomial,
    evaluate_polynomial,
    expand_descriptor,
    expand_model,
    expand_terms,
    legendre_to_monomials,
    render_model,
    threshold_model,
)

LEG = "legendre"


def rodrigues(d):
    # d-th derivative of (u^2 - 1)^d / (2^d d!), exact
    from math import comb, factorial

    coefs = [Fraction(0)] * (2 * d + 1)
    for k in range(d + 1):
        coefs[2 * k] = Fraction(comb(d, k) * (-1) ** (d - k))
    for _ in range(d):
        coefs = [c * i for i, c in enumerate(coefs)][1:]
    return [c / (2**d * factorial(d)) for c in coefs]


def test_small_legendre_expansions():
    assert legendre_to_monomials(0).terms == {(0,): 1.0}
    assert legendre_to_monomials(1).terms == {(1,): 1.0}
    assert legendre_to_monomials(2).terms == {(2,): 1.5, (0,): -0.5}


@pytest.mark.parametrize("d", range(0, 13))
def test_recurrence_matches_rodrigues(d):
    expect = {(k,): float(c) for k, c in enumerate(rodrigues(d)) if c != 0}
    assert legendre_to_monomials(d).terms == expect


def test_expand_simple_descriptors():
    assert expand_descriptor(FeatureDescriptor(LEG, (0, 1, 1))).terms == {(0, 1, 1): 1.0}
    assert expand_descriptor(FeatureDescriptor(LEG, (2,))).terms == {(2,): 1.5, (0,): -0.5}
    assert expand_descriptor(FeatureDescriptor("monomial", (2, 1)), 3.0).terms == {(2, 1): 3.0}


descriptors = st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5)).map(lambda ix: FeatureDescriptor(LEG, ix))


@settings(max_examples=200, deadline=None)
@given(descriptors, st.floats(-50, 50, allow_nan=False), st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3))
def test_expansion_round_trip(desc, w, state):
    direct = w * np.prod([legendre_eval(a, u) for a, u in zip(desc.index, state)])
    got = evaluate_polynomial(expand_descriptor(desc, w), state)
    assert got == pytest.approx(direct, rel=1e-10, abs=1e-10 * max(1.0, abs(w)))


@settings(max_examples=50, deadline=None)
@given(descriptors, descriptors, st.floats(-5, 5), st.floats(-5, 5))
def test_linearity_and_canonical_order(d1, d2, w1, w2):
    both = expand_terms(3, [(d1, w1), (d2, w2)])
    swapped = expand_terms(3, [(d2, w2), (d1, w1)])
    assert both == swapped and list(both) == list(swapped)
    state = (0.3, -0.7, 1.1)
    total = evaluate_polynomial(expand_descriptor(d1, w1), state) + evaluate_polynomial(expand_descriptor(d2, w2), state)
    assert evaluate_polynomial(both, state) == pytest.approx(total, rel=1e-9, abs=1e-9)


def test_polynomial_algebra():
    p = MonomialPolynomial({(1, 0): 2.0, (0, 1): 0.0})
    assert len(p) == 1
    q = MonomialPolynomial({(0, 1): 1.0})
    assert (p * q).terms == {(1, 1): 2.0}
    assert (p + p * -1).terms == {}
    assert evaluate_polynomial(MonomialPolynomial({(1, 1): 1.0}), (3, 4)) == 12
    assert evaluate_polynomial(MonomialPolynomial(), (3, 4)) == 0
    with pytest.raises(ValueError):
        MonomialPolynomial({(1,): 1.0, (1, 0): 1.0})


def test_leg3_round_trip():
    assert evaluate_polynomial(legendre_to_monomials(3), (0.7,)) == pytest.approx(legendre_eval(3, 0.7), abs=1e-12)


def test_threshold_examples():
    single = DiscoveredModel(1, [MonomialPolynomial({(3,): 1e-9})])
    assert threshold_model(single, [1.0], 0.99) == single
    two = DiscoveredModel(1, [MonomialPolynomial({(1,): 100.0, (0,): 1.0})])
    assert threshold_model(two, [1.0], 0.05).equations[0].terms == {(1,): 100.0}
    with pytest.raises(ValueError):
        threshold_model(two, [1.0], 1.0)


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), st.floats(-100, 100), max_size=8),
       st.floats(0.01, 0.99))
def test_threshold_idempotent(terms, tau):
    poly = MonomialPolynomial(terms, 2)
    model = DiscoveredModel(2, [poly, poly * -0.5])
    once = threshold_model(model, [3.0, 0.5], tau)
    assert threshold_model(once, [3.0, 0.5], tau) == once


class _Stub:
    def __init__(self, library, weights):
        self.library, self.weights = library, weights


def test_expand_model_and_render():
    lib = FeatureLibrary(3, (FeatureDescriptor(LEG, (2, 2, 0)), FeatureDescriptor(LEG, (0, 0, 1))))
    model = expand_model(_Stub(lib, np.array([[0.0, 0.0, 4.0 / 9.0], [0.0, 0.0, -2.62]])))
    z = model.equations[2]
    assert z.coefficient((2, 2, 0)) == pytest.approx(1.0)
    assert z.coefficient((0, 0, 0)) == pytest.approx(1.0 / 9.0)
    text = render_model(threshold_model(model, [9.22, 1.18, 55.9], 0.05), [9.22, 1.18, 55.9])
    assert text.splitlines()[2] == "dz/dt = -2.62*z + 1*x^2*y^2 - 0.3333*x^2"
    assert text.splitlines()[0] == "dx/dt = 0"


def test_printed_legendre_z_equation_expands_to_printed_monomials():
    # printed adaptive-library z equation, three separate constants summed
    lib = FeatureLibrary(3, (
        FeatureDescriptor(LEG, (2, 2, 0)), FeatureDescriptor(LEG, (2, 0, 0)),
        FeatureDescriptor(LEG, (0, 2, 0)), FeatureDescriptor(LEG, (0, 0, 1)), FeatureDescriptor(LEG, (0, 0, 0)),
    ))
    weights = np.zeros((5, 3))
    weights[:, 2] = [0.43, 0.22, 0.21, -2.62, 2.09 - 0.22 - 1.95]
    z = expand_model(_Stub(lib, weights)).equations[2]
    assert z.coefficient((2, 2, 0)) == pytest.approx(0.97, abs=0.01)
    assert z.coefficient((2, 0, 0)) == pytest.approx(0.007, abs=0.01)
    assert z.coefficient((0, 2, 0)) == pytest.approx(-0.007, abs=0.01)
    assert z.coefficient((0, 0, 1)) == pytest.approx(-2.62, abs=0.01)
    # the printed weights give 0.25*0.43 - 0.5*(0.22+0.21) - 0.08 = -0.1875 for
    # the constant, not the printed 0.027; both fall below the final threshold
    assert z.coefficient((0, 0, 0)) == pytest.approx(-0.1875, abs=1e-12)
