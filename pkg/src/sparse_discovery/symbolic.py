"""Exact polynomial algebra for turning fitted models into monomial equations.

Legendre-basis models are expanded into the monomial basis with rational
arithmetic (weights are converted exactly from float), like terms are
collected, and only then rounded back to float.  The result does not depend on
the order in which terms were summed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from .featurelib import (
    FeatureDescriptor,
    default_variable_names,
    legendre_coefficients,
)


class MonomialPolynomial:
    """Sparse multivariate polynomial ``sum c * prod x_i**p_i``.

    Zero coefficients are never stored.
    """

    __slots__ = ("_terms", "_n")

    def __init__(self, terms: Optional[Mapping] = None, n: Optional[int] = None):
        clean = {}
        for k, v in (terms or {}).items():
            key = tuple(int(a) for a in k)
            v = float(v)
            if v != 0.0:
                clean[key] = clean.get(key, 0.0) + v
        clean = {k: v for k, v in clean.items() if v != 0.0}
        dims = {len(k) for k in clean}
        if len(dims) > 1:
            raise ValueError("all multi-indices must have the same length")
        if n is None:
            n = dims.pop() if dims else None
        elif dims and dims.pop() != n:
            raise ValueError("multi-index length does not match n")
        self._terms = dict(sorted(clean.items(), key=lambda kv: (sum(kv[0]), tuple(-a for a in kv[0]))))
        self._n = n

    @property
    def terms(self) -> Dict[tuple, float]:
        return dict(self._terms)

    @property
    def n(self) -> Optional[int]:
        return self._n

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __eq__(self, other):
        if not isinstance(other, MonomialPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __repr__(self):
        return f"MonomialPolynomial({self._terms!r})"

    def __add__(self, other: "MonomialPolynomial") -> "MonomialPolynomial":
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0.0) + v
        return MonomialPolynomial(out, self._n if self._n is not None else other._n)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return MonomialPolynomial({k: v * other for k, v in self._terms.items()}, self._n)
        out: dict = {}
        for ka, va in self._terms.items():
            for kb, vb in other._terms.items():
                k = tuple(a + b for a, b in zip(ka, kb))
                out[k] = out.get(k, 0.0) + va * vb
        return MonomialPolynomial(out, self._n)

    __rmul__ = __mul__

    def coefficient(self, index) -> float:
        return self._terms.get(tuple(index), 0.0)

    def support(self) -> set:
        return set(self._terms)

    def __call__(self, state) -> float:
        return evaluate_polynomial(self, state)


@dataclass(frozen=True)
class DiscoveredModel:
    """One monomial polynomial per state equation; equation ``i`` is ``dx_i/dt``."""

    n: int
    equations: tuple

    def __init__(self, n: int, equations: Sequence[MonomialPolynomial]):
        eqs = tuple(equations)
        if len(eqs) != n:
            raise ValueError(f"expected {n} equations, got {len(eqs)}")
        for eq in eqs:
            if eq.n is not None and eq.n != n:
                raise ValueError("equation dimension does not match model")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "equations", eqs)

    def __call__(self, state) -> np.ndarray:
        return np.array([evaluate_polynomial(eq, state) for eq in self.equations])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "equations": [
                {"target": f"x{i + 1}", "terms": [{"index": list(k), "coef": v} for k, v in eq]}
                for i, eq in enumerate(self.equations)
            ],
        }


# -- expansion --------------------------------------------------------------


def _frac_legendre(degree: int) -> list:
    return [Fraction(c) for c in legendre_coefficients(degree)]


def legendre_to_monomials(degree: int) -> MonomialPolynomial:
    """``Leg_d`` written in the univariate monomial basis."""
    return MonomialPolynomial({(k,): c for k, c in enumerate(legendre_coefficients(degree))}, 1)


def _expand_exact(descriptor: FeatureDescriptor, weight: Fraction) -> Dict[tuple, Fraction]:
    n = len(descriptor.index)
    out = {(0,) * n: weight}
    for i, a in enumerate(descriptor.index):
        if a == 0:
            continue
        if descriptor.basis == "legendre":
            factor = [(k, c) for k, c in enumerate(_frac_legendre(a)) if c != 0]
        else:
            factor = [(a, Fraction(1))]
        nxt: dict = {}
        for key, v in out.items():
            for k, c in factor:
                kk = key[:i] + (key[i] + k,) + key[i + 1:]
                nxt[kk] = nxt.get(kk, Fraction(0)) + v * c
        out = nxt
    return out


def expand_terms(n: int, pairs: Iterable) -> MonomialPolynomial:
    """Sum of ``weight * descriptor`` pairs, expanded exactly into monomials."""
    acc: Dict[tuple, Fraction] = {}
    for desc, w in pairs:
        w = float(w)
        if w == 0.0:
            continue
        for k, v in _expand_exact(desc, Fraction(w)).items():
            acc[k] = acc.get(k, Fraction(0)) + v
    return MonomialPolynomial({k: float(v) for k, v in acc.items() if v != 0}, n)


def expand_descriptor(descriptor: FeatureDescriptor, weight: float = 1.0) -> MonomialPolynomial:
    return expand_terms(len(descriptor.index), [(descriptor, weight)])


def expand_model(model) -> DiscoveredModel:
    """Expand a fitted linear model over a feature library into monomial form.

    ``model`` needs ``library`` (a FeatureLibrary) and ``weights`` (m x n).
    """
    lib = model.library
    W = np.asarray(model.weights, dtype=float)
    eqs = []
    for i in range(W.shape[1]):
        eqs.append(expand_terms(lib.n, zip(lib.descriptors, W[:, i])))
    return DiscoveredModel(lib.n, eqs)


# -- thresholding and evaluation -------------------------------------------


def monomial_scale(index, scales) -> float:
    return float(np.prod([float(s) ** a for s, a in zip(scales, index)]))


def threshold_polynomial(poly: MonomialPolynomial, scales, tau: float) -> MonomialPolynomial:
    if not poly.terms:
        return poly
    mags = {k: abs(v) * monomial_scale(k, scales) for k, v in poly}
    cutoff = tau * max(mags.values())
    return MonomialPolynomial({k: v for k, v in poly if mags[k] >= cutoff}, poly.n)


def threshold_model(model: DiscoveredModel, scales, tau_final: float = 0.05) -> DiscoveredModel:
    """Drop terms whose scale magnitude is below ``tau_final`` of the largest one."""
    if not 0 < tau_final < 1:
        raise ValueError("tau_final must lie in (0, 1)")
    if len(scales) != model.n:
        raise ValueError("need one scale per state variable")
    return DiscoveredModel(model.n, [threshold_polynomial(eq, scales, tau_final) for eq in model.equations])


def evaluate_polynomial(poly: MonomialPolynomial, state) -> float:
    x = np.asarray(state, dtype=float)
    total = 0.0
    for k, c in poly:
        total += c * float(np.prod(x ** np.asarray(k)))
    return total


# -- rendering --------------------------------------------------------------


def _fmt(c: float, digits: int) -> str:
    return f"{c:.{digits}g}"


def render_polynomial(poly: MonomialPolynomial, scales=None, variables=None, digits: int = 4) -> str:
    if not poly.terms:
        return "0"
    n = poly.n
    names = variables or default_variable_names(n)
    items = list(poly)
    if scales is not None:
        items.sort(key=lambda kv: -abs(kv[1]) * monomial_scale(kv[0], scales))
    out = []
    for pos, (k, c) in enumerate(items):
        factors = [v if a == 1 else f"{v}^{a}" for v, a in zip(names, k) if a]
        mag = _fmt(abs(c), digits)
        body = "*".join([mag] + factors) if factors else mag
        if pos == 0:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append(("- " if c < 0 else "+ ") + body)
    return " ".join(out)


def render_model(model: DiscoveredModel, scales=None, variables=None, digits: int = 4) -> str:
    names = variables or default_variable_names(model.n)
    return "\n".join(
        f"d{v}/dt = {render_polynomial(eq, scales, names, digits)}"
        for v, eq in zip(names, model.equations)
    )
