"""Polynomial feature libraries: enumeration, evaluation and scale magnitudes.

Terms are identified by multi-indices ``(p_1, ..., p_n)``.  A monomial
descriptor stands for ``prod x_i**p_i``; a Legendre descriptor for the tensor
product ``prod Leg_{p_i}(x_i)`` evaluated on the raw (unscaled) states.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

MultiIndex = tuple  # tuple[int, ...]

BASES = ("monomial", "legendre")
MAX_LEGENDRE_DEGREE = 30
SCALE_FLOOR = 1e-8
_INT64_MAX = np.iinfo(np.int64).max


def total_degree(index: MultiIndex) -> int:
    return int(sum(index))


@dataclass(frozen=True)
class FeatureDescriptor:
    basis: str
    index: MultiIndex

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}")
        idx = tuple(int(a) for a in self.index)
        if any(a < 0 for a in idx):
            raise ValueError("multi-index entries must be non-negative")
        object.__setattr__(self, "index", idx)

    @property
    def degree(self) -> int:
        return total_degree(self.index)

    def name(self, variables: Optional[Sequence[str]] = None) -> str:
        vars_ = variables or default_variable_names(len(self.index))
        parts = []
        for v, a in zip(vars_, self.index):
            if a == 0:
                continue
            if self.basis == "legendre":
                parts.append(f"L{a}({v})")
            else:
                parts.append(v if a == 1 else f"{v}^{a}")
        return "*".join(parts) if parts else "1"


@dataclass(frozen=True)
class FeatureLibrary:
    n: int
    descriptors: tuple
    scales: tuple = None

    def __post_init__(self):
        descs = tuple(self.descriptors)
        if any(len(d.index) != self.n for d in descs):
            raise ValueError("descriptor dimension does not match library dimension")
        if len(set(descs)) != len(descs):
            raise ValueError("library descriptors must be distinct")
        scales = (1.0,) * self.n if self.scales is None else tuple(float(s) for s in self.scales)
        if len(scales) != self.n or any(not s > 0 for s in scales):
            raise ValueError("scales must be n positive reals")
        object.__setattr__(self, "descriptors", descs)
        object.__setattr__(self, "scales", scales)

    def __len__(self) -> int:
        return len(self.descriptors)

    @property
    def m(self) -> int:
        return len(self.descriptors)

    @property
    def basis(self) -> str:
        kinds = {d.basis for d in self.descriptors}
        if len(kinds) > 1:
            return "mixed"
        return kinds.pop() if kinds else "monomial"

    def with_scales(self, scales: Sequence[float]) -> "FeatureLibrary":
        return FeatureLibrary(self.n, self.descriptors, tuple(scales))

    def subset(self, columns: Sequence[int]) -> "FeatureLibrary":
        return FeatureLibrary(self.n, tuple(self.descriptors[j] for j in columns), self.scales)

    def indices(self) -> list:
        return [d.index for d in self.descriptors]

    def to_manifest(self) -> dict:
        return {
            "n": self.n,
            "basis": self.basis,
            "descriptors": [list(d.index) for d in self.descriptors],
            "scales": list(self.scales),
        }

    @classmethod
    def from_manifest(cls, data: dict) -> "FeatureLibrary":
        basis = data["basis"]
        descs = tuple(FeatureDescriptor(basis, tuple(ix)) for ix in data["descriptors"])
        return cls(int(data["n"]), descs, tuple(data["scales"]))

    def dumps(self) -> str:
        return json.dumps(self.to_manifest())


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    library: FeatureLibrary
    column_norms: np.ndarray = field(default=None)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != self.library.m:
            raise ValueError("design matrix columns must match the library")
        norms = np.linalg.norm(vals, axis=0)
        vals.flags.writeable = False
        norms.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "column_norms", norms)

    @property
    def shape(self):
        return self.values.shape


def default_variable_names(n: int) -> list:
    if n <= 3:
        return ["x", "y", "z"][:n]
    return [f"x{i + 1}" for i in range(n)]


def library_size(n: int, p: int) -> int:
    return math.comb(n + p, n)


def graded_lex(n: int, p: int, min_degree: int = 0) -> Iterator[MultiIndex]:
    """Multi-indices of total degree ``min_degree..p``, degree ascending.

    Within a degree the order is lexicographically descending, so for n=2,
    p=1 the sequence is (0,0), (1,0), (0,1).
    """

    def compositions(d, k):
        if k == 1:
            yield (d,)
            return
        for first in range(d, -1, -1):
            for rest in compositions(d - first, k - 1):
                yield (first,) + rest

    for d in range(min_degree, p + 1):
        yield from compositions(d, n)


def enumerate_monomials(n: int, p: int) -> FeatureLibrary:
    """All monomials in ``n`` variables of total degree at most ``p``."""
    if n < 1 or p < 0:
        raise ValueError("need n >= 1 and p >= 0")
    m = library_size(n, p)
    if m > _INT64_MAX:
        raise OverflowError(f"library size C({n + p}, {n}) exceeds the 64-bit integer range")
    descs = tuple(FeatureDescriptor("monomial", ix) for ix in graded_lex(n, p))
    return FeatureLibrary(n, descs)


def enumerate_legendre(n: int, p: int) -> FeatureLibrary:
    if n < 1 or p < 0:
        raise ValueError("need n >= 1 and p >= 0")
    return FeatureLibrary(n, tuple(FeatureDescriptor("legendre", ix) for ix in graded_lex(n, p)))


def legendre_eval(degree: int, u):
    """Legendre polynomial of the given degree via the Bonnet recurrence."""
    if degree < 0 or degree > MAX_LEGENDRE_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_LEGENDRE_DEGREE}]")
    u = np.asarray(u, dtype=float)
    prev, cur = np.ones_like(u), u.copy()
    if degree == 0:
        return prev if prev.ndim else float(prev)
    for d in range(1, degree):
        prev, cur = cur, ((2 * d + 1) * u * cur - d * prev) / (d + 1)
    return cur if cur.ndim else float(cur)


@lru_cache(maxsize=None)
def legendre_coefficients(degree: int) -> tuple:
    """Monomial coefficients ``(c_0, ..., c_d)`` of ``Leg_d``.

    The Bonnet recurrence is run on coefficient vectors in exact rational
    arithmetic and only converted to float at the end.
    """
    from fractions import Fraction

    if degree < 0 or degree > MAX_LEGENDRE_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_LEGENDRE_DEGREE}]")
    prev = [Fraction(1)]
    if degree == 0:
        return (1.0,)
    cur = [Fraction(0), Fraction(1)]
    for d in range(1, degree):
        nxt = [Fraction(0)] * (d + 2)
        for k, c in enumerate(cur):
            nxt[k + 1] += Fraction(2 * d + 1, d + 1) * c
        for k, c in enumerate(prev):
            nxt[k] -= Fraction(d, d + 1) * c
        prev, cur = cur, nxt
    return tuple(float(c) for c in cur)


def legendre_majorant(degree: int, u: float) -> float:
    """``|Leg_d|(u)``: the polynomial with absolute-valued coefficients, at ``|u|``."""
    u = abs(float(u))
    return float(sum(abs(c) * u**k for k, c in enumerate(legendre_coefficients(degree))))


def _univariate(basis: str, degree: int, u: np.ndarray) -> np.ndarray:
    if basis == "legendre":
        return legendre_eval(degree, u)
    return u**degree


def evaluate(library: FeatureLibrary, states) -> DesignMatrix:
    """Evaluate every library term on every row of ``states``."""
    x = np.asarray(states, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != library.n:
        raise ValueError(f"states have {x.shape[1]} columns, library expects {library.n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("states contain non-finite values")
    cache = {}

    def factor(basis, i, a):
        key = (basis, i, a)
        if key not in cache:
            cache[key] = _univariate(basis, a, x[:, i])
        return cache[key]

    cols = np.ones((x.shape[0], library.m))
    for j, d in enumerate(library.descriptors):
        for i, a in enumerate(d.index):
            if a:
                cols[:, j] *= factor(d.basis, i, a)
    return DesignMatrix(cols, library)


def term_scale(descriptor: FeatureDescriptor, scales: Sequence[float]) -> float:
    """Typical magnitude of a unit-weight term when each x_i is replaced by L_i."""
    out = 1.0
    for a, s in zip(descriptor.index, scales):
        if a == 0:
            continue
        out *= legendre_majorant(a, s) if descriptor.basis == "legendre" else float(s) ** a
    return out


def scale_magnitude(library: FeatureLibrary, j: int, w: float) -> float:
    """Net magnitude ``|w| * prod L_i^p_i`` of weighted term ``j``."""
    if w == 0:
        return 0.0
    return abs(float(w)) * term_scale(library.descriptors[j], library.scales)


def scale_magnitudes(library: FeatureLibrary, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    base = np.array([term_scale(d, library.scales) for d in library.descriptors])
    return np.abs(w) * (base if w.ndim == 1 else base[:, None])


def estimate_scales(states, kind: str = "max") -> np.ndarray:
    """Data-driven typical scale of each state variable.

    ``kind="max"`` uses ``max_t |x_i|``; ``kind="rms"`` the root mean square.
    Both are floored at ``SCALE_FLOOR``.
    """
    x = np.atleast_2d(np.asarray(states, dtype=float))
    if x.shape[0] < 1:
        raise ValueError("need at least one sample")
    if kind == "max":
        s = np.max(np.abs(x), axis=0)
    elif kind == "rms":
        s = np.sqrt(np.mean(x**2, axis=0))
    else:
        raise ValueError(f"unknown scale estimator {kind!r}")
    return np.maximum(s, SCALE_FLOOR)
