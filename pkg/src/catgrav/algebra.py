"""Polynomials in the field and its derivatives at labelled points.

A normal-ordered polynomial evaluated between coherent states reduces to a
c-number: every field factor ``D phi(x)`` becomes ``D(beta + alphabar)(x)`` and the
result is multiplied by ``<alpha|beta>``.  Nothing here touches ladder
operators; the Fock-space oracle does that independently.
"""

from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .modes import NONE, Derivative, SpacetimePoint, mode_values
from .states import CatState, CoherentAmplitude, coherent_overlap

__all__ = [
    "DEFAULT_DEGREE_CAP",
    "FieldFactor",
    "OperatorPolynomial",
    "ParityReport",
    "cat_expectation",
    "coherent_matrix_element",
    "even_odd_split_check",
    "expectation",
    "field",
    "matrix_element_scale",
]

DEFAULT_DEGREE_CAP = 8


@dataclass(frozen=True, order=True)
class FieldFactor:
    label: str
    deriv: Derivative = NONE

    def __str__(self) -> str:
        d = self.deriv.label()
        return f"{d} φ({self.label})" if d else f"φ({self.label})"


Monomial = tuple[FieldFactor, ...]


class OperatorPolynomial:
    """Canonical sum of monomials; factors commute (ordering is applied at evaluation)."""

    def __init__(self, terms: Mapping[Monomial, complex] | None = None, cap: int = DEFAULT_DEGREE_CAP):
        merged: dict[Monomial, complex] = defaultdict(complex)
        for mono, c in (terms or {}).items():
            merged[tuple(sorted(mono))] += complex(c)
        self.terms = {m: c for m, c in sorted(merged.items()) if c != 0}
        self.cap = cap
        if self.terms and self.degree > cap:
            raise ValueError(f"polynomial degree {self.degree} exceeds the degree cap {cap}")

    @classmethod
    def constant(cls, c: complex = 1.0, cap: int = DEFAULT_DEGREE_CAP) -> "OperatorPolynomial":
        return cls({(): c}, cap)

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    @property
    def labels(self) -> frozenset[str]:
        return frozenset(f.label for m in self.terms for f in m)

    def degrees(self) -> set[int]:
        return {len(m) for m in self.terms}

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float, complex)):
            other = OperatorPolynomial.constant(other)
        if not isinstance(other, OperatorPolynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(tuple(self.terms.items()))

    def _coerce(self, other) -> "OperatorPolynomial":
        if isinstance(other, OperatorPolynomial):
            return other
        return OperatorPolynomial.constant(other, self.cap)

    def __add__(self, other) -> "OperatorPolynomial":
        other = self._coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return OperatorPolynomial(terms, max(self.cap, other.cap))

    __radd__ = __add__

    def __neg__(self) -> "OperatorPolynomial":
        return OperatorPolynomial({m: -c for m, c in self.terms.items()}, self.cap)

    def __sub__(self, other) -> "OperatorPolynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "OperatorPolynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "OperatorPolynomial":
        if isinstance(other, (int, float, complex, np.number)):
            return OperatorPolynomial({m: c * other for m, c in self.terms.items()}, self.cap)
        other = self._coerce(other)
        cap = max(self.cap, other.cap)
        if self.degree + other.degree > cap:
            raise ValueError(f"product degree {self.degree + other.degree} exceeds the degree cap {cap}")
        if cap > DEFAULT_DEGREE_CAP:
            warnings.warn(f"degree cap {cap} > {DEFAULT_DEGREE_CAP}: term counts grow factorially", stacklevel=2)
        terms: dict[Monomial, complex] = defaultdict(complex)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                terms[m1 + m2] += c1 * c2
        return OperatorPolynomial(terms, cap)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "OperatorPolynomial":
        out = OperatorPolynomial.constant(1.0, self.cap)
        for _ in range(n):
            out = out * self
        return out

    def conj(self) -> "OperatorPolynomial":
        return OperatorPolynomial({m: np.conj(c) for m, c in self.terms.items()}, self.cap)

    def relabel(self, mapping: Mapping[str, str]) -> "OperatorPolynomial":
        terms = {
            tuple(FieldFactor(mapping.get(f.label, f.label), f.deriv) for f in m): c
            for m, c in self.terms.items()
        }
        return OperatorPolynomial(terms, self.cap)

    def with_cap(self, cap: int) -> "OperatorPolynomial":
        return OperatorPolynomial(self.terms, cap)

    @cached_property
    def compiled(self) -> tuple[list[FieldFactor], np.ndarray, np.ndarray]:
        """(distinct factors, padded index matrix, coefficients) for vectorized evaluation.

        Index ``len(factors)`` points at a constant 1 used as padding.
        """
        factors = sorted({f for m in self.terms for f in m})
        where = {f: i for i, f in enumerate(factors)}
        pad = len(factors)
        width = max(self.degree, 1)
        idx = np.full((len(self.terms), width), pad, dtype=np.int64)
        coef = np.empty(len(self.terms), dtype=complex)
        for r, (m, c) in enumerate(self.terms.items()):
            idx[r, : len(m)] = [where[f] for f in m]
            coef[r] = c
        return factors, idx, coef

    def evaluate(self, values: Mapping[FieldFactor, complex]) -> complex:
        """Substitute c-numbers for every factor."""
        factors, idx, coef = self.compiled
        if not self.terms:
            return 0j
        v = np.append(np.array([values[f] for f in factors], dtype=complex), 1.0)
        return complex(np.sum(coef * np.prod(v[idx], axis=1)))

    def abs_scale(self, values: Mapping[FieldFactor, complex]) -> float:
        """sum |c| prod |value|: magnitude before cancellations."""
        factors, idx, coef = self.compiled
        if not self.terms:
            return 0.0
        v = np.append(np.abs([values[f] for f in factors]), 1.0)
        return float(np.sum(np.abs(coef) * np.prod(v[idx], axis=1)))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.terms.items():
            cs = f"{c.real:g}" if c.imag == 0 else f"({c:g})"
            parts.append(" · ".join([cs] + [str(f) for f in m]))
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"OperatorPolynomial({len(self.terms)} terms, degree {self.degree})"


def field(label: str = "x", deriv: Derivative | tuple = NONE, cap: int = DEFAULT_DEGREE_CAP) -> OperatorPolynomial:
    if not isinstance(deriv, Derivative):
        deriv = Derivative(tuple(deriv))
    return OperatorPolynomial({(FieldFactor(label, deriv),): 1.0}, cap)


def _substituted_values(
    p: OperatorPolynomial,
    alpha: CoherentAmplitude,
    beta: CoherentAmplitude,
    assignment: Mapping[str, SpacetimePoint],
) -> dict[FieldFactor, complex]:
    if alpha.basis != beta.basis:
        raise ValueError("coherent amplitudes live on different mode bases")
    missing = p.labels - set(assignment)
    if missing:
        raise KeyError(f"unassigned point labels: {sorted(missing)}")
    basis = beta.basis
    a_conj = np.conj(alpha.alpha)
    values = {}
    for f in p.compiled[0]:
        pt = assignment[f.label]
        values[f] = complex(
            np.dot(beta.alpha, mode_values(basis, 1, f.deriv, pt))
            + np.dot(a_conj, mode_values(basis, -1, f.deriv, pt))
        )
    return values


def coherent_matrix_element(
    p: OperatorPolynomial,
    alpha: CoherentAmplitude,
    beta: CoherentAmplitude,
    assignment: Mapping[str, SpacetimePoint],
) -> complex:
    """<alpha| :p: |beta> by substituting beta(x) + alphabar(x) for every field factor."""
    values = _substituted_values(p, alpha, beta, assignment)
    return coherent_overlap(alpha, beta) * p.evaluate(values)


def matrix_element_scale(
    p: OperatorPolynomial,
    alpha: CoherentAmplitude,
    beta: CoherentAmplitude,
    assignment: Mapping[str, SpacetimePoint],
) -> float:
    """Magnitude scale |<alpha|beta>| sum |c| prod |value| for relative comparisons."""
    values = _substituted_values(p, alpha, beta, assignment)
    return abs(coherent_overlap(alpha, beta)) * p.abs_scale(values)


def cat_expectation(
    p: OperatorPolynomial,
    cat: CatState,
    assignment: Mapping[str, SpacetimePoint],
) -> complex:
    """<cat| :p: |cat> from the four coherent matrix elements.

    Each matrix element already carries its overlap, so the cross terms are
    proportional to eps = <alpha|-alpha>.
    """
    total = 0j
    for ci, gi in cat.branches():
        for cj, gj in cat.branches():
            total += np.conj(ci) * cj * coherent_matrix_element(p, gi, gj, assignment)
    return complex(total)


def expectation(
    p: OperatorPolynomial,
    state: CoherentAmplitude | CatState,
    assignment: Mapping[str, SpacetimePoint],
) -> complex:
    """Normal-ordered expectation value in a coherent or cat state."""
    if isinstance(state, CatState):
        return cat_expectation(p, state, assignment)
    return coherent_matrix_element(p, state, state, assignment)


@dataclass(frozen=True)
class ParityReport:
    parity: str  # "even", "odd" or "mixed"
    max_deviation: float
    diagonal: tuple[complex, complex]
    offdiagonal: tuple[complex, complex]


def even_odd_split_check(
    p: OperatorPolynomial,
    alpha: CoherentAmplitude,
    assignment: Mapping[str, SpacetimePoint],
) -> ParityReport:
    """Compare <-a|:p:|-a> with <a|:p:|a> and <-a|:p:|a> with <a|:p:|-a>.

    For homogeneous-parity p both pairs agree up to the sign (-1)^degree.  Mixed
    parity polynomials have no such identity; the deviation is then measured
    with sign +1 and the report is flagged.
    """
    degs = p.degrees()
    if all(d % 2 == 0 for d in degs):
        parity, sign = "even", 1
    elif all(d % 2 == 1 for d in degs):
        parity, sign = "odd", -1
    else:
        parity, sign = "mixed", 1
    neg = -alpha
    dd = coherent_matrix_element(p, alpha, alpha, assignment)
    nn = coherent_matrix_element(p, neg, neg, assignment)
    dn = coherent_matrix_element(p, alpha, neg, assignment)
    nd = coherent_matrix_element(p, neg, alpha, assignment)
    scale = max(abs(dd), abs(nn), abs(dn), abs(nd), 1e-300)
    dev = max(abs(nn - sign * dd), abs(nd - sign * dn)) / scale
    return ParityReport(parity, float(dev), (dd, nn), (dn, nd))
