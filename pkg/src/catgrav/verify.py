"""Reusable verification suites: mode-basis checks and closed-form vs Fock-oracle comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .algebra import OperatorPolynomial, coherent_matrix_element, field, matrix_element_scale
from .modes import (
    BOX,
    NONE,
    Derivative,
    ModeBasis,
    ModeSum,
    SpacetimePoint,
    kg_inner_product,
    kg_residual,
    mode_value,
)
from .oracle import TruncatedFock, coherent_state_vector, normal_ordered_expectation, truncation_bound
from .states import CoherentAmplitude

__all__ = [
    "Check",
    "OracleComparison",
    "compare_with_oracle",
    "mode_checks",
    "random_amplitude",
    "random_polynomial",
]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


def derivative_choices(d: int) -> list[Derivative]:
    axes = range(d + 1)
    out = [NONE] + [Derivative((a,)) for a in axes]
    out += [Derivative((a, b)) for a in axes for b in axes if a <= b]
    return out + [BOX]


def random_polynomial(
    rng: np.random.Generator,
    d: int,
    labels=("x", "y"),
    max_degree: int = 4,
    max_terms: int = 4,
) -> OperatorPolynomial:
    """Random complex combination of field monomials of degree 1..max_degree."""
    derivs = derivative_choices(d)
    out = OperatorPolynomial()
    for _ in range(rng.integers(1, max_terms + 1)):
        deg = int(rng.integers(1, max_degree + 1))
        mono = OperatorPolynomial.constant(complex(rng.normal(), rng.normal()))
        for _ in range(deg):
            lab = labels[rng.integers(len(labels))]
            mono = mono * field(lab, derivs[rng.integers(len(derivs))])
        out = out + mono
    return out


def random_amplitude(rng: np.random.Generator, basis: ModeBasis, max_norm: float) -> CoherentAmplitude:
    """Uniform direction, |alpha| uniform in [0, max_norm]."""
    v = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    v *= rng.uniform(0, max_norm) / np.linalg.norm(v)
    return CoherentAmplitude(basis, v)


@dataclass
class OracleComparison:
    closed: complex
    oracle: complex
    scale: float
    truncation_bound: float
    tolerance: float

    @property
    def deviation(self) -> float:
        return abs(self.closed - self.oracle) / max(self.scale, 1e-300)

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)


def compare_with_oracle(
    p: OperatorPolynomial,
    alpha: CoherentAmplitude,
    beta: CoherentAmplitude,
    assignment,
    cutoff: int,
    rtol: float = 1e-7,
    tail_tol: float = 1e-4,
) -> OracleComparison:
    """Substitution rule vs explicit normal-ordered Fock matrix element.

    Deviation is relative to the cancellation-free magnitude of the matrix
    element; tolerance is max(rtol, 10 x truncation bound).
    """
    basis = alpha.basis
    space = TruncatedFock(len(basis), cutoff)
    bra = coherent_state_vector(alpha, space, tail_tol)
    ket = coherent_state_vector(beta, space, tail_tol)
    oracle = normal_ordered_expectation(p, bra, ket, space, basis, assignment)
    closed = coherent_matrix_element(p, alpha, beta, assignment)
    bound = truncation_bound(alpha, beta, cutoff, p.degree)
    scale = matrix_element_scale(p, alpha, beta, assignment)
    return OracleComparison(closed, oracle, scale, bound, max(rtol, 10 * bound))


def _orthonormality_deviation(basis: ModeBasis, t: float, points: int | None) -> float:
    M = len(basis)
    plus = [ModeSum.single(basis, i, 1) for i in range(M)]
    minus = [ModeSum.single(basis, i, -1) for i in range(M)]
    worst = 0.0
    for i in range(M):
        for j in range(M):
            delta = 1.0 if i == j else 0.0
            worst = max(
                worst,
                abs(kg_inner_product(plus[i], plus[j], basis, t, points) - delta),
                abs(kg_inner_product(minus[i], minus[j], basis, t, points) + delta),
                abs(kg_inner_product(plus[i], minus[j], basis, t, points)),
            )
    return worst


def mode_checks(
    basis: ModeBasis,
    seed: int = 0,
    n_points: int = 100,
    corrupt_omega: float = 0.0,
    quadrature_points: int | None = None,
    tol: float = 1e-12,
) -> list[Check]:
    """Orthonormality, slice independence and on-shell residual of a basis.

    ``corrupt_omega`` shifts every frequency off shell (negative control for the
    residual check).
    """
    rng = np.random.default_rng(seed)
    checks = [Check("orthonormality", _orthonormality_deviation(basis, 0.0, quadrature_points), tol)]

    M = len(basis)
    worst = 0.0
    for _ in range(5):
        f = ModeSum(basis, rng.normal(size=M) + 1j * rng.normal(size=M), rng.normal(size=M) + 1j * rng.normal(size=M))
        g = ModeSum(basis, rng.normal(size=M) + 1j * rng.normal(size=M), rng.normal(size=M) + 1j * rng.normal(size=M))
        v0 = kg_inner_product(f, g, basis, 0.0, quadrature_points)
        v1 = kg_inner_product(f, g, basis, 0.7, quadrature_points)
        worst = max(worst, abs(v0 - v1) / max(abs(v0), 1.0))
    checks.append(Check("slice_independence", worst, tol))

    target = basis.with_omega(basis.omega + corrupt_omega) if corrupt_omega else basis
    worst = 0.0
    for _ in range(n_points):
        pt = SpacetimePoint(rng.uniform(-5, 5), tuple(rng.uniform(0, basis.geometry.L, basis.d)))
        for i in range(M):
            worst = max(worst, abs(kg_residual(target, i, pt)) / abs(mode_value(target, i, 1, NONE, pt)))
    checks.append(Check("onshell_residual", worst, tol))
    return checks
