"""Raw and central moments of the normal-ordered stress tensor, and the Kuo-Ford ratio.

A moment slot is a pair ``((mu, nu), point)``.  The raw moment of slots
s_1..s_m is <:T(s_1) ... T(s_m):>; the central moment of order n is

    mu_n = sum_m (-1)^(n-m) C(n, m) / n! * Sym[ raw_m(s_1..s_m) raw_1(s_{m+1}) ... raw_1(s_n) ]

where Sym sums over all n! reorderings of the slots.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

from .algebra import OperatorPolynomial, expectation, matrix_element_scale
from .modes import ModeBasis, SpacetimePoint, _as_point
from .states import CatState, CoherentAmplitude, epsilon
from .stress import build_T_polynomial

__all__ = [
    "DEFAULT_ORDER_CAP",
    "DeltaResult",
    "MomentResult",
    "central_moment",
    "kuo_ford_delta",
    "moment_result",
    "permutation_symmetrize",
    "raw_moment",
    "stress_product",
]

DEFAULT_ORDER_CAP = 4

Slot = tuple[tuple[int, int], SpacetimePoint]
State = CoherentAmplitude | CatState


def _slots(pairs: Sequence) -> list[Slot]:
    out = []
    for comp, pt in pairs:
        mu, nu = comp
        out.append(((int(mu), int(nu)), _as_point(pt)))
    return out


def _csum(values) -> complex:
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


@lru_cache(maxsize=256)
def stress_product(basis: ModeBasis, components: tuple[tuple[int, int], ...], lower: bool = False) -> OperatorPolynomial:
    """T(x0) T(x1) ... as one polynomial, slot j carrying label ``x{j}``."""
    out = OperatorPolynomial.constant(1.0, cap=max(8, 2 * len(components)))
    for j, (mu, nu) in enumerate(components):
        out = out * build_T_polynomial(basis, mu, nu, f"x{j}", lower)
    return out


def _state_basis(state: State) -> ModeBasis:
    return state.basis


def raw_moment(state: State, pairs: Sequence, cap: int = DEFAULT_ORDER_CAP, lower: bool = False) -> complex:
    slots = _slots(pairs)
    n = len(slots)
    if n > cap:
        raise ValueError(f"moment order {n} exceeds the order cap {cap}")
    if n == 0:
        return 1 + 0j
    poly = stress_product(_state_basis(state), tuple(c for c, _ in slots), lower)
    return expectation(poly, state, {f"x{j}": p for j, (_, p) in enumerate(slots)})


def permutation_symmetrize(func: Callable[..., complex], slots: Sequence) -> complex:
    """Sum of func over every reordering of the slots (n! terms, compensated sum)."""
    return _csum(func(*perm) for perm in itertools.permutations(slots))


def central_moment(state: State, pairs: Sequence, cap: int = DEFAULT_ORDER_CAP, lower: bool = False) -> complex:
    slots = _slots(pairs)
    n = len(slots)
    if n > cap:
        raise ValueError(f"moment order {n} exceeds the order cap {cap}")
    if n < 1:
        raise ValueError("central moments need n >= 1")
    if n == 1:
        return 0j

    cache: dict[tuple[int, ...], complex] = {}

    def raw(ids: tuple[int, ...]) -> complex:
        if ids not in cache:
            cache[ids] = raw_moment(state, [slots[i] for i in ids], cap, lower)
        return cache[ids]

    fact = math.factorial(n)
    terms = []
    for m in range(n + 1):
        weight = (-1) ** (n - m) * math.comb(n, m)

        def integrand(*ids, m=m):
            val = raw(tuple(ids[:m]))
            for i in ids[m:]:
                val *= raw((i,))
            return val

        sym = permutation_symmetrize(integrand, range(n))
        terms.append(weight * sym / fact)
    return _csum(terms)


@dataclass(frozen=True)
class MomentResult:
    raw: tuple[complex, ...]  # raw_1..raw_n on the leading slots, in the given order
    central: complex
    epsilon_bound: float | None


def moment_result(state: State, pairs: Sequence, cap: int = DEFAULT_ORDER_CAP, lower: bool = False) -> MomentResult:
    slots = _slots(pairs)
    raws = tuple(raw_moment(state, slots[:m], cap, lower) for m in range(1, len(slots) + 1))
    eps = epsilon(state.alpha) if isinstance(state, CatState) else None
    return MomentResult(raws, central_moment(state, slots, cap, lower), eps)


@dataclass(frozen=True)
class DeltaResult:
    value: float | None
    numerator: complex
    denominator: complex
    indeterminate: bool
    coincident: bool

    def __str__(self) -> str:
        return "indet" if self.indeterminate else f"{self.value:.17g}"


def _product_scale(state: State, poly: OperatorPolynomial, assignment) -> float:
    if isinstance(state, CatState):
        return sum(
            abs(ci) * abs(cj) * matrix_element_scale(poly, gi, gj, assignment)
            for ci, gi in state.branches()
            for cj, gj in state.branches()
        )
    return matrix_element_scale(poly, state, state, assignment)


def kuo_ford_delta(
    state: State,
    first,
    second,
    symmetrized: bool = False,
    lower: bool = False,
    rtol: float = 1e-12,
) -> DeltaResult:
    """|(<:T T':> - <:T:><:T':>) / <:T T':>|.

    ``symmetrized=True`` averages the two slot orders of the second moment.
    The result is indeterminate when <:T T':> vanishes relative to the
    cancellation-free magnitude of the product (vacuum-like states).
    """
    s1, s2 = _slots([first, second])
    m1 = raw_moment(state, [s1], lower=lower)
    m2 = raw_moment(state, [s2], lower=lower)
    den = raw_moment(state, [s1, s2], lower=lower)
    if symmetrized:
        den = 0.5 * (den + raw_moment(state, [s2, s1], lower=lower))
    num = den - m1 * m2
    poly = stress_product(state.basis, (s1[0], s2[0]), lower)
    scale = _product_scale(state, poly, {"x0": s1[1], "x1": s2[1]})
    coincident = s1[1] == s2[1]
    if abs(den) <= rtol * scale:
        return DeltaResult(None, num, den, True, coincident)
    return DeltaResult(abs(num / den), num, den, False, coincident)
