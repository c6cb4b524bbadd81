import itertools
import math

import numpy as np
import pytest

from catgrav.modes import SpacetimePoint
from catgrav.moments import (
    central_moment,
    kuo_ford_delta,
    moment_result,
    permutation_symmetrize,
    raw_moment,
    stress_product,
)
from catgrav.oracle import TruncatedFock, coherent_state_vector, normal_ordered_expectation
from catgrav.states import CoherentAmplitude, cat_normalize, phase_cat
from catgrav.stress import T_direct

from helpers import random_amp, sub_basis

P0 = SpacetimePoint(0.0, (0.0,))
P1 = SpacetimePoint(0.4, (1.3,))
P2 = SpacetimePoint(-0.7, (2.9,))
P3 = SpacetimePoint(1.1, (5.0,))


def test_raw_moment_order_zero(basis3, rng):
    assert raw_moment(random_amp(rng, basis3), []) == 1


def test_order_cap(basis3, rng):
    a = random_amp(rng, basis3)
    pairs = [((0, 0), P0)] * 5
    with pytest.raises(ValueError, match="cap"):
        raw_moment(a, pairs)
    with pytest.raises(ValueError, match="cap"):
        central_moment(a, pairs)
    with pytest.raises(ValueError):
        central_moment(a, [])


def test_permutation_six_term_example():
    O = {(a, b): 10 * a + b for a in range(3) for b in range(3)}
    P = {0: 0.5, 1: -1.25, 2: 3.0}
    got = permutation_symmetrize(lambda a, b, c: O[a, b] * P[c], [0, 1, 2])
    x, xp, xpp = 0, 1, 2
    expected = (
        O[x, xp] * P[xpp] + O[xp, x] * P[xpp] + O[xpp, xp] * P[x]
        + O[xp, xpp] * P[x] + O[x, xpp] * P[xp] + O[xpp, x] * P[xp]
    )
    assert got == pytest.approx(expected)


def test_permutation_identical_or_symmetric():
    assert permutation_symmetrize(lambda *s: 2.5, [7, 7, 7, 7]) == 24 * 2.5
    assert permutation_symmetrize(lambda a, b, c: a * b * c, [1, 2, 3]) == 36


def test_coherent_second_moment_factorizes(basis3_zeta, rng):
    a = random_amp(rng, basis3_zeta, 1.3)
    s1, s2 = ((0, 0), P0), ((0, 1), P1)
    m2 = raw_moment(a, [s1, s2])
    assert m2 == pytest.approx(raw_moment(a, [s1]) * raw_moment(a, [s2]), rel=1e-13)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_coherent_central_moments_vanish(n, basis3, rng):
    a = random_amp(rng, basis3, 1.2)
    pairs = list(zip([(0, 0), (0, 1), (1, 1), (0, 0)], [P0, P1, P2, P3]))[:n]
    mu = central_moment(a, pairs)
    scale = math.prod(abs(raw_moment(a, [p])) for p in pairs)
    assert abs(mu) <= 1e-12 * max(scale, 1e-300)


@pytest.mark.parametrize("theta", [0.1, 0.4, math.pi / 4, 1.2])
def test_phase_cat_central_moments_vanish(theta, basis3, rng):
    cat = phase_cat(theta, random_amp(rng, basis3, 1.0))
    for n in (2, 3):
        pairs = [((0, 0), p) for p in (P0, P1, P2)[:n]]
        scale = math.prod(abs(raw_moment(cat, [p])) for p in pairs)
        assert abs(central_moment(cat, pairs)) <= 1e-12 * scale


def test_second_central_moment_is_symmetrized_covariance(basis3, rng):
    cat = cat_normalize(0.8, 0.3 - 0.5j, random_amp(rng, basis3, 0.6))
    s1, s2 = ((0, 0), P0), ((0, 1), P1)
    cov = 0.5 * (raw_moment(cat, [s1, s2]) + raw_moment(cat, [s2, s1])) - raw_moment(cat, [s1]) * raw_moment(cat, [s2])
    assert abs(central_moment(cat, [s1, s2]) - cov) <= 1e-13 * abs(raw_moment(cat, [s1, s2]))


def test_permutation_invariance(basis3, rng):
    cat = cat_normalize(1, 0.7j, random_amp(rng, basis3, 0.7))
    pairs = [((0, 0), P0), ((0, 1), P1), ((1, 1), P2)]
    ref = central_moment(cat, pairs)
    for perm in itertools.permutations(pairs):
        assert abs(central_moment(cat, list(perm)) - ref) <= 1e-13 * max(abs(ref), 1e-300) + 1e-15


def test_generic_cat_second_moment_closed_form(basis3, rng):
    # mu_2 = c eps (1 - c eps) (M - X)(M' - X'), c = 2 Re(a* b), M = T[a,a], X = T[a,-a]
    for a_raw, b_raw in [(1, 1), (1, 0.3), (0.5, -0.2 + 0.6j)]:
        alpha = random_amp(rng, basis3, 0.9)
        cat = cat_normalize(a_raw, b_raw, alpha)
        c = 2 * (np.conj(cat.a) * cat.b).real
        eps = cat.eps
        M = [T_direct(alpha, alpha, 0, 0, p) for p in (P0, P1)]
        X = [T_direct(alpha, -alpha, 0, 0, p) for p in (P0, P1)]
        expected = c * eps * (1 - c * eps) * (M[0] - X[0]) * (M[1] - X[1])
        got = central_moment(cat, [((0, 0), P0), ((0, 0), P1)])
        assert got == pytest.approx(expected, rel=1e-10)


def test_generic_cat_eps_scaling_bounded(basis3):
    u = np.array([1, 0.5j, -0.3]) / np.linalg.norm([1, 0.5j, -0.3])
    ratios = []
    for s in (1, 2, 3, 4, 5):
        cat = cat_normalize(1, 1, CoherentAmplitude(basis3, math.sqrt(s) * u))
        mu2 = central_moment(cat, [((0, 0), P0), ((0, 0), P1)])
        # the fluctuation carries the classical scale |alpha|^4 of two stress tensors
        ratios.append(abs(mu2) / (cat.eps * s**2))
    assert max(ratios) / min(ratios) < 3


def test_moment_result(basis3, rng):
    cat = phase_cat(0.3, random_amp(rng, basis3))
    r = moment_result(cat, [((0, 0), P0), ((0, 0), P1)])
    assert len(r.raw) == 2 and r.epsilon_bound == pytest.approx(cat.eps)
    assert moment_result(cat.alpha, [((0, 0), P0)]).epsilon_bound is None
    assert moment_result(cat.alpha, [((0, 0), P0)]).central == 0


def test_delta_coherent_is_zero(basis3_zeta, rng):
    for _ in range(5):
        a = random_amp(rng, basis3_zeta, 1.4)
        r = kuo_ford_delta(a, ((0, 0), P0), ((1, 1), P1))
        assert not r.indeterminate and r.value <= 1e-12


def test_delta_phase_cat_is_zero(basis3, rng):
    cat = phase_cat(0.6, random_amp(rng, basis3, 1.0))
    assert kuo_ford_delta(cat, ((0, 0), P0), ((0, 1), P1)).value <= 1e-12


def test_delta_vacuum_indeterminate(basis3):
    r = kuo_ford_delta(CoherentAmplitude.zero(basis3), ((0, 0), P0), ((0, 0), P1))
    assert r.indeterminate and r.value is None and str(r) == "indet"


def test_delta_coincident_flag(basis3, rng):
    a = random_amp(rng, basis3)
    assert kuo_ford_delta(a, ((0, 0), P0), ((1, 1), P0)).coincident
    assert not kuo_ford_delta(a, ((0, 0), P0), ((1, 1), P1)).coincident


def test_delta_symmetrized_flag(basis3, rng):
    cat = cat_normalize(1, 0.2 + 0.4j, random_amp(rng, basis3, 0.8))
    plain = kuo_ford_delta(cat, ((0, 0), P0), ((0, 1), P1))
    sym = kuo_ford_delta(cat, ((0, 0), P0), ((0, 1), P1), symmetrized=True)
    # the substitution rule commutes the factors, so both readings coincide here
    assert sym.value == pytest.approx(plain.value, rel=1e-12)


def test_delta_generic_cat_small_and_matches_oracle(basis1):
    alpha = CoherentAmplitude(basis1, [math.sqrt(2)])
    cat = cat_normalize(1, 1, alpha)
    t0, t1 = SpacetimePoint(0.0, (0.0,)), SpacetimePoint(1.5, (0.0,))  # timelike separated
    r = kuo_ford_delta(cat, ((0, 0), t0), ((0, 0), t1))
    M = [T_direct(alpha, alpha, 0, 0, p) for p in (t0, t1)]
    X = [T_direct(alpha, -alpha, 0, 0, p) for p in (t0, t1)]
    c, eps = 2 * (np.conj(cat.a) * cat.b).real, cat.eps
    closed = abs(c * eps * (1 - c * eps) * (M[0] - X[0]) * (M[1] - X[1]) / r.denominator)
    assert r.value == pytest.approx(closed, rel=1e-10)
    assert r.value <= eps * abs(M[0] - X[0]) * abs(M[1] - X[1]) / abs(r.denominator) * 2

    space = TruncatedFock(1, 40)
    v = cat.a * coherent_state_vector(alpha, space) + cat.b * coherent_state_vector(-alpha, space)
    poly = stress_product(basis1, ((0, 0), (0, 0)))
    t1_only = stress_product(basis1, ((0, 0),))
    m2 = normal_ordered_expectation(poly, v, v, space, basis1, {"x0": t0, "x1": t1})
    ma = normal_ordered_expectation(t1_only, v, v, space, basis1, {"x0": t0})
    mb = normal_ordered_expectation(t1_only, v, v, space, basis1, {"x0": t1})
    assert abs((m2 - ma * mb) / m2) == pytest.approx(r.value, rel=1e-6)


def _oracle_raw(state, basis, pairs, space, vec):
    poly = stress_product(basis, tuple(c for c, _ in pairs))
    return normal_ordered_expectation(poly, vec, vec, space, basis, {f"x{j}": p for j, (_, p) in enumerate(pairs)})


@pytest.mark.parametrize("modes", [1, 2])
def test_moments_match_oracle(modes, basis3, rng):
    basis = sub_basis(basis3, [2] if modes == 1 else [1, 2])
    space = TruncatedFock(modes, 40)
    alpha = random_amp(rng, basis, 0.9)
    cat = cat_normalize(1, 0.5 - 0.5j, alpha)
    vec = cat.a * coherent_state_vector(alpha, space) + cat.b * coherent_state_vector(-alpha, space)
    pairs = [((0, 0), P0), ((0, 1), P1), ((1, 1), P2)]
    for n in (1, 2, 3):
        closed = raw_moment(cat, pairs[:n])
        oracle = _oracle_raw(cat, basis, pairs[:n], space, vec)
        assert abs(closed - oracle) <= 1e-7 * abs(closed)
