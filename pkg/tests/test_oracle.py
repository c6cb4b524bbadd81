import math

import numpy as np
import pytest
import scipy.sparse

from catgrav.algebra import coherent_matrix_element, field
from catgrav.modes import NONE, Derivative, SpacetimePoint
from catgrav.moments import central_moment, stress_product
from catgrav.oracle import (
    TruncatedFock,
    displacement_commutator_deviation,
    cat_state_vector,
    coherent_state_vector,
    displacement_matrix,
    dump_operator,
    field_operator,
    ladder_matrices,
    load_operator,
    normal_ordered_expectation,
    normal_ordered_matrix,
    oracle_expectation,
    superposition_vector,
    truncation_bound,
)
from catgrav.states import CoherentAmplitude, coherent_overlap, epsilon, phase_cat
from catgrav.verify import compare_with_oracle, random_polynomial

from helpers import random_amp, random_point

P = SpacetimePoint(0.3, (1.1,))


def test_ladder_single_mode_n2():
    a, ad = ladder_matrices(TruncatedFock(1, 2), 0)
    np.testing.assert_allclose(a, [[0, 1, 0], [0, 0, math.sqrt(2)], [0, 0, 0]])
    np.testing.assert_allclose(ad, a.T)


def test_truncated_ccr_corner():
    N = 6
    a, ad = ladder_matrices(TruncatedFock(1, N), 0)
    comm = a @ ad - ad @ a
    expected = np.eye(N + 1)
    expected[N, N] = -N
    np.testing.assert_allclose(comm, expected, atol=1e-14)


def test_multimode_ordering():
    space = TruncatedFock(2, 3)
    assert space.dim == 16
    # mode 0 runs fastest
    assert space.index((1, 0)) == 1 and space.index((0, 1)) == 4
    a0, _ = ladder_matrices(space, 0)
    a1, _ = ladder_matrices(space, 1)
    np.testing.assert_allclose(a0 @ a1, a1 @ a0)
    v = np.zeros(16)
    v[space.index((2, 3))] = 1
    assert np.vdot(v, (a1.conj().T @ a1 @ v)) == pytest.approx(3)
    with pytest.raises(IndexError):
        ladder_matrices(space, 2)


def test_displacement_zero_is_identity():
    np.testing.assert_allclose(displacement_matrix([0.0], TruncatedFock(1, 10)), np.eye(11), atol=1e-15)


def test_displacement_vacuum_column():
    alpha = 0.8 - 0.3j
    col = displacement_matrix([alpha], TruncatedFock(1, 40))[:, 0]
    n = np.arange(41)
    expected = np.exp(-abs(alpha) ** 2 / 2) * alpha**n / np.sqrt([float(math.factorial(k)) for k in n])
    np.testing.assert_allclose(col, expected, atol=1e-12)


def test_displacement_unitary_on_low_block():
    space = TruncatedFock(1, 40)
    D = displacement_matrix([1.2j], space)
    low = space.low_block(20)
    block = (D.conj().T @ D)[np.ix_(low, low)]
    np.testing.assert_allclose(block, np.eye(len(low)), atol=1e-10)


def test_cutoff_too_small():
    with pytest.raises(ValueError, match="cutoff too small"):
        coherent_state_vector([3.0], TruncatedFock(1, 5))


def test_sparse_path_matches_dense(basis3, rng):
    alpha = random_amp(rng, basis3, 0.8).alpha[:2]
    small = TruncatedFock(2, 15)
    big = TruncatedFock(2, 300)  # beyond the dense budget: Krylov action
    assert not big.dense
    v_small = coherent_state_vector(alpha, small, 1e-4)
    v_big = coherent_state_vector(alpha, big)
    occ = small.occupations()
    idx = [big.index(o) for o in occ]
    np.testing.assert_allclose(v_big[idx], v_small, atol=1e-6)


def test_overlap_from_vectors():
    space = TruncatedFock(1, 40)
    v1 = coherent_state_vector([1.0], space)
    v2 = coherent_state_vector([-1.0], space)
    assert abs(np.vdot(v1, v2) - math.exp(-2)) < 1e-8


def test_field_operator_hermitian(basis3):
    space = TruncatedFock(3, 3)
    phi = field_operator(space, basis3, NONE, P)
    if scipy.sparse.issparse(phi):
        phi = phi.toarray()
    np.testing.assert_allclose(phi, phi.conj().T, atol=1e-15)
    dphi = field_operator(space, basis3, Derivative((0,)), P)
    np.testing.assert_allclose(dphi, dphi.conj().T, atol=1e-15)


def test_normal_ordered_square_on_vacuum(basis1):
    space = TruncatedFock(1, 10)
    M = normal_ordered_matrix(field("x") ** 2, space, basis1, {"x": P})
    assert abs(space.vacuum() @ M @ space.vacuum()) < 1e-15
    phi = field_operator(space, basis1, NONE, P)
    # phi^2 on the vacuum differs from :phi^2: by the c-number |phi^+|^2
    assert (space.vacuum() @ (phi @ phi) @ space.vacuum()).real > 0


def test_matrix_and_vector_paths_agree(basis1, rng):
    space = TruncatedFock(1, 30)
    p = random_polynomial(rng, 1)
    a = random_amp(rng, basis1, 1.0)
    v = coherent_state_vector(a, space)
    asg = {"x": P, "y": random_point(rng, basis1)}
    M = normal_ordered_matrix(p, space, basis1, asg)
    assert oracle_expectation(v, M).value == pytest.approx(normal_ordered_expectation(p, v, v, space, basis1, asg), abs=1e-12)


def test_oracle_expectation_rejects_unnormalized():
    with pytest.raises(ValueError, match="normalized"):
        oracle_expectation(np.array([1.0, 1.0]), np.eye(2))
    with pytest.raises(ValueError):
        oracle_expectation(np.array([1.0, 0.0]), np.eye(3))


def test_dump_load_roundtrip(tmp_path, rng):
    m = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
    path = tmp_path / "op.bin"
    dump_operator(m, path)
    assert path.stat().st_size == 16 + 15 * 16
    np.testing.assert_array_equal(load_operator(path), m)


def test_displacement_commutator():
    for alpha in (0.3, 1.0 + 0.5j, 1.5j):
        assert displacement_commutator_deviation([alpha], TruncatedFock(1, 40)) < 1e-8


def test_substitution_rule_single_and_two_mode(basis1, basis2, rng):
    for basis, N in ((basis1, 40), (basis2, 12)):
        for _ in range(4):
            p = random_polynomial(rng, 1)
            a, b = random_amp(rng, basis, 1.2), random_amp(rng, basis, 1.2)
            asg = {"x": random_point(rng, basis), "y": random_point(rng, basis)}
            r = compare_with_oracle(p, a, b, asg, N)
            assert r.passed, (r.deviation, r.tolerance)


def test_truncation_bound_grows_with_degree():
    a, b = np.array([1.0]), np.array([-0.5])
    assert truncation_bound(a, b, 12, 4) > truncation_bound(a, b, 12, 0)
    assert truncation_bound(a, b, 40, 2) < 1e-20


def test_phase_cat_second_moment_oracle(basis1):
    alpha = CoherentAmplitude(basis1, [0.9])
    cat = phase_cat(0.4, alpha)
    space = TruncatedFock(1, 40)
    v = cat_state_vector(cat, space)
    assert np.linalg.norm(v) == pytest.approx(1, abs=1e-10)
    p0, p1 = SpacetimePoint(0, (0,)), SpacetimePoint(0.4, (1.3,))
    prod = stress_product(basis1, ((0, 0), (0, 0)))
    one = stress_product(basis1, ((0, 0),))
    m2 = normal_ordered_expectation(prod, v, v, space, basis1, {"x0": p0, "x1": p1})
    ma = normal_ordered_expectation(one, v, v, space, basis1, {"x0": p0})
    mb = normal_ordered_expectation(one, v, v, space, basis1, {"x0": p1})
    assert abs(m2 - ma * mb) <= 1e-7 * abs(m2)
    assert abs(central_moment(cat, [((0, 0), p0), ((0, 0), p1)])) <= 1e-12 * abs(m2)


def test_general_two_amplitude_superposition(basis1, rng):
    a, b = random_amp(rng, basis1, 1.0), random_amp(rng, basis1, 1.0)
    space = TruncatedFock(1, 40)
    ca, cb = 0.6, 0.2 - 0.7j
    v = superposition_vector([ca, cb], [a, b], space)
    n2 = abs(ca) ** 2 + abs(cb) ** 2 + 2 * (np.conj(ca) * cb * coherent_overlap(a, b)).real
    p = field("x") ** 2
    asg = {"x": P}
    closed = sum(
        np.conj(ci) * cj * coherent_matrix_element(p, gi, gj, asg)
        for ci, gi in ((ca, a), (cb, b))
        for cj, gj in ((ca, a), (cb, b))
    ) / n2
    assert normal_ordered_expectation(p, v, v, space, basis1, asg) == pytest.approx(closed, rel=1e-9)
    with pytest.raises(ValueError, match="vanishes"):
        superposition_vector([1, -1], [a, a], space)


def test_epsilon_matches_oracle(basis1):
    alpha = CoherentAmplitude(basis1, [1.0])
    space = TruncatedFock(1, 40)
    v1, v2 = coherent_state_vector(alpha, space), coherent_state_vector(-alpha, space)
    assert abs(np.vdot(v1, v2) - epsilon(alpha)) < 1e-8
