"""Brute-force truncated Fock-space representation of the field theory.

Occupation tuples (n_0, ..., n_{M-1}) are ordered colexicographically: the
flat index is sum_i n_i (N+1)^i, so mode 0 varies fastest.
"""

from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.stats import poisson

from .algebra import OperatorPolynomial
from .modes import NONE, Derivative, ModeBasis, SpacetimePoint, mode_values
from .states import CatState, CoherentAmplitude, coherent_overlap

__all__ = [
    "OracleResult",
    "TruncatedFock",
    "displacement_commutator_deviation",
    "cat_state_vector",
    "coherent_state_vector",
    "displacement_matrix",
    "dump_operator",
    "field_operator",
    "ladder_matrices",
    "load_operator",
    "normal_ordered_expectation",
    "normal_ordered_matrix",
    "oracle_expectation",
    "poisson_tail",
    "superposition_vector",
    "truncation_bound",
]

DENSE_BUDGET = 65536  # complex entries per dense operator


@dataclass(frozen=True)
class TruncatedFock:
    modes: int
    cutoff: int

    def __post_init__(self):
        if self.modes < 1 or self.cutoff < 1:
            raise ValueError("need at least one mode and cutoff >= 1")

    @property
    def local_dim(self) -> int:
        return self.cutoff + 1

    @property
    def dim(self) -> int:
        return self.local_dim**self.modes

    @property
    def dense(self) -> bool:
        return self.dim**2 <= DENSE_BUDGET

    def occupations(self) -> np.ndarray:
        """Occupation tuple of every basis index, shape (dim, modes)."""
        occ = itertools.product(range(self.local_dim), repeat=self.modes)
        # product() varies the last slot fastest; reverse to make mode 0 fastest
        return np.array([t[::-1] for t in occ], dtype=np.int64)

    def index(self, occupation) -> int:
        return int(sum(n * self.local_dim**i for i, n in enumerate(occupation)))

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def low_block(self, max_occupation: int) -> np.ndarray:
        """Indices with every occupation <= max_occupation."""
        return np.flatnonzero(np.all(self.occupations() <= max_occupation, axis=1))


@dataclass(frozen=True)
class OracleResult:
    value: complex
    truncation_bound: float
    cutoff: int


def poisson_tail(alpha: np.ndarray | CoherentAmplitude, cutoff: int) -> float:
    """sum over modes of P(n > N) for Poisson(|alpha_i|^2): weight lost to truncation."""
    a = alpha.alpha if isinstance(alpha, CoherentAmplitude) else np.asarray(alpha)
    lam = np.abs(a) ** 2
    return float(np.sum(poisson.sf(cutoff, lam)))


def truncation_bound(alpha, beta, cutoff: int, degree: int = 0) -> float:
    """Relative error bound for <alpha| :p: |beta> with p of the given degree.

    Truncated a^q is exact only on occupations <= N - q, so the lost weight is
    the Poisson tail past N - degree on each side, relative to |<alpha|beta>|.
    """
    eff = max(cutoff - degree, 0)
    tails = poisson_tail(alpha, eff) + poisson_tail(beta, eff)
    if isinstance(alpha, CoherentAmplitude) and isinstance(beta, CoherentAmplitude):
        ov = abs(coherent_overlap(alpha, beta))
    else:
        a, b = np.asarray(alpha), np.asarray(beta)
        ov = float(np.exp(-np.sum(np.abs(a - b) ** 2) / 2))
    return float(tails / max(ov, 1e-300))


def _single_annihilator(n: int) -> scipy.sparse.csr_matrix:
    return scipy.sparse.diags(np.sqrt(np.arange(1, n + 1, dtype=float)), 1, format="csr", dtype=complex)


def ladder_matrices(space: TruncatedFock, mode: int, sparse: bool | None = None):
    """(a_i, a_i^dagger) on the full truncated space."""
    if not 0 <= mode < space.modes:
        raise IndexError(f"mode {mode} out of range for {space.modes} modes")
    a1 = _single_annihilator(space.cutoff)
    left = scipy.sparse.identity(space.local_dim ** (space.modes - 1 - mode), dtype=complex, format="csr")
    right = scipy.sparse.identity(space.local_dim**mode, dtype=complex, format="csr")
    a = scipy.sparse.kron(scipy.sparse.kron(left, a1), right, format="csr")
    if sparse is None:
        sparse = not space.dense
    if not sparse:
        a = a.toarray()
    return a, a.conj().T


def _generator(alpha: np.ndarray, space: TruncatedFock):
    # A^dagger(alpha) - A(alpha) = sum_i alpha_i a_i^dagger - alpha_i^* a_i
    G = scipy.sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    for i, ai in enumerate(alpha):
        a, _ = ladder_matrices(space, i, sparse=True)
        G = G + ai * a.conj().T - np.conj(ai) * a
    return G


def _check_tail(alpha: np.ndarray, space: TruncatedFock, tail_tol: float) -> float:
    if len(alpha) != space.modes:
        raise ValueError(f"amplitude has {len(alpha)} modes, Fock space has {space.modes}")
    tail = poisson_tail(alpha, space.cutoff)
    if tail > tail_tol:
        raise ValueError(
            f"cutoff too small: Poisson tail {tail:.2e} > {tail_tol:.0e} at N={space.cutoff}; "
            "increase the cutoff"
        )
    return tail


def displacement_matrix(alpha, space: TruncatedFock, tail_tol: float = 1e-8) -> np.ndarray:
    """Dense exp(A^dagger(alpha) - A(alpha)) by scaling and squaring."""
    a = np.asarray(alpha.alpha if isinstance(alpha, CoherentAmplitude) else alpha, dtype=complex)
    _check_tail(a, space, tail_tol)
    if not space.dense:
        raise MemoryError(
            f"dense displacement of dimension {space.dim} exceeds the budget; "
            "use coherent_state_vector"
        )
    return scipy.linalg.expm(_generator(a, space).toarray())


def coherent_state_vector(alpha, space: TruncatedFock, tail_tol: float = 1e-8) -> np.ndarray:
    """D(alpha)|0>; Krylov action when the dense matrix would exceed the budget."""
    a = np.asarray(alpha.alpha if isinstance(alpha, CoherentAmplitude) else alpha, dtype=complex)
    _check_tail(a, space, tail_tol)
    if space.dense:
        return scipy.linalg.expm(_generator(a, space).toarray())[:, 0]
    return scipy.sparse.linalg.expm_multiply(_generator(a, space).tocsc(), space.vacuum())


def superposition_vector(
    coeffs, amplitudes, space: TruncatedFock, tail_tol: float = 1e-8
) -> np.ndarray:
    """Normalized sum_j c_j |alpha_j>, e.g. the general cat a|alpha> + b|beta>."""
    v = sum(c * coherent_state_vector(a, space, tail_tol) for c, a in zip(coeffs, amplitudes))
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValueError("superposition vanishes")
    return v / n


def cat_state_vector(cat: CatState, space: TruncatedFock, tail_tol: float = 1e-8) -> np.ndarray:
    """Cat vector with the closed-form coefficients (already normalized analytically)."""
    return sum(c * coherent_state_vector(g, space, tail_tol) for c, g in cat.branches())


def field_operator(
    space: TruncatedFock, basis: ModeBasis, deriv: Derivative, p, part: str = "full"
):
    """sum_i D phi_i^+(p) a_i + D phi_i^-(p) a_i^dagger.

    ``part="annihilation"`` or ``"creation"`` keeps one half only.
    """
    if len(basis) != space.modes:
        raise ValueError(f"basis has {len(basis)} modes, Fock space has {space.modes}")
    plus = mode_values(basis, 1, deriv, p)
    minus = mode_values(basis, -1, deriv, p)
    op = None
    for i in range(space.modes):
        a, ad = ladder_matrices(space, i)
        term = 0
        if part in ("full", "annihilation"):
            term = term + plus[i] * a
        if part in ("full", "creation"):
            term = term + minus[i] * ad
        op = term if op is None else op + term
    return op


def _factor_parts(p: OperatorPolynomial, space, basis, assignment):
    parts = {}
    for f in p.compiled[0]:
        pt = assignment[f.label]
        parts[f] = (
            field_operator(space, basis, f.deriv, pt, "creation"),
            field_operator(space, basis, f.deriv, pt, "annihilation"),
        )
    return parts


def _check_poly(p: OperatorPolynomial, assignment):
    missing = p.labels - set(assignment)
    if missing:
        raise KeyError(f"unassigned point labels: {sorted(missing)}")
    if p.degree > p.cap:
        raise ValueError(f"degree {p.degree} exceeds cap {p.cap}")


def normal_ordered_matrix(
    p: OperatorPolynomial,
    space: TruncatedFock,
    basis: ModeBasis,
    assignment: Mapping[str, SpacetimePoint],
) -> np.ndarray:
    """Explicit matrix of :p: with all creation parts left of all annihilation parts."""
    _check_poly(p, assignment)
    if not space.dense:
        raise MemoryError("normal_ordered_matrix needs a dense-budget space")
    parts = _factor_parts(p, space, basis, assignment)
    eye = np.eye(space.dim, dtype=complex)
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for mono, c in p.terms.items():
        k = len(mono)
        for choice in itertools.product((0, 1), repeat=k):
            left, right = eye, eye
            for f, which in zip(mono, choice):
                if which == 0:
                    left = left @ parts[f][0]
                else:
                    right = right @ parts[f][1]
            out += c * (left @ right)
    return out


def normal_ordered_expectation(
    p: OperatorPolynomial,
    bra: np.ndarray,
    ket: np.ndarray,
    space: TruncatedFock,
    basis: ModeBasis,
    assignment: Mapping[str, SpacetimePoint],
) -> complex:
    """<bra| :p: |ket> without forming the operator matrix.

    Uses <bra| C_1..C_j A_1..A_l |ket> = (C_j^dag..C_1^dag bra)^dag (A_1..A_l ket).
    """
    _check_poly(p, assignment)
    parts = _factor_parts(p, space, basis, assignment)
    total = 0j
    for mono, c in p.terms.items():
        for choice in itertools.product((0, 1), repeat=len(mono)):
            lv, rv = bra, ket
            for f, which in zip(mono, choice):
                if which == 0:
                    lv = parts[f][0].conj().T @ lv
                else:
                    rv = parts[f][1] @ rv
            total += c * np.vdot(lv, rv)
    return complex(total)


def oracle_expectation(state_vector: np.ndarray, operator, truncation_bound: float = 0.0, cutoff: int = -1) -> OracleResult:
    v = np.asarray(state_vector)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1) > 1e-10:
        raise ValueError(f"state vector not normalized (norm {nrm:.12f})")
    if operator.shape != (v.size, v.size):
        raise ValueError(f"operator shape {operator.shape} does not match state dimension {v.size}")
    return OracleResult(complex(np.vdot(v, operator @ v)), truncation_bound, cutoff)


def displacement_commutator_deviation(alpha, space: TruncatedFock, mode: int = 0) -> float:
    """max | ([a_i, D(alpha)] - alpha_i D(alpha))_{jk} | over occupations <= N/2."""
    a_vec = np.asarray(alpha.alpha if isinstance(alpha, CoherentAmplitude) else alpha, dtype=complex)
    D = displacement_matrix(a_vec, space)
    a, _ = ladder_matrices(space, mode, sparse=False)
    comm = a @ D - D @ a - a_vec[mode] * D
    low = space.low_block(space.cutoff // 2)
    return float(np.max(np.abs(comm[np.ix_(low, low)])))


def dump_operator(matrix, path) -> None:
    """Binary dump: two little-endian uint64 (rows, cols), then row-major complex128 pairs."""
    m = np.ascontiguousarray(np.asarray(matrix.toarray() if scipy.sparse.issparse(matrix) else matrix, dtype="<c16"))
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", *m.shape))
        fh.write(m.tobytes(order="C"))


def load_operator(path) -> np.ndarray:
    with open(path, "rb") as fh:
        rows, cols = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<c16")
    return data.reshape(rows, cols).astype(complex)
