"""Stress-energy tensor of a scalar field on flat spacetime.

    T^{mu nu} = d^mu phi d^nu phi - 1/2 g^{mu nu} (d^rho phi d_rho phi + m^2 phi^2)
                + zeta (G^{mu nu} - g^{mu nu} box + d^mu d^nu) phi^2

with G^{mu nu} = 0.  Components are upper-index unless ``lower=True``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .algebra import (
    OperatorPolynomial,
    coherent_matrix_element,
    expectation,
    field,
    matrix_element_scale,
)
from .modes import BOX, ModeBasis, SpacetimePoint, _as_point
from .states import CatState, CoherentAmplitude, coherent_overlap

__all__ = [
    "EINSTEIN_TENSOR",
    "StressTensorSpec",
    "TBilinear",
    "T_bilinear",
    "T_direct",
    "build_T_polynomial",
    "conservation_residual",
    "source_term",
    "write_T_csv",
]

# flat spacetime; kept explicit as the curved-space extension point
EINSTEIN_TENSOR = 0.0


@dataclass(frozen=True)
class StressTensorSpec:
    basis: ModeBasis
    mu: int
    nu: int
    lower: bool = False

    def __post_init__(self):
        for i in (self.mu, self.nu):
            if not 0 <= i <= self.basis.d:
                raise ValueError(f"component index {i} outside 0..{self.basis.d}")


def _metric_diag(d: int) -> np.ndarray:
    return np.array([-1.0] + [1.0] * d)


def build_T_polynomial(
    basis: ModeBasis, mu: int, nu: int, label: str = "x", lower: bool = False
) -> OperatorPolynomial:
    spec = StressTensorSpec(basis, mu, nu, lower)
    g = [float(v) for v in _metric_diag(basis.d)]
    m2, zeta = basis.mass**2, basis.zeta
    phi = field(label)
    d = [field(label, (a,)) for a in range(basis.d + 1)]
    gmn = g[mu] if mu == nu else 0.0
    up = g[mu] * g[nu]  # raising both indices of d_mu d_nu

    grad2 = sum((g[r] * d[r] * d[r] for r in range(basis.d + 1)), OperatorPolynomial())
    T = up * d[mu] * d[nu] - 0.5 * gmn * (grad2 + m2 * phi * phi)
    if zeta != 0:
        box_phi2 = 2 * phi * field(label, BOX) + 2 * grad2
        dd_phi2 = up * (2 * phi * field(label, (mu, nu)) + 2 * d[mu] * d[nu])
        T = T + zeta * (EINSTEIN_TENSOR * phi * phi - gmn * box_phi2 + dd_phi2)
    if spec.lower:
        T = T * up  # g_{mu mu} g_{nu nu} = g^{mu mu} g^{nu nu} for a diagonal +-1 metric
    return T


def _profile_waves(alpha: CoherentAmplitude, beta: CoherentAmplitude):
    """Plane-wave content of beta(x) + alphabar(x): amplitudes and 4-wave-vectors q.

    Each term is c exp(i q.X) with X = (t, x) and q = (-s omega, s k).
    """
    b = beta.basis
    norm = 1 / np.sqrt(2 * b.omega * b.geometry.volume)
    q_plus = np.column_stack([-b.omega, b.k])
    coef = np.concatenate([beta.alpha * norm, np.conj(alpha.alpha) * norm])
    q = np.vstack([q_plus, -q_plus])
    return coef, q


def T_direct(
    alpha: CoherentAmplitude,
    beta: CoherentAmplitude,
    mu: int,
    nu: int,
    p,
    lower: bool = False,
) -> complex:
    """T^{mu nu}[alpha, beta] straight from the substituted classical profile.

    Derivatives of f and f^2 (f = beta + alphabar) are taken term by term on
    their plane-wave expansions, independently of the polynomial engine.
    """
    if alpha.basis != beta.basis:
        raise ValueError("coherent amplitudes live on different mode bases")
    basis = beta.basis
    StressTensorSpec(basis, mu, nu, lower)
    p = _as_point(p)
    g = _metric_diag(basis.d)
    X = np.array((p.t,) + p.x)
    coef, q = _profile_waves(alpha, beta)
    waves = coef * np.exp(1j * (q @ X))

    f = waves.sum()
    df = (1j * q * waves[:, None]).sum(axis=0)  # d_a f

    # f^2 as a double sum over wave pairs
    pair_w = np.outer(waves, waves)
    Q = q[:, None, :] + q[None, :, :]
    f2 = pair_w.sum()
    dd_f2 = -(Q[..., mu] * Q[..., nu] * pair_w).sum()  # d_mu d_nu (f^2)
    box_f2 = ((Q[..., 0] ** 2 - (Q[..., 1:] ** 2).sum(axis=-1)) * pair_w).sum()

    gmn = g[mu] if mu == nu else 0.0
    up = g[mu] * g[nu]
    grad2 = np.sum(g * df * df)
    val = (
        up * df[mu] * df[nu]
        - 0.5 * gmn * grad2
        + basis.zeta * (EINSTEIN_TENSOR * f2 + up * dd_f2)
        - 0.5 * gmn * basis.mass**2 * f2
        - gmn * basis.zeta * box_f2
    )
    if lower:
        val *= up
    return complex(val)


@dataclass(frozen=True)
class TBilinear:
    value: complex
    mu: int
    nu: int
    point: SpacetimePoint
    engine_value: complex | None
    division_skipped: bool = False


def T_bilinear(
    alpha: CoherentAmplitude,
    beta: CoherentAmplitude,
    mu: int,
    nu: int,
    p,
    lower: bool = False,
    rtol: float = 1e-12,
) -> TBilinear:
    """T[alpha, beta] = <alpha|:T:|beta> / <alpha|beta>, cross-checked across both code paths."""
    p = _as_point(p)
    direct = T_direct(alpha, beta, mu, nu, p, lower)
    ov = coherent_overlap(alpha, beta)
    if abs(ov) < 1e-300:
        return TBilinear(direct, mu, nu, p, None, division_skipped=True)
    poly = build_T_polynomial(alpha.basis, mu, nu, "x", lower)
    engine = coherent_matrix_element(poly, alpha, beta, {"x": p}) / ov
    scale = matrix_element_scale(poly, alpha, beta, {"x": p}) / abs(ov)
    if abs(engine - direct) > rtol * max(scale, 1e-300):
        raise ArithmeticError(
            f"stress tensor paths disagree: direct={direct!r}, engine={engine!r}"
        )
    return TBilinear(direct, mu, nu, p, engine)


def source_term(
    state: CoherentAmplitude | CatState, mu: int, nu: int, p, imag_tol: float = 1e-10
) -> float:
    """8 pi <:T_{mu nu}(p):> (G_N = 1, lower indices)."""
    p = _as_point(p)
    poly = build_T_polynomial(state.basis, mu, nu, "x", lower=True)
    val = expectation(poly, state, {"x": p})
    if abs(val.imag) > imag_tol * max(1.0, abs(val.real)):
        raise ArithmeticError(f"stress tensor expectation has imaginary part {val.imag:.3e}")
    return 8 * math.pi * val.real


def conservation_residual(
    state: CoherentAmplitude | CatState, nu: int, p, h: float = 1e-4
) -> complex:
    """d_mu <:T^{mu nu}(p):> by central differences (a diagnostic, not a check)."""
    p = _as_point(p)
    X = np.array((p.t,) + p.x)
    total = 0j
    for mu in range(state.basis.d + 1):
        poly = build_T_polynomial(state.basis, mu, nu, "x")
        step = np.zeros_like(X)
        step[mu] = h
        hi, lo = X + step, X - step
        f_hi = expectation(poly, state, {"x": SpacetimePoint(hi[0], tuple(hi[1:]))})
        f_lo = expectation(poly, state, {"x": SpacetimePoint(lo[0], tuple(lo[1:]))})
        total += (f_hi - f_lo) / (2 * h)
    return complex(total)


def write_T_csv(
    path,
    state: CoherentAmplitude | CatState,
    points: Iterable,
    components: Iterable[tuple[int, int]],
    lower: bool = False,
) -> None:
    """Rows (t, x_1..x_d, mu, nu, Re, Im) of the normal-ordered expectation."""
    d = state.basis.d
    comps = list(components)
    polys = {c: build_T_polynomial(state.basis, c[0], c[1], "x", lower) for c in comps}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{j + 1}" for j in range(d)] + ["mu", "nu", "re", "im"])
        for pt in points:
            pt = _as_point(pt)
            for c in comps:
                v = expectation(polys[c], state, {"x": pt})
                w.writerow(
                    [f"{pt.t:.17g}"] + [f"{x:.17g}" for x in pt.x]
                    + [c[0], c[1], f"{v.real:.17g}", f"{v.imag:.17g}"]
                )
