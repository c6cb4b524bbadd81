"""Plane-wave Klein-Gordon mode bases on a flat periodic box.

Positive-norm modes are

    phi_k^+(t, x) = exp(-i (omega_k t - k.x)) / sqrt(2 omega_k L^d)

with omega_k = sqrt(|k|^2 + m^2) and k = 2 pi n / L.  Negative-norm modes are
their complex conjugates.  Signature is mostly plus, so the d'Alembertian
``box = -d_t^2 + sum_j d_j^2`` satisfies ``box phi = m^2 phi`` on shell.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "BoxGeometry",
    "Derivative",
    "ModeBasis",
    "ModeSum",
    "SpacetimePoint",
    "BOX",
    "NONE",
    "build_box_modes",
    "decompose_classical",
    "kg_inner_product",
    "kg_residual",
    "mode_value",
    "mode_values",
    "quadrature_grid",
]


@dataclass(frozen=True)
class BoxGeometry:
    d: int = 1
    L: float = 2 * math.pi

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"spatial dimension must be an integer >= 1, got {self.d}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"box length must be positive, got {self.L}")

    @property
    def volume(self) -> float:
        return self.L**self.d

    def metric(self) -> np.ndarray:
        """Inverse (= covariant) flat metric diag(-1, +1, ..., +1)."""
        return np.diag([-1.0] + [1.0] * self.d)


@dataclass(frozen=True, order=True)
class Derivative:
    """Derivative applied to a field: spacetime axes (0 = t, j = x_j) or the d'Alembertian.

    Axes are stored sorted since partial derivatives commute.
    """

    axes: tuple[int, ...] = ()
    box: bool = False

    def __post_init__(self):
        axes = tuple(sorted(int(a) for a in self.axes))
        if any(a < 0 for a in axes):
            raise ValueError(f"negative derivative axis in {axes}")
        if self.box and axes:
            raise ValueError("box cannot be combined with partial derivatives")
        if len(axes) > 2:
            raise ValueError(f"derivative order {len(axes)} > 2 is not supported")
        object.__setattr__(self, "axes", axes)

    @property
    def order(self) -> int:
        return 2 if self.box else len(self.axes)

    def label(self) -> str:
        names = "txyzw"
        if self.box:
            return "□"
        return "".join(f"∂{names[a] if a < len(names) else a}" for a in self.axes)

    def to_json(self):
        return "box" if self.box else list(self.axes)

    @classmethod
    def from_json(cls, obj) -> "Derivative":
        if obj == "box":
            return BOX
        return cls(tuple(obj))


NONE = Derivative()
BOX = Derivative(box=True)


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: tuple[float, ...]

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        if not (math.isfinite(self.t) and all(math.isfinite(v) for v in x)):
            raise ValueError("spacetime point components must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)

    @classmethod
    def of(cls, t, *x) -> "SpacetimePoint":
        return cls(t, tuple(x))

    def to_json(self):
        return {"t": self.t, "x": list(self.x)}

    @classmethod
    def from_json(cls, obj) -> "SpacetimePoint":
        return cls(obj["t"], tuple(obj["x"]))


@dataclass(frozen=True, eq=False)
class ModeBasis:
    """Finite family of plane-wave modes; ``indices`` has shape (M, d)."""

    geometry: BoxGeometry
    mass: float
    zeta: float
    indices: np.ndarray
    k: np.ndarray = field(init=False, repr=False)
    omega: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1, self.geometry.d)
        if self.mass < 0:
            raise ValueError(f"mass must be non-negative, got {self.mass}")
        if len({tuple(r) for r in idx}) != len(idx):
            raise ValueError("duplicate wave-vectors in mode basis")
        k = 2 * np.pi * idx / self.geometry.L
        omega = np.sqrt(np.sum(k**2, axis=1) + self.mass**2)
        if np.any(omega <= 0):
            raise ValueError("massless zero mode excluded")
        idx.setflags(write=False)
        k.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "omega", omega)

    def __len__(self) -> int:
        return len(self.indices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModeBasis):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.mass == other.mass
            and self.zeta == other.zeta
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self) -> int:
        return hash((self.geometry, self.mass, self.zeta, self.indices.tobytes()))

    @property
    def d(self) -> int:
        return self.geometry.d

    @property
    def max_index(self) -> int:
        return int(np.max(np.abs(self.indices))) if len(self) else 0

    def with_omega(self, omega: np.ndarray) -> "_CorruptedBasis":
        """Copy with overridden frequencies; only used for negative controls."""
        return _CorruptedBasis(self, np.asarray(omega, dtype=float))

    def to_json(self) -> dict:
        return {
            "d": self.geometry.d,
            "L": self.geometry.L,
            "mass": self.mass,
            "zeta": self.zeta,
            "indices": self.indices.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModeBasis":
        geom = BoxGeometry(int(obj["d"]), float(obj["L"]))
        return cls(geom, float(obj["mass"]), float(obj["zeta"]), np.asarray(obj["indices"]))


class _CorruptedBasis:
    # quacks like ModeBasis for mode evaluation, but with off-shell frequencies
    def __init__(self, basis: ModeBasis, omega: np.ndarray):
        self.geometry = basis.geometry
        self.mass = basis.mass
        self.zeta = basis.zeta
        self.indices = basis.indices
        self.k = basis.k
        self.omega = omega

    def __len__(self):
        return len(self.indices)

    @property
    def d(self):
        return self.geometry.d


def build_box_modes(geometry: BoxGeometry, m: float, zeta: float, max_index: int) -> ModeBasis:
    """All wave-vectors with ``|n_i| <= max_index``, sorted lexicographically by n."""
    if max_index < 0:
        raise ValueError("max_index must be >= 0")
    if m == 0 and max_index < 1:
        raise ValueError("massless zero mode excluded")
    rng = range(-max_index, max_index + 1)
    idx = [n for n in itertools.product(rng, repeat=geometry.d) if m > 0 or any(n)]
    return ModeBasis(geometry, float(m), float(zeta), np.array(idx, dtype=np.int64))


def _as_point(p) -> SpacetimePoint:
    if isinstance(p, SpacetimePoint):
        return p
    t, *x = p
    return SpacetimePoint(t, tuple(x))


def _multipliers(basis, sign: int, deriv: Derivative) -> np.ndarray:
    # d_t -> -i s omega, d_j -> i s k_j, with s = +1 for phi^+ and -1 for phi^-
    M = len(basis)
    if deriv.box:
        # box = -d_t^2 + lap -> omega^2 - |k|^2, independent of the branch
        return (basis.omega**2 - np.sum(basis.k**2, axis=1)).astype(complex)
    out = np.ones(M, dtype=complex)
    for a in deriv.axes:
        if a == 0:
            out = out * (-1j * sign * basis.omega)
        elif a <= basis.d:
            out = out * (1j * sign * basis.k[:, a - 1])
        else:
            raise ValueError(f"derivative axis {a} out of range for d={basis.d}")
    return out


def mode_values(basis, sign: int, deriv: Derivative, p) -> np.ndarray:
    """Derivative of every mode of one branch at a point, shape (M,)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    p = _as_point(p)
    x = np.asarray(p.x, dtype=float)
    if x.shape != (basis.d,):
        raise ValueError(f"point has {x.size} spatial components, basis has d={basis.d}")
    phase = -basis.omega * p.t + basis.k @ x
    base = np.exp(1j * sign * phase) / np.sqrt(2 * basis.omega * basis.geometry.volume)
    return _multipliers(basis, sign, deriv) * base


def mode_value(basis, mode_id: int, sign: int, deriv: Derivative, p) -> complex:
    if not 0 <= mode_id < len(basis):
        raise IndexError(f"mode {mode_id} out of range for basis of size {len(basis)}")
    return complex(mode_values(basis, sign, deriv, p)[mode_id])


def kg_residual(basis, mode_id: int, p, sign: int = 1) -> complex:
    """(-box + m^2) applied to a mode, with box taken from the explicit second derivatives."""
    p = _as_point(p)
    val = -mode_value(basis, mode_id, sign, Derivative((0, 0)), p)
    for j in range(1, basis.d + 1):
        val += mode_value(basis, mode_id, sign, Derivative((j, j)), p)
    return -val + basis.mass**2 * mode_value(basis, mode_id, sign, NONE, p)


@dataclass(frozen=True, eq=False)
class ModeSum:
    """Classical solution sum_i (a_plus_i phi_i^+ + a_minus_i phi_i^-)."""

    basis: ModeBasis
    a_plus: np.ndarray
    a_minus: np.ndarray

    @classmethod
    def single(cls, basis: ModeBasis, mode_id: int, sign: int = 1, coeff: complex = 1.0) -> "ModeSum":
        ap = np.zeros(len(basis), dtype=complex)
        am = np.zeros(len(basis), dtype=complex)
        (ap if sign == 1 else am)[mode_id] = coeff
        return cls(basis, ap, am)

    def __add__(self, other: "ModeSum") -> "ModeSum":
        return ModeSum(self.basis, self.a_plus + other.a_plus, self.a_minus + other.a_minus)

    def __rmul__(self, c: complex) -> "ModeSum":
        return ModeSum(self.basis, c * self.a_plus, c * self.a_minus)

    def evaluate(self, deriv: Derivative, t: float, x: np.ndarray) -> np.ndarray:
        """Values at time t on spatial points x of shape (P, d)."""
        b = self.basis
        x = np.atleast_2d(np.asarray(x, dtype=float))
        phase = -b.omega[None, :] * t + x @ b.k.T
        norm = 1 / np.sqrt(2 * b.omega * b.geometry.volume)
        plus = np.exp(1j * phase) * (norm * _multipliers(b, 1, deriv) * self.a_plus)
        minus = np.exp(-1j * phase) * (norm * _multipliers(b, -1, deriv) * self.a_minus)
        return plus.sum(axis=1) + minus.sum(axis=1)


def quadrature_grid(geometry: BoxGeometry, points: int) -> tuple[np.ndarray, float]:
    """Uniform periodic grid (points**d, d) and the trapezoid weight per node."""
    axis = geometry.L * np.arange(points) / points
    mesh = np.meshgrid(*([axis] * geometry.d), indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=-1)
    return grid, (geometry.L / points) ** geometry.d


Solution = Callable[[Derivative, float, np.ndarray], np.ndarray]


def _evaluator(f) -> Solution:
    return f.evaluate if hasattr(f, "evaluate") else f


def kg_inner_product(
    f,
    g,
    basis: ModeBasis,
    t_slice: float = 0.0,
    quadrature_points: int | None = None,
) -> complex:
    """i * integral over the slice of (g* d_t f - (d_t g*) f).

    ``f`` and ``g`` are ModeSum objects or callables ``(deriv, t, x) -> values``.
    The periodic trapezoid rule is exact once ``quadrature_points`` exceeds
    twice the largest mode index.
    """
    nyquist = 2 * basis.max_index + 1
    if quadrature_points is None:
        quadrature_points = max(4 * basis.max_index + 1, 1)
    if quadrature_points < nyquist:
        raise ValueError(
            f"quadrature_points={quadrature_points} < {nyquist}: integrand would alias"
        )
    grid, w = quadrature_grid(basis.geometry, quadrature_points)
    fe, ge = _evaluator(f), _evaluator(g)
    dt = Derivative((0,))
    f0, f1 = fe(NONE, t_slice, grid), fe(dt, t_slice, grid)
    g0, g1 = np.conj(ge(NONE, t_slice, grid)), np.conj(ge(dt, t_slice, grid))
    return complex(1j * w * np.sum(g0 * f1 - g1 * f0))


def decompose_classical(
    samples0: Sequence[complex],
    samples1: Sequence[complex],
    t0: float,
    t1: float,
    basis: ModeBasis,
    quadrature_points: int | None = None,
    rtol: float = 1e-10,
) -> tuple[np.ndarray, np.ndarray]:
    """Recover (a^+, a^-) from field samples on two time slices.

    Samples live on ``quadrature_grid(basis.geometry, quadrature_points)``.  On each
    slice the discrete Fourier coefficient at wave-vector k mixes a^+_k e^{-i w t}
    and a^-_{-k} e^{+i w t}; two slices give a 2x2 system per pair.  The slice
    separation must avoid ``sin(w (t1 - t0)) = 0``.
    """
    if quadrature_points is None:
        quadrature_points = max(4 * basis.max_index + 1, 1)
    if quadrature_points < 2 * basis.max_index + 1:
        raise ValueError("quadrature_points too small for the basis (aliasing)")
    grid, w = quadrature_grid(basis.geometry, quadrature_points)
    s0 = np.asarray(samples0, dtype=complex).ravel()
    s1 = np.asarray(samples1, dtype=complex).ravel()
    if s0.shape != (len(grid),) or s1.shape != (len(grid),):
        raise ValueError(f"expected {len(grid)} samples per slice")

    vol = basis.geometry.volume
    # projection onto exp(i k.x): c(t) = a^+_k N e^{-iwt} + a^-_{-k} N e^{iwt}
    proj = np.exp(-1j * grid @ basis.k.T) * w / vol  # (P, M)
    c0, c1 = s0 @ proj, s1 @ proj
    lookup = {tuple(n): i for i, n in enumerate(basis.indices)}
    a_plus = np.zeros(len(basis), dtype=complex)
    a_minus = np.zeros(len(basis), dtype=complex)
    norm = 1 / np.sqrt(2 * basis.omega * vol)
    for i, n in enumerate(basis.indices):
        j = lookup.get(tuple(-n))
        om = basis.omega[i]
        A = np.array(
            [[np.exp(-1j * om * t0), np.exp(1j * om * t0)],
             [np.exp(-1j * om * t1), np.exp(1j * om * t1)]]
        ) * norm[i]
        if abs(np.linalg.det(A)) < 1e-8 * norm[i] ** 2:
            raise ValueError(f"slice separation resonant with mode {tuple(n)}")
        if j is None:
            raise ValueError(f"basis lacks the partner of wave-vector {tuple(n)}")
        a_plus[i], a_minus[j] = np.linalg.solve(A, [c0[i], c1[i]])

    recon = ModeSum(basis, a_plus, a_minus)
    scale = max(np.max(np.abs(s0)), np.max(np.abs(s1)), np.finfo(float).tiny)
    resid = max(
        np.max(np.abs(recon.evaluate(NONE, t0, grid) - s0)),
        np.max(np.abs(recon.evaluate(NONE, t1, grid) - s1)),
    )
    if resid > rtol * scale:
        warnings.warn(
            f"reconstruction residual {resid / scale:.3e} exceeds {rtol:g}; "
            "input is not band-limited to the basis",
            RuntimeWarning,
            stacklevel=2,
        )
    return a_plus, a_minus
