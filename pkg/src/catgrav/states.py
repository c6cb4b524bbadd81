"""Coherent amplitudes, coherent-state overlaps and +-alpha cat states."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .modes import Derivative, ModeBasis, mode_values

__all__ = [
    "CatState",
    "CoherentAmplitude",
    "cat_normalize",
    "cat_norm",
    "classical_profile",
    "coherent_overlap",
    "epsilon",
    "phase_cat",
    "state_from_json",
    "state_to_json",
]


@dataclass(frozen=True, eq=False)
class CoherentAmplitude:
    basis: ModeBasis
    alpha: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=complex).ravel()
        if a.shape != (len(self.basis),):
            raise ValueError(f"amplitude has {a.size} entries, basis has {len(self.basis)} modes")
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitude must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def norm2(self) -> float:
        """|alpha|^2 = sum_i |alpha_i|^2."""
        return float(np.sum(np.abs(self.alpha) ** 2))

    def __neg__(self) -> "CoherentAmplitude":
        return CoherentAmplitude(self.basis, -self.alpha)

    def __add__(self, other: "CoherentAmplitude") -> "CoherentAmplitude":
        _check_same_basis(self, other)
        return CoherentAmplitude(self.basis, self.alpha + other.alpha)

    def __sub__(self, other: "CoherentAmplitude") -> "CoherentAmplitude":
        return self + (-other)

    def __mul__(self, c: complex) -> "CoherentAmplitude":
        return CoherentAmplitude(self.basis, c * self.alpha)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoherentAmplitude):
            return NotImplemented
        return self.basis == other.basis and np.array_equal(self.alpha, other.alpha)

    def __hash__(self) -> int:
        return hash((self.basis, self.alpha.tobytes()))

    @classmethod
    def zero(cls, basis: ModeBasis) -> "CoherentAmplitude":
        return cls(basis, np.zeros(len(basis), dtype=complex))


def _check_same_basis(a: CoherentAmplitude, b: CoherentAmplitude) -> None:
    if a.basis != b.basis:
        raise ValueError("coherent amplitudes live on different mode bases")


def coherent_overlap(alpha: CoherentAmplitude, beta: CoherentAmplitude) -> complex:
    """<alpha|beta> = exp(i Im sum_i alpha_i^* beta_i) exp(-|beta - alpha|^2 / 2)."""
    _check_same_basis(alpha, beta)
    phase = float(np.imag(np.vdot(alpha.alpha, beta.alpha)))
    dist2 = float(np.sum(np.abs(beta.alpha - alpha.alpha) ** 2))
    return cmath.exp(1j * phase) * math.exp(-dist2 / 2)


def epsilon(alpha: CoherentAmplitude) -> float:
    """Overlap <alpha|-alpha> = exp(-2 |alpha|^2), real by construction."""
    return math.exp(-2 * alpha.norm2)


@dataclass(frozen=True, eq=False)
class CatState:
    """Normalized ``a|alpha> + b|-alpha>``.

    ``phase_form`` marks ``a = cos(theta)``, ``b = i sin(theta)``, the family
    whose stress-tensor central moments vanish identically.
    """

    alpha: CoherentAmplitude
    a: complex
    b: complex
    phase_form: bool = False
    theta: float | None = None

    @property
    def eps(self) -> float:
        return epsilon(self.alpha)

    @property
    def basis(self) -> ModeBasis:
        return self.alpha.basis

    def branches(self) -> list[tuple[complex, CoherentAmplitude]]:
        return [(self.a, self.alpha), (self.b, -self.alpha)]


def cat_norm(a: complex, b: complex, alpha: CoherentAmplitude) -> float:
    """<cat|cat> from the four-term expansion with the real overlap eps."""
    eps = epsilon(alpha)
    cross = np.conj(a) * b * eps + a * np.conj(b) * eps
    return float(abs(a) ** 2 + abs(b) ** 2 + cross.real)


def cat_normalize(a_raw: complex, b_raw: complex, alpha: CoherentAmplitude) -> CatState:
    if a_raw == 0 and b_raw == 0:
        raise ValueError("cat coefficients are both zero")
    n2 = cat_norm(a_raw, b_raw, alpha)
    scale = abs(a_raw) ** 2 + abs(b_raw) ** 2
    if n2 <= 1e-14 * scale:
        raise ValueError("cat state vanishes")
    s = 1 / math.sqrt(n2)
    return CatState(alpha, complex(a_raw) * s, complex(b_raw) * s)


def phase_cat(theta: float, alpha: CoherentAmplitude) -> CatState:
    """cos(theta)|alpha> + i sin(theta)|-alpha>; normalized for every alpha."""
    return CatState(alpha, complex(math.cos(theta)), 1j * math.sin(theta), True, float(theta))


def classical_profile(alpha: CoherentAmplitude, branch: str, deriv: Derivative, p) -> complex:
    """Classical field profile of a coherent amplitude.

    ``branch="beta"`` gives sum_i alpha_i D phi_i^+(p); ``branch="alphabar"``
    gives sum_i alpha_i^* D phi_i^-(p).
    """
    if branch == "beta":
        return complex(np.dot(alpha.alpha, mode_values(alpha.basis, 1, deriv, p)))
    if branch == "alphabar":
        return complex(np.dot(np.conj(alpha.alpha), mode_values(alpha.basis, -1, deriv, p)))
    raise ValueError(f"unknown profile branch {branch!r}")


def _cplx(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _uncplx(obj) -> complex:
    if isinstance(obj, dict):
        return complex(obj.get("re", 0.0), obj.get("im", 0.0))
    return complex(obj)


def state_to_json(state: CoherentAmplitude | CatState) -> dict:
    if isinstance(state, CoherentAmplitude):
        return {"type": "coherent", "alpha": [_cplx(z) for z in state.alpha]}
    out = {
        "type": "cat",
        "alpha": [_cplx(z) for z in state.alpha.alpha],
        "a": _cplx(state.a),
        "b": _cplx(state.b),
    }
    if state.phase_form:
        out["theta"] = state.theta
    return out


def state_from_json(obj: dict, basis: ModeBasis) -> CoherentAmplitude | CatState:
    alpha = CoherentAmplitude(basis, [_uncplx(z) for z in obj["alpha"]])
    kind = obj.get("type", "coherent")
    if kind == "coherent":
        return alpha
    if kind != "cat":
        raise ValueError(f"unknown state type {kind!r}")
    if obj.get("theta") is not None:
        return phase_cat(float(obj["theta"]), alpha)
    return cat_normalize(_uncplx(obj["a"]), _uncplx(obj["b"]), alpha)
