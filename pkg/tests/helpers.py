import math

import numpy as np

from catgrav import CoherentAmplitude, ModeBasis, SpacetimePoint

TWO_PI = 2 * math.pi


def sub_basis(basis, rows):
    return ModeBasis(basis.geometry, basis.mass, basis.zeta, basis.indices[list(rows)])


def random_amp(rng, basis, scale=1.0):
    v = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    return CoherentAmplitude(basis, scale * v / np.linalg.norm(v))


def random_point(rng, basis):
    return SpacetimePoint(rng.uniform(-2, 2), tuple(rng.uniform(0, basis.geometry.L, basis.d)))


# criterion number -> (passed, detail); filled by the acceptance module
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
