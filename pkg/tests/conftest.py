import numpy as np
import pytest

from catgrav import BoxGeometry, build_box_modes

from helpers import TWO_PI, sub_basis


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def basis3():
    """d=1, L=2pi, m=1, zeta=0, k in {-1, 0, 1}."""
    return build_box_modes(BoxGeometry(1, TWO_PI), 1.0, 0.0, 1)


@pytest.fixture
def basis3_zeta():
    return build_box_modes(BoxGeometry(1, TWO_PI), 1.0, 0.37, 1)


@pytest.fixture
def basis1(basis3):
    """Single k=1 mode (omega = sqrt 2)."""
    return sub_basis(basis3, [2])


@pytest.fixture
def basis2(basis3_zeta):
    return sub_basis(basis3_zeta, [1, 2])


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
