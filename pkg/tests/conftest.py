"""
Shared fixtures for the biot_th test suite
"""

import pytest

from biot_th.assembly import PhysicalParams
from biot_th.mesh import unit_square_mesh
from biot_th.mms import example1, example2, polynomial_case, zero_case
from biot_th.spaces import build_mixed_spaces


@pytest.fixture
def mesh2():
    return unit_square_mesh(2)


@pytest.fixture
def mesh4():
    return unit_square_mesh(4)


@pytest.fixture
def spaces2(mesh2):
    """Taylor-Hood P2/P1 with P1 pressure on the 2 x 2 mesh"""
    return build_mixed_spaces(mesh2, 2, 1)


@pytest.fixture
def unit_params():
    return PhysicalParams.from_lame(mu=1.0, lam=1.0)


@pytest.fixture
def case1():
    return example1()


@pytest.fixture
def case2():
    return example2(0.3, 1.0)


@pytest.fixture
def poly_case():
    return polynomial_case()


@pytest.fixture
def zero():
    return zero_case()
