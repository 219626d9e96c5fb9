"""Shared fixtures.  Kernels compile once per session, before any timing."""
import pytest

from fpplab._kernels import warm_up
from fpplab.growth import compute_passage
from fpplab.lattice import LatticeBox
from fpplab.weights import EdgeWeightField, parse_model


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    warm_up()


@pytest.fixture(scope="session")
def exp_ball():
    """One exponential-weight ball shared by read-only measurements."""
    field = EdgeWeightField(parse_model("exponential rate=1.0"), seed=20240817)
    return compute_passage(field, LatticeBox(64), 16.0, 2)


@pytest.fixture(scope="session")
def dirac_ball():
    """Unit-weight ball: passage time is exactly the l1 norm."""
    field = EdgeWeightField(parse_model("dirac value=1.0"), seed=1)
    return compute_passage(field, LatticeBox(14), 12.0, 2)
