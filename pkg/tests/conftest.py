import numpy as np
import pytest

from fellbench import bundle as fb
from fellbench import semigroup as sg


@pytest.fixture(scope="session")
def i2():
    return sg.symmetric_inverse_monoid(2)


@pytest.fixture(scope="session")
def i3():
    return sg.symmetric_inverse_monoid(3)


@pytest.fixture(scope="session")
def trivial_i2(i2):
    return fb.trivial_bundle(i2)


@pytest.fixture(scope="session")
def trivial_z3():
    return fb.trivial_bundle(sg.cyclic_group(3))


@pytest.fixture(scope="session")
def chain2_bundle():
    return fb.trivial_bundle(sg.semilattice_chain(2))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0)
