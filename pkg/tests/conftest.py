import numpy as np
import pytest
from scipy.stats import unitary_group


def haar_su2(rng):
    U = unitary_group.rvs(2, random_state=rng)
    return U / np.sqrt(np.linalg.det(U))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
