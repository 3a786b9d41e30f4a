import numpy as np
import pytest

from regtune.instances import Dataset, ProblemInstance


def random_instance(rng, m=12, p=4, m_prime=5, lo=-1.0, hi=1.0):
    return ProblemInstance(
        Dataset(rng.uniform(lo, hi, (m, p)), rng.uniform(lo, hi, m)),
        Dataset(rng.uniform(lo, hi, (m_prime, p)), rng.uniform(lo, hi, m_prime)),
    )


@pytest.fixture
def identity_instance():
    # train X = I2, y = (3, 1); val x' = (1, 1), y' = 2
    return ProblemInstance(
        Dataset(np.eye(2), [3.0, 1.0]),
        Dataset([[1.0, 1.0]], [2.0]),
    )
