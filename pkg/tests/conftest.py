import numpy as np
import pytest
from hypothesis import settings

from thermochain import SpectralDensity

settings.register_profile("deterministic", derandomize=True, deadline=None)
settings.load_profile("deterministic")


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def ohmic01():
    return SpectralDensity.ohmic(0.1)


def kron_all(*ops):
    out = np.asarray(ops[0])
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


@pytest.fixture
def kron():
    return kron_all
