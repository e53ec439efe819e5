import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_skew(gen, dim, complex_entries=False):
    a = gen.standard_normal((dim, dim))
    if complex_entries:
        a = a + 1j * gen.standard_normal((dim, dim))
    return a - a.T


def random_density(gen, n):
    dim = 2**n
    a = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)
