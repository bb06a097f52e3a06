import numpy as np
import pytest

from swmoment.basis import build_basis


@pytest.fixture(scope="session")
def basis1():
    return build_basis(1)


@pytest.fixture(scope="session")
def basis2():
    return build_basis(2)


@pytest.fixture(scope="session")
def basis3():
    return build_basis(3)


@pytest.fixture(scope="session")
def basis6():
    return build_basis(6)


def random_wet_primitive(rng, N, M, h_range=(1e-3, 0.1), vel_scale=1.0):
    """Random wet primitive rows (h, u_m, alpha_1..alpha_N)."""
    P = np.empty((M, N + 2))
    P[:, 0] = 10.0 ** rng.uniform(np.log10(h_range[0]), np.log10(h_range[1]), M)
    P[:, 1] = vel_scale * rng.uniform(-1.0, 1.0, M)
    P[:, 2:] = vel_scale * rng.uniform(-1.0, 1.0, (M, N)) * 0.5 ** np.arange(N)
    return P
