import numpy as np
import pytest

from halfspace import Grid, build_poisson_kernel, build_system


@pytest.fixture(scope="session")
def lap2():
    return build_system("laplacian", n=2)


@pytest.fixture(scope="session")
def lap3():
    return build_system("laplacian", n=3)


@pytest.fixture(scope="session")
def lame2():
    return build_system("lame", n=2, mu=1.0, lam=1.0)


@pytest.fixture(scope="session")
def complex_scalar():
    # non-symmetric complex scalar operator, genuinely elliptic
    return build_system("scalar", A=[[1.0, 0.4 + 0.2j], [-0.1j, 1.0]])


@pytest.fixture(scope="session")
def lap2_kernel(lap2):
    return build_poisson_kernel(lap2, N=4096)


@pytest.fixture(scope="session")
def lame2_kernel(lame2):
    return build_poisson_kernel(lame2, N=4096)


@pytest.fixture(scope="session")
def grid_mid():
    return Grid(n=2, N=1024, h=0.125)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
