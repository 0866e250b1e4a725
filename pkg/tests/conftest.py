import pytest

from bowlcert.barrier import build_barrier
from bowlcert.profile import solve_profile


@pytest.fixture(scope="session")
def profile():
    return solve_profile(r_max=60.0, tol=1e-10)


@pytest.fixture(scope="session")
def barrier():
    return build_barrier()
