import pytest

from shufflelab.bigint_group import SecurityParams
from shufflelab.shuffle_proof import make_setup


@pytest.fixture(scope="session")
def desk_K():
    return SecurityParams()


@pytest.fixture(scope="session")
def setup(desk_K):
    return make_setup(desk_K, seed=1)


@pytest.fixture(scope="session")
def wide_setup():
    # K5 large enough that honest overflow is negligible
    return make_setup(SecurityParams(K5=40), seed=1)


@pytest.fixture(scope="session")
def group(setup):
    return setup.group
