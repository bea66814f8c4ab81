import pytest

from nitschefem.analysis import make_mesh


@pytest.fixture(scope="session")
def mesh10():
    return make_mesh(10, "jittered")


@pytest.fixture(scope="session")
def mesh20():
    return make_mesh(20, "jittered")


@pytest.fixture(scope="session")
def mesh10s():
    return make_mesh(10, "structured")


@pytest.fixture(scope="session")
def mesh20s():
    return make_mesh(20, "structured")
