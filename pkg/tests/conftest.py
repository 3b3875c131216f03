import pytest

from trackscan.kb import seed_kb


@pytest.fixture(scope="session")
def kb():
    return seed_kb()
