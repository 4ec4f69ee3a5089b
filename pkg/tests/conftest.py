import functools

import pytest

from rydpolaron import pipeline
from rydpolaron.config import defaults

RHO_MAX = 3.6e20  # m^-3


@functools.lru_cache(maxsize=None)
def prepared(n: int):
    """Default-config pipeline state for principal quantum number n (cached)."""
    return pipeline.prepare(n, defaults())


@pytest.fixture(scope="session")
def prep38():
    return prepared(38)


@pytest.fixture(scope="session")
def prep49():
    return prepared(49)


@pytest.fixture(scope="session")
def prep72():
    return prepared(72)
