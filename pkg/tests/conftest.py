from __future__ import annotations

from functools import lru_cache
from importlib.resources import files

import pytest

from abelca.pipeline import derive
from abelca.specfile import load_spec

FIXTURES = files("abelca") / "fixtures"


def fixture_path(name: str) -> str:
    return str(FIXTURES / f"{name}.ca")


@lru_cache(maxsize=None)
def spec(name: str):
    return load_spec(fixture_path(name))


@lru_cache(maxsize=None)
def derived(name: str, full_space: bool = False, closed: bool = True):
    return derive(spec(name).automaton(), full_space=full_space, closed=closed)


@pytest.fixture(scope="session")
def theta_spec():
    return spec("theta")


@pytest.fixture(scope="session")
def theta():
    """Full 256-state system of the running example."""
    return derived("theta", full_space=True)


@pytest.fixture(scope="session")
def theta_reachable():
    return derived("theta")
