# tests/conftest.py

"""Shared fixtures: small odd grids so the suite runs in seconds."""

import numpy as np
import pytest

from vortexlab.grid import Params, build_grid

NX: int = 17
NY: int = 13


@pytest.fixture(scope="module")
def canonical() -> Params:
    """L = 1, K = 2/3, delta = 4/15."""
    return Params()


@pytest.fixture(scope="module")
def grid(canonical):
    return build_grid(canonical, NX, NY)


@pytest.fixture(scope="module")
def no_leads():
    return Params(delta=0.0)


@pytest.fixture(scope="module")
def full_leads():
    return Params(delta=2.0 / 3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
