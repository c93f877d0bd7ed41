"""Shared fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from coneguard.dynamics import QuadrotorParams


@pytest.fixture(scope="session")
def params():
    return QuadrotorParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20260817)
