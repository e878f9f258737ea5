import os
import sys

import pytest

# modules/ lives at the repository root, next to main.py
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from modules.distributions import MixtureSpec  # noqa: E402
from modules.numerics import SeedSpec  # noqa: E402


@pytest.fixture
def seed():
    return SeedSpec(20240601)


@pytest.fixture
def mixture():
    return MixtureSpec.of_dimension(200, 0.75)
