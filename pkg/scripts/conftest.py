"""
Shared pytest fixtures: project root on sys.path and a seeded random generator
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))


@pytest.fixture
def rng():
    return np.random.default_rng(20241017)


@pytest.fixture
def random_matrix(rng):
    """Complex Gaussian matrices, optionally shifted by a multiple of the identity"""

    def make(rows, cols=None, scale=1.0, shift=0.0):
        cols = rows if cols is None else cols
        x = scale * (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))
        if shift:
            x = x + shift * np.eye(rows, cols)
        return x

    return make


@pytest.fixture
def scenario_dir():
    return project_root / "config" / "scenarios"
