import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from quantum_state import random_density_matrix  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1729)


@pytest.fixture
def random_states(rng):
    """Fifty random two-qubit states of mixed rank"""
    return [random_density_matrix(rng, rank=int(r)) for r in rng.integers(1, 5, size=50)]


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv('BELLNOISE_SEED', raising=False)
