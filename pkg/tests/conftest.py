from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from interbank import make_network


@pytest.fixture
def two_bank_net():
    """b1 lends b0 50; shocking b0 fully stresses b1 to 0.5 under linear."""
    return make_network(
        ["b0", "b1"],
        np.array([[0.0, 0.0], [50.0, 0.0]]),
        external_assets=[100.0, 100.0],
        capital_buffer=[10.0, 100.0],
    )


@pytest.fixture
def chain_net():
    """A -> B -> C stress chain: leverage 0.6 then 0.5."""
    return make_network(
        ["A", "B", "C"],
        np.array([[0.0, 0.0, 0.0], [60.0, 0.0, 0.0], [0.0, 50.0, 0.0]]),
        external_assets=[0.0, 0.0, 0.0],
        capital_buffer=[10.0, 100.0, 100.0],
    )


def random_net(rng: np.random.Generator, n: int, density: float = 0.35,
               scale: float = 10.0, buffer_lo: float = 1.0, buffer_hi: float = 20.0):
    """Random positive-buffer test network."""
    exposures = rng.uniform(0.5, scale, size=(n, n))
    exposures *= rng.random(size=(n, n)) < density
    np.fill_diagonal(exposures, 0.0)
    buffers = rng.uniform(buffer_lo, buffer_hi, size=n)
    return make_network(
        [f"b{i}" for i in range(n)],
        exposures,
        external_assets=rng.uniform(0.0, 50.0, size=n),
        capital_buffer=buffers,
    )
