from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pytest

from cluster.model import PolymerSpace

FIXTURES = Path(__file__).parent / "fixtures"


def make_space(
    rho: Sequence[float],
    entries: Sequence[tuple],
    B: Optional[Sequence[float]] = None,
    self_incompatible: bool = True,
) -> PolymerSpace:
    """Small space with ids g0, g1, ...; every polymer is self-incompatible unless told otherwise."""
    ids = [f"g{k}" for k in range(len(rho))]
    listing = list(entries)
    if self_incompatible:
        listing += [(k, k, "inf") for k in range(len(rho))]
    return PolymerSpace.from_entries(ids, rho, B if B is not None else [0.0] * len(rho), listing)


def random_space(seed: int, min_size: int = 2, max_size: int = 4) -> PolymerSpace:
    """Mixed hard-core and soft space whose B bounds the attraction of each polymer."""
    rng = np.random.Generator(np.random.PCG64(seed))
    size = int(rng.integers(min_size, max_size + 1))
    entries = []
    attraction = np.zeros(size)
    for i in range(size):
        for j in range(i + 1, size):
            if rng.random() < 0.4:
                entries.append((i, j, "inf"))
                continue
            value = float(rng.uniform(-1.0, 1.0))
            entries.append((i, j, value))
            attraction[i] += max(-value, 0.0) / 2
            attraction[j] += max(-value, 0.0) / 2
    return make_space(rng.uniform(0.01, 0.1, size=size).tolist(), entries, B=attraction.tolist())


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def single_space():
    return make_space([0.3], [])


@pytest.fixture
def triangle_space():
    return make_space([0.1, 0.1, 0.1], [(0, 1, "inf"), (0, 2, "inf"), (1, 2, "inf")])


@pytest.fixture
def attractive_pair():
    return make_space([0.1, 0.1], [(0, 1, -1.0)], B=[0.5, 0.5])


@pytest.fixture
def independent_pair():
    return make_space([0.1, 0.2], [])
