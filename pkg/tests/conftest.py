import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from atomic_index.datasets import SortedTable, generate_uniform


@pytest.fixture(scope="session")
def small_uniform():
    return generate_uniform(1000, seed=11)


@pytest.fixture(scope="session")
def fig_table():
    """Ten-key example table used throughout the docs."""
    return SortedTable(np.array([47, 105, 140, 289, 316, 358, 386, 398, 819, 939], dtype=np.uint64))


@pytest.fixture(scope="session")
def arithmetic_table():
    return SortedTable(np.arange(10, 101, 10, dtype=np.uint64))
