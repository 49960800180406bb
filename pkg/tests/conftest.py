import numpy as np
import pytest

from cyberrisk.core import SeedStream


@pytest.fixture
def stream():
    return SeedStream(20240101)


def three_se(p: float, n: int) -> float:
    """3-sigma band for an empirical proportion."""
    return 3.0 * np.sqrt(p * (1.0 - p) / n)
