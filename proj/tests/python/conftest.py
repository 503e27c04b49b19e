import numpy as np
import pytest


def tilted_square(normal=(1.0, 2.0, 3.0), side=1.0, pitch=0.005, center=(0.7, 0.4, 0.9)):
    """Noise-free lattice square with the given unit normal."""
    n = np.asarray(normal, dtype=float)
    n /= np.linalg.norm(n)
    t = np.cross(n, [0.0, 0.0, 1.0])
    t /= np.linalg.norm(t)
    s = np.cross(n, t)
    count = int(round(side / pitch))
    grid = (np.arange(count) + 0.5) * pitch - 0.5 * side
    x, y = np.meshgrid(grid, grid, indexing="ij")
    return np.asarray(center) + x.reshape(-1, 1) * t + y.reshape(-1, 1) * s


@pytest.fixture
def plane_cloud():
    return tilted_square()


@pytest.fixture
def blob_cloud():
    rng = np.random.default_rng(5)
    return rng.normal(0.0, 0.05, size=(300, 3)) + np.array([1.0, -2.0, 0.5])
