import numpy as np
import pytest

from mboflow import Disc, ScalarField, make_grid, sample_shape

# Off-lattice center used across the tests; keeps threshold ties and grid
# commensurability artifacts non-generic.
CENTER2 = (0.512317, 0.483643)


def disc_field(n: int, radius: float, center=CENTER2) -> ScalarField:
    return sample_shape(Disc(radius, center), make_grid(2, n))


def random_field(grid, seed: int) -> ScalarField:
    rng = np.random.default_rng(seed)
    return ScalarField(grid, rng.random(grid.shape))


def random_indicator(grid, seed: int, fill: float | None = None) -> ScalarField:
    rng = np.random.default_rng(seed)
    p = fill if fill is not None else rng.uniform(0.2, 0.8)
    return ScalarField(grid, (rng.random(grid.shape) < p).astype(float))


@pytest.fixture(scope="session")
def disc256():
    return disc_field(256, 0.3)
