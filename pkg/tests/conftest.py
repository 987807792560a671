import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import ndimage

sys.path.insert(0, str(Path(__file__).parent))

import exradon as ex


@pytest.fixture(scope="session")
def shepp_logan():
    return ex.make_shepp_logan()


@pytest.fixture(scope="session")
def grid256():
    return ex.ImageGrid(256)


@pytest.fixture(scope="session")
def sino_grid256():
    return ex.SinogramGrid.make(256, 256)


@pytest.fixture(scope="session")
def sl_sino_mu3(shepp_logan, sino_grid256):
    return ex.project_analytic(shepp_logan, 3.0, sino_grid256)


@pytest.fixture(scope="session")
def sl_sino_mu0(shepp_logan, sino_grid256):
    return ex.project_analytic(shepp_logan, 0.0, sino_grid256)


@pytest.fixture(scope="session")
def sl_truth256(shepp_logan, grid256):
    return shepp_logan.rasterize(grid256)


def interior_mask(grid, truth_values=None, r_max=0.85, boundary_pad=5):
    """Pixels inside radius r_max and (optionally) away from phantom edges."""
    xs = grid.centers()
    mask = (xs[:, None] ** 2 + xs[None, :] ** 2) < r_max ** 2
    if truth_values is not None:
        flat = (ndimage.minimum_filter(truth_values, size=boundary_pad)
                == ndimage.maximum_filter(truth_values, size=boundary_pad))
        mask &= flat
    return mask


@pytest.fixture(scope="session")
def sl_interior256(grid256, sl_truth256):
    return interior_mask(grid256, sl_truth256.values)
