import numpy as np
import pytest

from vortexsqueeze.beams import BeamSpec, make_beam
from vortexsqueeze.fields import GridSpec

WAVELENGTH = 795e-9


@pytest.fixture(scope="session")
def small_grid() -> GridSpec:
    """256^2 grid, 16x the FWHM of a 0.2 mm waist beam."""
    w = 0.2e-3
    window = 16.0 * w * np.sqrt(2.0 * np.log(2.0))
    d = window / 256
    return GridSpec(256, 256, d, d, WAVELENGTH)


@pytest.fixture(scope="session")
def gaussian_beam(small_grid):
    return make_beam(BeamSpec("gaussian", 0.2e-3, 10.5e-3), small_grid)


@pytest.fixture(scope="session")
def lg1_beam(small_grid):
    return make_beam(BeamSpec("lg1", 0.2e-3, 10.5e-3), small_grid)
