import math

import numpy as np
import pytest

from tripodmem import GridSpec, ProbeField

GAMMA4 = 2 * math.pi * 6e6


@pytest.fixture
def small_grid():
    return GridSpec(nx=8, ny=8, dx=2e-3 / 8, dy=2e-3 / 8)


def flat_probe(grid, pulse, dtau, channel=1, **kwargs):
    """Single-mode probe with a uniform transverse profile."""
    return ProbeField(
        profiles=np.ones((1, grid.nx, grid.ny), dtype=complex),
        pulses=np.asarray(pulse, dtype=complex)[None],
        grid=grid,
        dtau=dtau,
        carrier_wavelength=795e-9,
        channel=channel,
        **kwargs,
    )
