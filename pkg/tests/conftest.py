import numpy as np
import pytest

import platelab as pl
from platelab import assembly


class DiskSetup:
    """Cached disk assembly shared across tests (one build per h)."""

    def __init__(self, h, m=5):
        self.h = h
        self.domain = pl.disk(1.0)
        self.grid, self.mask = pl.build_grid(self.domain, h)
        self.dist = pl.euclidean_from_sdf(self.domain, self.grid, self.mask)
        self.Q0 = assembly.assemble_Q0(self.grid, self.mask)
        self.mass = assembly.assemble_weighted(self.grid, self.mask, None,
                                               "mass", 0.0, 1)
        self.spec = pl.lowest_eigenpairs(self.Q0, self.mass, m=m)


_CACHE = {}


def disk_setup(h, m=5):
    key = (round(1.0 / h), m)
    if key not in _CACHE:
        _CACHE[key] = DiskSetup(h, m)
    return _CACHE[key]


@pytest.fixture(scope="session")
def disk32():
    return disk_setup(1.0 / 32)


@pytest.fixture(scope="session")
def disk64():
    return disk_setup(1.0 / 64)
