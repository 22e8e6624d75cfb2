import numpy as np
import pytest

from doakit.room import ArrayGeometry, RoomSpec


@pytest.fixture
def geometry():
    """The canonical 4-mic, 0.035 m array centred in the 7x5x3 room."""
    return ArrayGeometry.linear(4, 0.035, center=(3.5, 2.2, 1.5))


@pytest.fixture
def anechoic_room():
    return RoomSpec.anechoic((7.0, 5.0, 3.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
