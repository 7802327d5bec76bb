import numpy as np
import pytest

from rislink.channel import BlockageModel, GeometryConfig, UserState, generate_channels
from rislink.signal import LinkBudget


@pytest.fixture
def small_geometry():
    return GeometryConfig(
        n_bs_antennas=4, n_ris_elements=4, n_users=3, n_paths=6,
        area_bounds=(10.0, 0.0, 30.0, 20.0),
        bs_position=(0.0, 10.0), ris_position=(30.0, 10.0),
    )


@pytest.fixture
def small_users(small_geometry):
    rng = np.random.default_rng(5)
    lo_x, lo_y, hi_x, hi_y = small_geometry.area_bounds
    return [
        UserState(np.array([rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)]),
                  rng.normal(0, 0.3, 2), blocked)
        for blocked in (False, True, False)
    ]


@pytest.fixture
def small_realization(small_geometry, small_users):
    return generate_channels(small_geometry, small_users, 99)


@pytest.fixture
def budget():
    return LinkBudget(p_max=1.0, sigma2=1e-8, r_min=0.5)
