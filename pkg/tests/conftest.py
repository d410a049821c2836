import functools

import numpy as np
import pytest
from hypothesis import strategies as st

from presstrack.geometry import Box
from presstrack.simulate import SimConfig, simulate

coord = st.floats(-200, 200, allow_nan=False, allow_infinity=False)
side = st.floats(0.25, 120, allow_nan=False, allow_infinity=False)
boxes = st.builds(Box, coord, coord, side, side)


def random_boxes(rng: np.random.Generator, n: int) -> list[Box]:
    xy = rng.uniform(-50, 150, (n, 2))
    wh = rng.uniform(0.5, 60, (n, 2))
    return [Box(*map(float, r)) for r in np.hstack([xy, wh])]


@functools.lru_cache(maxsize=None)
def cached_sim(**kw):
    return simulate(SimConfig(**kw))


@pytest.fixture(scope="session")
def sim_small():
    """3 persons crossing, 20 s at 25 fps."""
    return cached_sim(n_persons=3, duration=20.0, seed=3)
