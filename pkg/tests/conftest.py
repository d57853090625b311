import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from phonon_accum.fock import PhononDistribution

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def distributions(draw, min_size=1, max_size=12, complete=True):
    """Random probability vectors; ``complete=False`` allows missing tail mass."""
    size = draw(st.integers(min_size, max_size))
    w = np.array(draw(st.lists(st.floats(0, 1), min_size=size, max_size=size)))
    if w.sum() == 0:
        w[0] = 1.0
    p = w / w.sum()
    if not complete:
        p = p * draw(st.floats(0.5, 1.0))
    return PhononDistribution(p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
