import numpy as np
import pytest

from vicsek_reach.dynamics import Open, Periodic, SimConfig, SwarmState, random_state


def ordered_sampler(cfg, width, box=None):
    """Random positions, headings uniform in [-width/2, width/2]."""

    def sample(rng):
        st = random_state(cfg, rng, box)
        return SwarmState(0, st.positions, rng.uniform(-width / 2, width / 2, cfg.n))

    return sample


def uniform_sampler(cfg, box=None):
    return lambda rng: random_state(cfg, rng, box)


@pytest.fixture
def open10():
    return SimConfig(10, 0.01, 1.0, Open())


@pytest.fixture
def torus10():
    return SimConfig(10, 0.01, 1.0, Periodic(5.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
