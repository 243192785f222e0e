import numpy as np
import pytest

import rsmasec as rs


@pytest.fixture
def fig_config():
    """Four antennas, two secret users, two normal users, two eavesdroppers."""
    return rs.SystemConfig(n_antennas=4, n_secret=2, n_normal=2, n_eves=2)


@pytest.fixture
def scenario(fig_config):
    rng = np.random.default_rng(7)
    return rs.draw_scenario(fig_config, rs.ScenarioLayout(), rng)


@pytest.fixture
def unit_stack():
    def make(rng: np.random.Generator, dim: int) -> np.ndarray:
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return v / np.linalg.norm(v)

    return make
