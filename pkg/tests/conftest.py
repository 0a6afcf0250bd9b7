"""Shared fixtures: small, fast trajectories reused across test modules."""

import numpy as np
import pytest

from sindy_mpc import (
    IntegratorConfig,
    integrate,
    lotka_volterra,
    schroeder_sweep,
)


@pytest.fixture(scope="session")
def lotka_system():
    return lotka_volterra()


@pytest.fixture(scope="session")
def lotka_traj(lotka_system):
    # short clean run with persistent excitation; long enough that the
    # order-2 regression is well conditioned, short enough to stay cheap
    signal = schroeder_sweep(amplitude=0.5, base_freq=0.1)
    return integrate(lotka_system, np.array([50.0, 30.0]), signal,
                     40.0, IntegratorConfig(dt=0.1))
