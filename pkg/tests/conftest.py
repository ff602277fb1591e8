import numpy as np
import pandas as pd
import pytest

from nonholonomic import scenarios
from nonholonomic.conf import get_tolerances
from nonholonomic.integrator import IntegratorOptions, integrate


@pytest.fixture
def tolerances():
    return get_tolerances()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def simulate(tolerances):
    """Build a scenario and integrate it; returns ``(system, trajectory)``."""

    def _simulate(name, t_final, h=1e-3, params=None, vertical_mode=None):
        system = scenarios.build(name, params, vertical_mode=vertical_mode)
        state0 = scenarios.initial_state(name, system, params)
        trajectory = integrate(system, state0, t_final, IntegratorOptions(h=h, tolerances=tolerances))
        return system, trajectory

    return _simulate


@pytest.fixture
def out_dir(tmp_path, settings):
    settings.SIMULATION_OUTPUT_ROOT = tmp_path / "runs"
    return tmp_path


@pytest.fixture
def read_trajectory():
    def _read(path):
        return pd.read_csv(path, float_precision="round_trip")

    return _read


@pytest.fixture
def read_events():
    """Impact JSONL as a frame; list-valued columns stay lists."""

    def _read(path):
        return pd.read_json(path, lines=True, dtype=False)

    return _read
