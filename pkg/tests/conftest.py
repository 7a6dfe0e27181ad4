"""Shared fixtures: a tiny scenario and a small trained model.

Session-scoped so the expensive pieces (dataset generation, training) run
once for the whole unit-test suite.
"""

import numpy as np
import pytest

import beamsec as bs
from beamsec.channel import ScenarioConfig


TINY_SCENARIO = ScenarioConfig(
    name="tiny", num_antennas=8, num_subcarriers=16,
    num_pilot_subcarriers=4, num_users=300, num_paths=3,
    carrier_ghz=60.0, bandwidth_ghz=0.5, codebook_size=8,
    user_region=(2.0, 11.0, -5.0, 5.0), seed=77)


@pytest.fixture(scope="session")
def tiny_dataset():
    ds = bs.generate_scenario(TINY_SCENARIO)
    return bs.split_dataset(ds, 0.8, seed=5)


@pytest.fixture(scope="session")
def tiny_model(tiny_dataset):
    spec = bs.ModelSpec(input_dim=tiny_dataset.X.shape[1],
                        hidden_dims=(32, 16),
                        output_dim=tiny_dataset.Y.shape[1])
    model, history = bs.train(spec, tiny_dataset,
                              bs.TrainConfig(epochs=30, seed=11))
    assert history[-1] < history[0]
    return model


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
