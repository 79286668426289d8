import numpy as np
import pytest

from waveformer.checkpoint import random_init
from waveformer.config import ModelConfig
from waveformer.stream import Waveformer

ACCEPTANCE_LINES = []


def small_config(**kw):
    base = dict(enc_dim=32, dec_dim=16, heads=4, embed_hidden=24, num_layers=4)
    base.update(kw)
    return ModelConfig(**base)


@pytest.fixture(scope="session")
def small_cfg():
    return small_config()


@pytest.fixture(scope="session")
def small_weights(small_cfg):
    return random_init(small_cfg, 3)


@pytest.fixture(scope="session")
def small_model(small_weights):
    return Waveformer(small_weights)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
