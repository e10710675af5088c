import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from apcgnn.data import generate_synthetic_cohort
from apcgnn.training import TrainConfig, train_and_evaluate


@pytest.fixture(scope="session")
def cohort120():
    return generate_synthetic_cohort(120, seed=3)


@pytest.fixture(scope="session")
def quick_config():
    return TrainConfig(hidden_dim=16, epochs=40, seed=3, k_min=2, k_max=6)


@pytest.fixture(scope="session")
def quick_model(cohort120, quick_config):
    """Small trained model + report + split, shared across test modules."""
    model, report, split = train_and_evaluate(cohort120, quick_config)
    return model, report, split


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
