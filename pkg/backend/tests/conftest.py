"""
Shared fixtures: bundled alphabet, reference dataset and descriptor provider
"""

import os

import pytest

from app.chem.dataset import load_dataset
from app.chem.descriptors import make_provider
from app.chem.selfies import Alphabet
from app.chem.smiles import parse_smiles
from app.config import DEFAULT_DATASET_PATH
from app.ga.config import GAConfig

ZINC_SAMPLE_ENV = "MOLGA_ZINC_SAMPLE"
ZINC_SAMPLE_LINES = 1000


@pytest.fixture(scope="session")
def alphabet():
    return Alphabet.default()


@pytest.fixture(scope="session")
def dataset():
    return load_dataset(DEFAULT_DATASET_PATH)


@pytest.fixture(scope="session")
def provider(dataset):
    return make_provider("builtin", reference=dataset)


@pytest.fixture(scope="session")
def zinc_sample():
    """First 1000 lines of a ZINC SMILES file named by MOLGA_ZINC_SAMPLE"""
    path = os.getenv(ZINC_SAMPLE_ENV)
    if not path:
        pytest.skip(f"{ZINC_SAMPLE_ENV} is not set")
    return load_dataset(path, limit=ZINC_SAMPLE_LINES)


@pytest.fixture
def mol():
    """parse_smiles shortcut"""
    return parse_smiles


@pytest.fixture
def small_config():
    """Factory for GA configs small enough for unit tests"""

    def build(**overrides):
        payload = {
            "population_size": 12,
            "generations": 4,
            "diversity_sample": 12,
            "discriminator": {"architecture": "none"},
        }
        payload.update(overrides)
        return GAConfig.model_validate(payload)

    return build
