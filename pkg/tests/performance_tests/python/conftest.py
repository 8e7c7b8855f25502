import numpy as np
import pytest

from core.model.ising import random_dobrushin_model


@pytest.fixture(autouse=True)
def default_profile(monkeypatch):
    """Acceptance runs use the default profile sizes."""
    monkeypatch.setenv("ISING_CONC_PROFILE", "default")


@pytest.fixture
def dobrushin_models():
    """Ten seeded random models on six sites, inside Dobrushin's condition and with fields."""
    return [random_dobrushin_model(6, row_mass=0.7, field_scale=0.3, seed=seed) for seed in range(10)]


@pytest.fixture
def rng():
    return np.random.default_rng(31337)
