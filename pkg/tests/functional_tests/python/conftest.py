import numpy as np
import pytest

from core.boolfn.polynomial import TetrahedralPolynomial, indices_mask
from core.model.ising import IsingModel, chain_model, random_dobrushin_model
from core.model.law import exact_law


@pytest.fixture(autouse=True)
def quick_profile(monkeypatch):
    """Functional tests run on the quick profile unless a test selects another one."""
    monkeypatch.setenv("ISING_CONC_PROFILE", "quick")
    monkeypatch.delenv("ISING_CONC_THREADS", raising=False)


@pytest.fixture
def product_model():
    n = 6
    return IsingModel(np.zeros((n, n)), np.zeros(n), name="product")


@pytest.fixture
def chain8():
    return chain_model(8)


@pytest.fixture
def random_model():
    return random_dobrushin_model(6, row_mass=0.6, field_scale=0.2, seed=3)


@pytest.fixture
def random_law(random_model):
    return exact_law(random_model)


@pytest.fixture
def cubic_poly():
    """A small mixed-degree polynomial on 5 variables."""
    coeffs = {
        0: 0.5,
        indices_mask([0]): 1.0,
        indices_mask([1, 2]): -0.75,
        indices_mask([0, 3]): 0.25,
        indices_mask([1, 3, 4]): 2.0,
        indices_mask([0, 2, 4]): -1.5,
    }
    return TetrahedralPolynomial(5, coeffs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
