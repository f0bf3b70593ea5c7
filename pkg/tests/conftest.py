import numpy as np
import pytest

from rslimits import priors
from rslimits.potential import ModelSpec
from rslimits.solver import SolveSettings


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def wigner_gaussian():
    """d=1 Gaussian prior rho=1, S=0, B=1 (effective snr lambda = 2)."""
    return ModelSpec(1, ([[1.0]],), [[0.0]], priors.gaussian([[1.0]]))


@pytest.fixture
def wigner_rademacher():
    """d=1 Rademacher, S=0, B=1 (lambda = 2)."""
    return ModelSpec(1, ([[1.0]],), [[0.0]], priors.rademacher())


@pytest.fixture
def fast_settings():
    return SolveSettings(damping=0.5, tol=1e-11, max_iters=20_000)


def rademacher_model(lam, s=0.0):
    b = np.sqrt(lam / 2.0)
    return ModelSpec(1, ([[b]],), [[s]], priors.rademacher())


def random_psd(rng, d, scale=1.0):
    a = rng.standard_normal((d, d))
    return scale * (a @ a.T) / d


def random_discrete_prior(rng, d, atom_count=4, radius=1.5):
    atoms = rng.uniform(-radius, radius, size=(atom_count, d))
    w = rng.uniform(0.2, 1.0, size=atom_count)
    return priors.discrete(atoms, w / w.sum())
