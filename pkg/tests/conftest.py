import numpy as np
import pytest

from lbpp import (
    ThinPlateParams,
    build_cosine_basis,
    fit_mode,
    make_toy_intensity,
    normalize,
    sample_poisson_thinning,
    standard_domain,
)
from lbpp.datasets import load_dataset
from lbpp.domain import NormalizedPattern


@pytest.fixture(scope="session")
def redwood_norm():
    return normalize(load_dataset("redwood"))


@pytest.fixture(scope="session")
def toy_data_1d():
    """A reproducible 1-d training pattern drawn from a synthetic intensity."""
    truth = make_toy_intensity(seed=3)
    pat = sample_poisson_thinning(truth, standard_domain(1), seed=11)
    assert pat.m >= 5
    return truth, NormalizedPattern(pat, 1.0, standard_domain(1))


@pytest.fixture(scope="session")
def toy_model_1d(toy_data_1d):
    _, data = toy_data_1d
    basis = build_cosine_basis(1, 32, ThinPlateParams(a=0.05, b=0.05))
    return fit_mode(basis, data)


def random_pattern(d: int, m: int, seed: int) -> NormalizedPattern:
    rng = np.random.default_rng(seed)
    pts = rng.random((m, d)) * np.pi
    from lbpp.domain import PointPattern

    dom = standard_domain(d)
    return NormalizedPattern(PointPattern(pts, dom), 1.0, dom)
