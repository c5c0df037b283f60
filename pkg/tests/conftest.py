"""Shared fixtures.  The Hubbard operator is the only expensive build
(4900 basis states), so it is constructed once per session."""

import numpy as np
import pytest

import krylovexp as kx


@pytest.fixture(scope="session")
def hubbard_op():
    return kx.build_hubbard(0.123)


@pytest.fixture(scope="session")
def hubbard_vec():
    return kx.starting_vector(kx.ProblemSpec("hubbard", seed=0))


@pytest.fixture(scope="session")
def heat_pair():
    spec = kx.ProblemSpec("heat", {"n": 200}, seed=0)
    op, sigma = spec.build()
    return op, sigma, kx.starting_vector(spec)


@pytest.fixture(scope="session")
def schrodinger_pair():
    spec = kx.ProblemSpec("schrodinger_free", {"n": 200}, seed=0)
    op, sigma = spec.build()
    return op, sigma, kx.starting_vector(spec)


def random_unit(n, seed, complex_=True):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    if complex_:
        v = v + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)
