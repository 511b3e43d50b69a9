"""Shared model fixtures.

Specs are session-scoped: the derived square-root kernel is cached on the
spec, and the band-edge cache is keyed by spec identity.
"""
import numpy as np
import pytest

from fockspec.model import (ModelSpec, SeparableKernel, additive_kernel, cubic_cosine_model,
                            decoupled_model, random_chain_model, toy_chain_model)
from fockspec.torus import TrigPoly

RANDOM_SEEDS = (0, 1, 2)


def free_fiber_model(nu: int = 1) -> ModelSpec:
    """No interactions, ``w1`` partly outside its fiber bands."""
    cos = TrigPoly.cos_axis(nu, 0)
    w1 = TrigPoly.constant(nu, -1.0) + 0.5 * cos
    w2 = additive_kernel(TrigPoly.constant(nu, 0.5) - 0.5 * cos)
    return decoupled_model(nu, 0.25, w1, w2)


@pytest.fixture(scope="session")
def cubic():
    return cubic_cosine_model()


@pytest.fixture(scope="session")
def toy():
    return toy_chain_model()


@pytest.fixture(scope="session")
def free1():
    return free_fiber_model(1)


@pytest.fixture(scope="session")
def random_chains():
    return [random_chain_model(s) for s in RANDOM_SEEDS]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


def random_points(seed: int, count: int, nu: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-np.pi, np.pi, (count, nu))


__all__ = ["ModelSpec", "SeparableKernel", "free_fiber_model", "random_points"]
