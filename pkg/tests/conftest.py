from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260816)


def ginibre(d1: int, d2: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=(d1, d2)) + 1j * rng.normal(size=(d1, d2))


def random_density(d: int, rng: np.random.Generator) -> np.ndarray:
    z = ginibre(d, d, rng)
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


def random_blocks(d_in: int, d_out: int, n: int, rng: np.random.Generator):
    return tuple(ginibre(d_in, d_out, rng) / np.sqrt(d_in) for _ in range(n))
