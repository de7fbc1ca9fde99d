import numpy as np
import pytest

import recourse_game as rg
from recourse_game.checks import (
    nonmonotone_witness,
    set_cover_witness,
    two_group_witness,
)


@pytest.fixture
def nonmono() -> rg.Instance:
    """Three-value instance whose joint objective is non-monotone."""
    return nonmonotone_witness()


@pytest.fixture
def setcover():
    """(instance, policy) for the two-element set-cover reduction."""
    return set_cover_witness(gamma=0.3)


@pytest.fixture
def two_group():
    """(instance, matroid) with nearly all rejected mass in group 1."""
    return two_group_witness()


def random_instance(rng: rg.RngStream, m: int, gamma: float | None = None) -> rg.Instance:
    g = gamma if gamma is not None else float(rng.uniform(0.15, 0.85))
    return rg.generate_synthetic(rg.SynthConfig(m=m, gamma=g, seed=rng.integers(2**62)))


def subset(rng: rg.RngStream, items, p: float = 0.5) -> tuple[int, ...]:
    return tuple(i for i in items if rng.random() < p)
