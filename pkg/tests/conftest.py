"""Shared fixtures: the seeded network family every soundness suite runs on."""

import math

import numpy as np
import pytest

from curvcert import Norm, ResidualBlock, SequentialNetwork, builtin
from curvcert.activations import BUILTIN_NAMES
from curvcert.modelio import generate_fixture

ALL_NORMS = (Norm(1), Norm(2), Norm(math.inf))


def seeded_family(n: int = 40):
    """n deterministic fixtures spanning depths 1-5, widths 4-16, all builtins,
    residual and plain blocks, with and without affine heads."""
    nets = []
    for seed in range(n):
        rng = np.random.default_rng(1000 + seed)
        depth = 1 + seed % 5
        widths = [int(rng.integers(4, 17)) for _ in range(depth + 1)]
        nets.append(generate_fixture(
            widths,
            seed=seed,
            activation=BUILTIN_NAMES[seed % 4],
            residual=seed % 3 == 0,
            target_norm=1.25 if seed % 2 else 0.9,
            bias_scale=0.1,
            head=seed % 2 == 0,
        ))
    return nets


@pytest.fixture(scope="session")
def family():
    return seeded_family(40)


@pytest.fixture(scope="session")
def small_family(family):
    return family[:10]


def plain_tanh_block(n: int = 2, scale: float = 1.0) -> ResidualBlock:
    return ResidualBlock(weight=scale * np.eye(n), activation=builtin("tanh"))


def single_block_net(block: ResidualBlock) -> SequentialNetwork:
    return SequentialNetwork(blocks=(block,))
