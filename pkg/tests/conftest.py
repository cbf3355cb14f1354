"""Shared helpers for building random fields and rows in tests."""

from __future__ import annotations

import math
from random import Random

import pytest

from irollan.fields import BlendConfig, FieldRow, PhenomenalField, Position


def random_position(rng: Random) -> Position:
    return Position(
        theta=rng.uniform(0.0, math.pi),
        phi=rng.uniform(0.0, 2.0 * math.pi - 1e-9),
        gamma=rng.uniform(0.0, 3.0),
    )


def random_row(rng: Random, dim: int = 4) -> FieldRow:
    return FieldRow([rng.gauss(0.0, 1.0) for _ in range(dim)], random_position(rng))


def random_field(rng: Random, n_rows: int, dim: int = 4) -> PhenomenalField:
    return PhenomenalField([random_row(rng, dim) for _ in range(n_rows)])


@pytest.fixture
def cfg() -> BlendConfig:
    return BlendConfig()


@pytest.fixture
def unit_weights_cfg() -> BlendConfig:
    # Equal embedding/position split, unit position weights.
    return BlendConfig(weight_embedding=0.5, weight_position=0.5)
