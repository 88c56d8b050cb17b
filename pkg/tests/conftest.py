"""Shared fixtures: hand-built solvable kitchens and random-grid helpers."""

from __future__ import annotations

import random

import pytest

from kitchenforge.grid import KitchenGrid, TOKENS, parse_grid

# A compact kitchen where everything is one or two steps away: pot north,
# dish west, serve east, onion south.
TINY_KITCHEN = "ccncc\ndhers\nccpcc"

# A roomier 8x6 kitchen with two pots and some open floor.
MID_KITCHEN = (
    "cccncccc\n"
    "cheeeedc\n"
    "ceepeeec\n"
    "ceeeeerc\n"
    "cseeeepc\n"
    "cccccccc"
)


@pytest.fixture
def tiny_kitchen() -> KitchenGrid:
    return parse_grid(TINY_KITCHEN)


@pytest.fixture
def mid_kitchen() -> KitchenGrid:
    return parse_grid(MID_KITCHEN)


def random_grid(rng: random.Random, width: int, height: int) -> KitchenGrid:
    """Uniform random tokens everywhere; usually wildly unsolvable."""
    tiles = tuple(rng.choice(TOKENS) for _ in range(width * height))
    return KitchenGrid(width, height, tiles)
