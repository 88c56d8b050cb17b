"""Subtask vocabulary shared by all planners.

A subtask is a high-level goal like "pick an onion", optionally pinned to a
concrete station tile when several candidates exist. Feasibility and the
successor relation follow the held-item state machine: empty hands lead to
pickups, an onion leads to a pot, a dish leads to a cooked pot, a soup leads
to a serve point.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..engine import GameState, Held, POT_CAPACITY
from ..grid import DISH, ONION, POT, SERVE, KitchenGrid

PICK_ONION = "pick_onion"
PICK_DISH = "pick_dish"
DROP_ONION = "drop_onion_in_pot"
SCOOP_SOUP = "scoop_soup"
DELIVER_SOUP = "deliver_soup"
WAIT = "wait"

#: Fixed enumeration used for deterministic tie-breaking everywhere.
KIND_ORDER = (PICK_ONION, PICK_DISH, DROP_ONION, SCOOP_SOUP, DELIVER_SOUP, WAIT)


@dataclass(frozen=True, order=True)
class Subtask:
    kind: str
    tile: tuple[int, int] | None = None

    @property
    def sort_key(self):
        tile = self.tile if self.tile is not None else (-1, -1)
        return (KIND_ORDER.index(self.kind), tile[1], tile[0])


def candidate_tiles(state: GameState, kind: str) -> list[tuple[int, int]]:
    """Station tiles where `kind` could currently be carried out.

    Row-major order, which doubles as the tie-break order.
    """
    grid = state.grid
    if kind == PICK_ONION:
        tiles = grid.find_all(ONION)
    elif kind == PICK_DISH:
        tiles = grid.find_all(DISH)
    elif kind == DROP_ONION:
        tiles = [
            t
            for t in grid.find_all(POT)
            if state.pots[t].onion_count < POT_CAPACITY
        ]
    elif kind == SCOOP_SOUP:
        tiles = [
            t
            for t in grid.find_all(POT)
            if state.pots[t].onion_count == POT_CAPACITY
        ]
    elif kind == DELIVER_SOUP:
        tiles = grid.find_all(SERVE)
    else:
        return [None]
    return sorted(tiles, key=lambda t: (t[1], t[0]))


def feasible_kinds(held: Held, state: GameState) -> list[str]:
    """Subtask kinds an agent holding `held` could be pursuing."""
    if state.orders_remaining == 0:
        return []
    if held == Held.NOTHING:
        return [PICK_ONION, PICK_DISH]
    if held == Held.ONION:
        return [DROP_ONION] if candidate_tiles(state, DROP_ONION) else []
    if held == Held.DISH:
        return [SCOOP_SOUP] if candidate_tiles(state, SCOOP_SOUP) else []
    return [DELIVER_SOUP]


def feasible_subtasks(held: Held, state: GameState) -> list[Subtask]:
    out = []
    for kind in feasible_kinds(held, state):
        for tile in candidate_tiles(state, kind):
            out.append(Subtask(kind, tile))
    return out


def successor_kinds(completed: str) -> list[str]:
    """Held-item state machine: which kinds may follow a completed subtask."""
    if completed in (DROP_ONION, DELIVER_SOUP):
        return [PICK_ONION, PICK_DISH]
    if completed == PICK_ONION:
        return [DROP_ONION]
    if completed == PICK_DISH:
        return [SCOOP_SOUP]
    if completed == SCOOP_SOUP:
        return [DELIVER_SOUP]
    return [PICK_ONION, PICK_DISH]


def is_complete(subtask: Subtask, held_before: Held, held_after: Held) -> bool:
    """A subtask completes exactly when it changes the agent's held item."""
    transitions = {
        PICK_ONION: (Held.NOTHING, Held.ONION),
        PICK_DISH: (Held.NOTHING, Held.DISH),
        DROP_ONION: (Held.ONION, Held.NOTHING),
        SCOOP_SOUP: (Held.DISH, Held.SOUP),
        DELIVER_SOUP: (Held.SOUP, Held.NOTHING),
    }
    expected = transitions.get(subtask.kind)
    return expected is not None and (held_before, held_after) == expected
