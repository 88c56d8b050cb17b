"""Rule-based human models: myopic priority planner and its noisy variant.

The myopic human selects the highest-priority feasible subtask from the world
state, walks the single-agent optimal path to it ignoring the robot, and only
reconsiders when the subtask completes or becomes infeasible. Priorities,
highest first: deliver a held soup, scoop a cooked pot with a held dish, drop
a held onion into a non-full pot, fetch a dish when a pot is filling-complete,
fetch an onion. Holding an item with nowhere to place it sends the human to
the nearest pot to wait.
"""

from __future__ import annotations

from ..engine import Action, GameState, Held, POT_CAPACITY
from ..grid import POT
from . import subtasks as st
from .motion import INFEASIBLE, MotionPlanTable


class MyopicHuman:
    """Deterministic priority-rule human controller for agent index 0."""

    def __init__(self, table: MotionPlanTable, agent: int = 0):
        self.table = table
        self.agent = agent
        self.current: st.Subtask | None = None
        self._last_held: Held | None = None

    def _priority_kinds(self, held: Held, state: GameState) -> list[str]:
        pots_full = any(
            p.onion_count == POT_CAPACITY for p in state.pots.values()
        )
        pots_accepting = any(
            p.onion_count < POT_CAPACITY for p in state.pots.values()
        )
        if held == Held.SOUP:
            return [st.DELIVER_SOUP]
        if held == Held.DISH:
            return [st.SCOOP_SOUP] if pots_full else [st.WAIT]
        if held == Held.ONION:
            return [st.DROP_ONION] if pots_accepting else [st.WAIT]
        kinds = []
        if pots_full:
            kinds.append(st.PICK_DISH)
        kinds.append(st.PICK_ONION)
        return kinds

    def _nearest(self, state: GameState, kind: str) -> st.Subtask | None:
        pose = state.poses[self.agent]
        if kind == st.WAIT:
            # Nowhere to place the held item: walk to the nearest pot and wait.
            tiles = sorted(state.grid.find_all(POT), key=lambda t: (t[1], t[0]))
        else:
            tiles = st.candidate_tiles(state, kind)
        best = None
        for tile in tiles:
            c = self.table.cost_to_tile(pose, tile)
            if c == INFEASIBLE:
                continue
            if best is None or c < best[0]:
                best = (c, tile)
        if best is None:
            return None
        return st.Subtask(kind, best[1])

    def _select(self, state: GameState) -> st.Subtask | None:
        held = state.held[self.agent]
        for kind in self._priority_kinds(held, state):
            chosen = self._nearest(state, kind)
            if chosen is not None:
                return chosen
        return None

    def _still_valid(self, state: GameState) -> bool:
        cur = self.current
        if cur is None:
            return False
        held = state.held[self.agent]
        if cur.kind == st.WAIT:
            # Leave the waiting loop as soon as a real subtask opens up.
            return self._priority_kinds(held, state) == [st.WAIT]
        if cur.kind not in self._priority_kinds(held, state):
            return False
        return cur.tile in st.candidate_tiles(state, cur.kind)

    def subtask(self, state: GameState) -> st.Subtask | None:
        held = state.held[self.agent]
        if self._last_held is not None and held != self._last_held:
            self.current = None  # completed something; re-select
        self._last_held = held
        if not self._still_valid(state):
            self.current = self._select(state)
        return self.current

    def action(self, state: GameState) -> Action:
        if state.orders_remaining == 0:
            return Action.STAY
        cur = self.subtask(state)
        if cur is None:
            return Action.STAY
        pose = state.poses[self.agent]
        if cur.kind == st.WAIT:
            move = self.table.next_action(pose, cur.tile)
            return Action.STAY if move == Action.INTERACT else move
        return self.table.next_action(pose, cur.tile)


class EpsilonMyopicHuman:
    """Myopic human that acts uniformly at random with probability epsilon."""

    def __init__(self, table: MotionPlanTable, epsilon: float, agent: int = 0):
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        self.inner = MyopicHuman(table, agent)
        self.epsilon = epsilon

    def action(self, state: GameState) -> Action:
        planned = self.inner.action(state)
        if self.epsilon > 0 and state.rng.random() < self.epsilon:
            return state.rng.choice(list(Action))
        return planned
