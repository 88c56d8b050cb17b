"""Deterministic two-agent cooking simulation.

Rules follow the simplified two-agent game: pick up onions one at a time,
fill a pot with three, wait 10 ticks for the soup to cook, scoop it with a
dish, and deliver it at a serve point. The episode ends when both orders are
delivered or the horizon (default 100 ticks) runs out.

Movement: a move action rotates the agent to face that direction and, when
the target tile is walkable and unoccupied, also translates it. Simultaneous
moves into the same tile cancel both translations, and agents may never swap
tiles or step into the tile the other currently occupies.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum

from .grid import (
    BLOCKING,
    DISH,
    FLOOR,
    HUMAN,
    ONION,
    POT,
    ROBOT,
    SERVE,
    KitchenGrid,
    check_solvability,
)

HORIZON = 100
COOK_TIME = 10
POT_CAPACITY = 3
TOTAL_ORDERS = 2
#: Two orders plus 99+99 time-left digits; normalizes raw scores into [0, 1].
RAW_MAX = 29999

HUMAN_IDX = 0
ROBOT_IDX = 1


class Action(str, Enum):
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"
    STAY = "stay"
    INTERACT = "interact"


MOVE_ACTIONS = (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)

DIRECTION = {
    Action.UP: (0, -1),
    Action.DOWN: (0, 1),
    Action.LEFT: (-1, 0),
    Action.RIGHT: (1, 0),
}

ORIENTATIONS = ("up", "down", "left", "right")
ORIENT_DELTA = {
    "up": (0, -1),
    "down": (0, 1),
    "left": (-1, 0),
    "right": (1, 0),
}


class Held(str, Enum):
    NOTHING = "nothing"
    ONION = "onion"
    DISH = "dish"
    SOUP = "soup"


@dataclass(frozen=True)
class AgentPose:
    position: tuple[int, int]
    orientation: str

    def facing(self) -> tuple[int, int]:
        dx, dy = ORIENT_DELTA[self.orientation]
        return (self.position[0] + dx, self.position[1] + dy)


@dataclass(frozen=True)
class PotState:
    onion_count: int = 0
    cook_timer: int = 0
    ready: bool = False


@dataclass
class GameState:
    grid: KitchenGrid
    poses: list[AgentPose]
    held: list[Held]
    pots: dict[tuple[int, int], PotState]
    orders_remaining: int
    delivery_times: list[int]
    clock: int
    rng: random.Random
    horizon: int = HORIZON

    @property
    def done(self) -> bool:
        return self.orders_remaining == 0 or self.clock >= self.horizon


@dataclass
class Event:
    """A pickup/drop/delivery attributed to one agent at one tick."""

    clock: int
    agent: int
    kind: str  # pickup_onion | pickup_dish | drop_onion | scoop_soup | deliver
    tile: tuple[int, int]


@dataclass
class TimestepRecord:
    clock: int
    actions: list[str]
    poses: list[AgentPose]
    held: list[str]
    pots: dict[tuple[int, int], PotState]
    events: list[Event]
    unstuck: bool = False


@dataclass
class EpisodeLog:
    grid: KitchenGrid
    seed: int
    records: list[TimestepRecord] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.records)

    def events(self) -> list[Event]:
        return [ev for rec in self.records for ev in rec.events]

    def delivery_times(self) -> list[int]:
        return [ev.clock for ev in self.events() if ev.kind == "deliver"]

    def to_lines(self) -> list[str]:
        """One JSON record per timestep; the replay/metrics wire format."""
        lines = []
        for rec in self.records:
            lines.append(
                json.dumps(
                    {
                        "clock": rec.clock,
                        "actions": rec.actions,
                        "poses": [
                            {"pos": list(p.position), "dir": p.orientation}
                            for p in rec.poses
                        ],
                        "held": rec.held,
                        "pots": [
                            {
                                "tile": list(t),
                                "onions": p.onion_count,
                                "timer": p.cook_timer,
                                "ready": p.ready,
                            }
                            for t, p in sorted(rec.pots.items())
                        ],
                        "events": [
                            {
                                "agent": ev.agent,
                                "kind": ev.kind,
                                "tile": list(ev.tile),
                            }
                            for ev in rec.events
                        ],
                        "unstuck": rec.unstuck,
                    },
                    separators=(",", ":"),
                )
            )
        return lines

    @staticmethod
    def record_from_line(line: str) -> TimestepRecord:
        obj = json.loads(line)
        return TimestepRecord(
            clock=obj["clock"],
            actions=obj["actions"],
            poses=[
                AgentPose(tuple(p["pos"]), p["dir"]) for p in obj["poses"]
            ],
            held=obj["held"],
            pots={
                tuple(p["tile"]): PotState(p["onions"], p["timer"], p["ready"])
                for p in obj["pots"]
            },
            events=[
                Event(obj["clock"], e["agent"], e["kind"], tuple(e["tile"]))
                for e in obj["events"]
            ],
            unstuck=obj.get("unstuck", False),
        )


class UnsolvableGridError(ValueError):
    pass


def init_state(grid: KitchenGrid, seed: int, horizon: int = HORIZON) -> GameState:
    """Place agents on their start tiles with default facing (up), empty
    hands, empty pots, two orders, clock zero."""
    report = check_solvability(grid)
    if not report.is_solvable:
        msgs = "; ".join(v.message for v in report.violations)
        raise UnsolvableGridError(f"grid is not solvable: {msgs}")
    (hx, hy) = grid.find_all(HUMAN)[0]
    (rx, ry) = grid.find_all(ROBOT)[0]
    pots = {loc: PotState() for loc in grid.find_all(POT)}
    return GameState(
        grid=grid,
        poses=[AgentPose((hx, hy), "up"), AgentPose((rx, ry), "up")],
        held=[Held.NOTHING, Held.NOTHING],
        pots=pots,
        orders_remaining=TOTAL_ORDERS,
        delivery_times=[],
        clock=0,
        rng=random.Random(seed),
        horizon=horizon,
    )


def is_walkable(grid: KitchenGrid, pos: tuple[int, int]) -> bool:
    x, y = pos
    return grid.in_bounds(x, y) and grid.get(x, y) not in BLOCKING


def _resolve_moves(
    grid: KitchenGrid, poses: list[AgentPose], actions: list[Action]
) -> list[AgentPose]:
    proposals = []
    for pose, action in zip(poses, actions):
        if action in DIRECTION:
            orient = action.value
            dx, dy = DIRECTION[action]
            target = (pose.position[0] + dx, pose.position[1] + dy)
            if not is_walkable(grid, target):
                target = pose.position
            proposals.append(AgentPose(target, orient))
        else:
            proposals.append(pose)

    p0, p1 = proposals
    # No stepping into the tile the other agent currently occupies.
    if p0.position == poses[1].position:
        p0 = AgentPose(poses[0].position, p0.orientation)
    if p1.position == poses[0].position:
        p1 = AgentPose(poses[1].position, p1.orientation)
    # Simultaneous move into the same tile cancels both translations.
    if p0.position == p1.position:
        p0 = AgentPose(poses[0].position, p0.orientation)
        p1 = AgentPose(poses[1].position, p1.orientation)
    return [p0, p1]


def _interact(state: GameState, agent: int, events: list[Event]) -> None:
    pose = state.poses[agent]
    target = pose.facing()
    if not state.grid.in_bounds(*target):
        return
    tile = state.grid.get(*target)
    held = state.held[agent]

    if tile == ONION and held == Held.NOTHING:
        state.held[agent] = Held.ONION
        events.append(Event(state.clock, agent, "pickup_onion", target))
    elif tile == DISH and held == Held.NOTHING:
        state.held[agent] = Held.DISH
        events.append(Event(state.clock, agent, "pickup_dish", target))
    elif tile == POT:
        pot = state.pots[target]
        if held == Held.ONION and pot.onion_count < POT_CAPACITY and not pot.ready:
            count = pot.onion_count + 1
            timer = COOK_TIME if count == POT_CAPACITY else 0
            state.pots[target] = PotState(count, timer, False)
            state.held[agent] = Held.NOTHING
            events.append(Event(state.clock, agent, "drop_onion", target))
        elif held == Held.DISH and pot.ready:
            state.pots[target] = PotState()
            state.held[agent] = Held.SOUP
            events.append(Event(state.clock, agent, "scoop_soup", target))
    elif tile == SERVE and held == Held.SOUP and state.orders_remaining > 0:
        state.held[agent] = Held.NOTHING
        state.orders_remaining -= 1
        state.delivery_times.append(state.clock + 1)
        events.append(Event(state.clock, agent, "deliver", target))


def step(
    state: GameState, human_action: Action, robot_action: Action
) -> tuple[GameState, list[Event]]:
    """Advance the simulation one tick. Mutates and returns `state`.

    Invalid interacts are no-ops; pot timers tick unconditionally.
    """
    if state.clock >= state.horizon:
        raise ValueError("episode horizon reached")
    actions = [human_action, robot_action]
    events: list[Event] = []

    state.poses = _resolve_moves(state.grid, state.poses, actions)
    for agent, action in enumerate(actions):
        if action == Action.INTERACT:
            _interact(state, agent, events)

    for loc, pot in state.pots.items():
        if pot.onion_count == POT_CAPACITY and pot.cook_timer > 0:
            timer = pot.cook_timer - 1
            state.pots[loc] = PotState(POT_CAPACITY, timer, timer == 0)

    state.clock += 1
    return state, events


def detect_stuck(records: list[TimestepRecord]) -> bool:
    """True iff both agents' poses are unchanged between the last two ticks."""
    if len(records) < 2:
        return False
    a, b = records[-2], records[-1]
    return all(pa == pb for pa, pb in zip(a.poses, b.poses))


def auto_unstuck(state: GameState) -> tuple[Action, Action]:
    """Uniformly random movement actions for both agents from the episode RNG."""
    return (
        state.rng.choice(MOVE_ACTIONS),
        state.rng.choice(MOVE_ACTIONS),
    )


def performance(
    delivery_times: list[int], orders_delivered: int, horizon: int = HORIZON
) -> float:
    """Rank-based episode score, normalized to [0, 1].

    Raw digits: ten-thousands = orders delivered; thousands/hundreds = ticks
    left after the second delivery; tens/ones = ticks left after the first.
    """
    if orders_delivered != len(delivery_times) or orders_delivered > TOTAL_ORDERS:
        raise ValueError("orders_delivered must match delivery_times")
    if any(t > horizon for t in delivery_times):
        raise ValueError("delivery time beyond horizon")
    times = sorted(delivery_times)
    raw = 10000 * orders_delivered
    if orders_delivered >= 1:
        raw += horizon - times[0]
    if orders_delivered == TOTAL_ORDERS:
        raw += 100 * (horizon - times[1])
    return raw / RAW_MAX


def raw_performance(
    delivery_times: list[int], orders_delivered: int, horizon: int = HORIZON
) -> int:
    return round(
        performance(delivery_times, orders_delivered, horizon) * RAW_MAX
    )


def run_episode(
    grid: KitchenGrid,
    seed: int,
    controller,
    horizon: int = HORIZON,
) -> EpisodeLog:
    """Run one episode under `controller(state) -> (human_action, robot_action)`.

    Applies the auto-unstuck rule: once both agents repeat their poses for two
    successive ticks, random movement actions replace planner actions until
    the deadlock clears.
    """
    state = init_state(grid, seed, horizon)
    log = EpisodeLog(grid, seed)
    unstuck_mode = False
    prev_poses = [p for p in state.poses]
    while not state.done:
        if unstuck_mode:
            actions = auto_unstuck(state)
        else:
            actions = controller(state)
        state, events = step(state, *actions)
        log.records.append(
            TimestepRecord(
                clock=state.clock,
                actions=[a.value for a in actions],
                poses=list(state.poses),
                held=[h.value for h in state.held],
                pots=dict(state.pots),
                events=events,
                unstuck=unstuck_mode,
            )
        )
        stuck_now = state.poses == prev_poses
        if unstuck_mode and not stuck_now:
            unstuck_mode = False
        elif not unstuck_mode and detect_stuck(log.records):
            unstuck_mode = True
        prev_poses = list(state.poses)
    return log
