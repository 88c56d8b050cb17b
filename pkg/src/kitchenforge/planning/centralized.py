"""Precomputed joint plan for both agents.

Planning happens at the subtask level: a Dijkstra search over phases, where a
phase assigns each agent one subtask (or a wait) and costs the jointly
optimal motion makespan, respecting pot cook times. The winning assignment
sequence is then compiled to low-level actions by scripting both agents
through the engine, which also resolves collisions and deadlocks, so the
recorded action sequence replays exactly.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

from .. import engine as eng
from ..engine import Action, EpisodeLog, GameState, Held, POT_CAPACITY, COOK_TIME
from ..grid import KitchenGrid, POT
from . import subtasks as st
from .motion import INFEASIBLE, MotionPlanTable, MotionGoal, _apply_move

_HOLD_AFTER = {
    st.PICK_ONION: Held.ONION,
    st.PICK_DISH: Held.DISH,
    st.DROP_ONION: Held.NOTHING,
    st.SCOOP_SOUP: Held.SOUP,
    st.DELIVER_SOUP: Held.NOTHING,
}

_KIND_BY_HELD = {
    Held.NOTHING: (st.PICK_ONION, st.PICK_DISH),
    Held.ONION: (st.DROP_ONION,),
    Held.DISH: (st.SCOOP_SOUP,),
    Held.SOUP: (st.DELIVER_SOUP,),
}


@dataclass
class CentralizedPlan:
    actions: list[tuple[Action, Action]]
    orders_delivered: int
    complete: bool
    phases: list[tuple[st.Subtask | None, st.Subtask | None]]
    log: EpisodeLog | None = None


# macro search -------------------------------------------------------------

# pots: tuple of (tile, onion_count, ready_at) sorted by tile; ready_at is the
# clock at which a full pot finishes cooking (meaningful when count == 3).
_MacroKey = tuple


def _macro_candidates(kind_options, grid, pots, orders):
    subs = []
    for kind in kind_options:
        if kind == st.PICK_ONION:
            tiles = grid.find_all("n")
        elif kind == st.PICK_DISH:
            tiles = grid.find_all("d")
        elif kind == st.DROP_ONION:
            tiles = [t for t, c, _ in pots if c < POT_CAPACITY]
        elif kind == st.SCOOP_SOUP:
            tiles = [t for t, c, _ in pots if c == POT_CAPACITY]
        elif kind == st.DELIVER_SOUP:
            tiles = grid.find_all("s")
        else:
            tiles = []
        for tile in sorted(tiles, key=lambda t: (t[1], t[0])):
            subs.append(st.Subtask(kind, tile))
    subs.append(None)  # wait this phase
    return subs


def _apply_macro(sub: st.Subtask | None, held, pots, orders, finish):
    """Effect of one completed subtask on the macro bookkeeping."""
    pots = list(pots)
    if sub is None:
        return held, pots, orders
    kind = sub.kind
    if kind == st.DROP_ONION:
        for i, (t, c, r) in enumerate(pots):
            if t == sub.tile and c < POT_CAPACITY:
                c += 1
                ready = finish + COOK_TIME if c == POT_CAPACITY else 0
                pots[i] = (t, c, ready)
                break
    elif kind == st.SCOOP_SOUP:
        for i, (t, c, r) in enumerate(pots):
            if t == sub.tile and c == POT_CAPACITY:
                pots[i] = (t, 0, 0)
                break
    elif kind == st.DELIVER_SOUP:
        orders -= 1
    return _HOLD_AFTER[kind], pots, orders


def _landing_pose(table: MotionPlanTable, pose, sub: st.Subtask | None):
    if sub is None:
        return pose
    goals = MotionGoal(sub.tile).terminal_poses(table.grid)
    best = None
    for g in sorted(goals):
        d = abs(g[0] - pose.position[0]) + abs(g[1] - pose.position[1])
        if best is None or d < best[0]:
            best = (d, g)
    if best is None:
        return pose
    g = best[1]
    return eng.AgentPose((g[0], g[1]), g[2])


def plan_subtask_schedule(
    grid: KitchenGrid,
    table: MotionPlanTable,
    state: GameState,
    horizon: int,
    node_cap: int = 20000,
):
    """Dijkstra over phase assignments; returns the phase list and whether it
    completes both orders within the horizon."""
    pots0 = tuple(
        sorted((t, p.onion_count, 0) for t, p in state.pots.items())
    )
    start = (
        (state.poses[0], state.poses[1]),
        (state.held[0], state.held[1]),
        pots0,
        state.orders_remaining,
    )
    counter = itertools.count()
    frontier = [(0.0, next(counter), start, [])]
    best_clock: dict = {}
    best_partial = (state.orders_remaining, 0.0, [])
    expanded = 0
    while frontier:
        clock, _, node, phases = heapq.heappop(frontier)
        poses, held, pots, orders = node
        key = (
            tuple((p.position, p.orientation) for p in poses),
            held,
            pots,
            orders,
        )
        if key in best_clock and best_clock[key] <= clock:
            continue
        best_clock[key] = clock
        expanded += 1
        if orders == 0:
            return phases, True
        if orders < best_partial[0] or (
            orders == best_partial[0] and clock < best_partial[1]
        ):
            best_partial = (orders, clock, phases)
        if expanded > node_cap:
            break
        opts0 = _macro_candidates(_KIND_BY_HELD[held[0]], grid, pots, orders)
        opts1 = _macro_candidates(_KIND_BY_HELD[held[1]], grid, pots, orders)
        for s0 in opts0:
            for s1 in opts1:
                if s0 is None and s1 is None:
                    continue
                if s0 is not None and s1 is not None and s0.tile == s1.tile:
                    continue  # same station, same phase: serialize instead
                goals = (
                    s0.tile if s0 is not None else None,
                    s1.tile if s1 is not None else None,
                )
                cost = table.joint_cost_fast(
                    (poses[0], poses[1]), goals, node_cap=4000
                )
                if cost == INFEASIBLE:
                    continue
                finish = clock + max(cost, 1.0)
                # Scooping waits for the cook timer.
                for s in (s0, s1):
                    if s is not None and s.kind == st.SCOOP_SOUP:
                        ready = next(
                            (r for t, c, r in pots if t == s.tile), 0
                        )
                        finish = max(finish, ready + 1)
                if finish > horizon:
                    continue
                nheld0, npots, norders = _apply_macro(
                    s0, held[0], pots, orders, finish
                )
                nheld1, npots, norders = _apply_macro(
                    s1, held[1], npots, norders, finish
                )
                nposes = (
                    _landing_pose(table, poses[0], s0),
                    _landing_pose(table, poses[1], s1),
                )
                nnode = (
                    nposes,
                    (nheld0, nheld1),
                    tuple(npots),
                    norders,
                )
                heapq.heappush(
                    frontier,
                    (finish, next(counter), nnode, phases + [(s0, s1)]),
                )
    return best_partial[2], False


# compilation through the engine -------------------------------------------


class _PhaseExecutor:
    """Scripted controller walking both agents through the phase list."""

    def __init__(self, table: MotionPlanTable, phases):
        self.table = table
        self.phases = list(phases)
        self.idx = 0
        self.done = [False, False]
        self._prev_held: list[Held] | None = None
        self._current = None

    def _phase(self):
        if self.idx >= len(self.phases):
            return None
        return self.phases[self.idx]

    def __call__(self, state: GameState) -> tuple[Action, Action]:
        phase = self._phase()
        if phase is None:
            return (Action.STAY, Action.STAY)
        if self._current is not phase:
            self._current = phase
            self.done = [phase[0] is None, phase[1] is None]
            self._prev_held = list(state.held)
        # Completion: the held item changed as the subtask dictates.
        for i in (0, 1):
            sub = phase[i]
            if sub is not None and not self.done[i]:
                if st.is_complete(sub, self._prev_held[i], state.held[i]):
                    self.done[i] = True
        self._prev_held = list(state.held)
        if all(self.done):
            self.idx += 1
            return self.__call__(state)
        actions = []
        for i in (0, 1):
            sub = phase[i]
            # Yielding is asymmetric: agent 1 routes around agent 0, while
            # agent 0 presses its optimal move. Symmetric avoidance livelocks
            # in lockstep 2-cycles that never trip the engine's unstuck check.
            avoid = state.poses[0].position if i == 1 else None
            if sub is None or self.done[i]:
                actions.append(self._yield_action(state, i))
            else:
                actions.append(
                    self.table.next_action(state.poses[i], sub.tile, avoid=avoid)
                )
        return tuple(actions)

    def _yield_action(self, state: GameState, idle: int) -> Action:
        """Step an idle agent off the working agent's interaction tiles."""
        phase = self._phase()
        active = phase[1 - idle] if phase is not None else None
        if active is None or self.done[1 - idle]:
            return Action.STAY
        stands = {
            (x, y)
            for x, y, _ in MotionGoal(active.tile).terminal_poses(state.grid)
        }
        here = state.poses[idle].position
        if here not in stands:
            return Action.STAY
        pose = (here[0], here[1], state.poses[idle].orientation)
        for action in eng.MOVE_ACTIONS:
            nxt = _apply_move(state.grid, pose, action)
            target = (nxt[0], nxt[1])
            if (
                target != here
                and target not in stands
                and target != state.poses[1 - idle].position
            ):
                return action
        return Action.STAY


def centralized_plan(
    grid: KitchenGrid,
    seed: int = 0,
    horizon: int = eng.HORIZON,
    table: MotionPlanTable | None = None,
    node_cap: int = 20000,
) -> CentralizedPlan:
    """Compute and compile a near-optimal joint plan delivering both orders."""
    table = table or MotionPlanTable(grid)
    probe = eng.init_state(grid, seed, horizon)
    phases, complete = plan_subtask_schedule(
        grid, table, probe, horizon, node_cap
    )
    executor = _PhaseExecutor(table, phases)
    log = eng.run_episode(grid, seed, executor, horizon)
    actions = [
        (Action(rec.actions[0]), Action(rec.actions[1])) for rec in log.records
    ]
    return CentralizedPlan(
        actions=actions,
        orders_delivered=len(log.delivery_times()),
        complete=complete and len(log.delivery_times()) == eng.TOTAL_ORDERS,
        phases=phases,
        log=log,
    )
