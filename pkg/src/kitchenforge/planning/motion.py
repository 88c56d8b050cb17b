"""Single-agent and joint motion planning over the kitchen pose graph.

A pose is (x, y, orientation). Every move action costs one tick and either
rotates in place (blocked target) or rotates-and-translates. A motion goal is
"stand on a walkable tile adjacent to the station, facing it" and the reported
cost includes the final interact tick.

Joint plans search the product space of both agents' poses under the engine's
collision rules (no shared tile, no swaps, simultaneous same-target moves
cancel). They are optimal in makespan: the tick at which both agents have
completed their goals, with `max(single costs)` as the admissible A* heuristic.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field

from .. import engine
from ..engine import Action, AgentPose, MOVE_ACTIONS, ORIENTATIONS, is_walkable
from ..grid import BLOCKING, KitchenGrid

INFEASIBLE = float("inf")


class _NodeCapExceeded(Exception):
    pass

Pose = tuple[int, int, str]  # (x, y, orientation)


def _pose(p: AgentPose) -> Pose:
    return (p.position[0], p.position[1], p.orientation)


def _apply_move(grid: KitchenGrid, pose: Pose, action: Action) -> Pose:
    x, y, _ = pose
    if action == Action.STAY or action == Action.INTERACT:
        return pose
    dx, dy = engine.DIRECTION[action]
    nx, ny = x + dx, y + dy
    if not is_walkable(grid, (nx, ny)):
        return (x, y, action.value)
    return (nx, ny, action.value)


@dataclass(frozen=True)
class MotionGoal:
    """Stand adjacent to `tile` facing it (the interact posture).

    For walkable goal tiles the goal is simply standing on the tile, any
    orientation; this covers "reach the robot/floor" style queries.
    """

    tile: tuple[int, int]

    def terminal_poses(self, grid: KitchenGrid) -> set[Pose]:
        tx, ty = self.tile
        if is_walkable(grid, (tx, ty)):
            return {(tx, ty, o) for o in ORIENTATIONS}
        poses = set()
        for action, (dx, dy) in engine.DIRECTION.items():
            ax, ay = tx - dx, ty - dy
            if is_walkable(grid, (ax, ay)):
                poses.add((ax, ay, action.value))
        return poses


class MotionPlanTable:
    """Per-grid cache of optimal single-agent costs and joint plans."""

    def __init__(self, grid: KitchenGrid):
        self.grid = grid
        self._single: dict[tuple[int, int], dict[Pose, float]] = {}
        self._joint: dict = {}

    # -- single agent ------------------------------------------------------

    def cost_to_tile(self, pose: Pose | AgentPose, tile: tuple[int, int]) -> float:
        """Optimal ticks from `pose` to interacting with `tile` (inclusive of
        the interact tick for station tiles)."""
        if isinstance(pose, AgentPose):
            pose = _pose(pose)
        table = self._single_table(tile)
        return table.get(pose, INFEASIBLE)

    def _single_table(self, tile: tuple[int, int]) -> dict[Pose, float]:
        if tile not in self._single:
            self._single[tile] = self._backward_bfs(MotionGoal(tile))
        return self._single[tile]

    def _backward_bfs(self, goal: MotionGoal) -> dict[Pose, float]:
        grid = self.grid
        station = grid.get(*goal.tile) in BLOCKING
        base = 1.0 if station else 0.0  # final interact tick
        dist: dict[Pose, float] = {}
        queue: deque[Pose] = deque()
        for p in goal.terminal_poses(grid):
            dist[p] = base
            queue.append(p)
        # Predecessor expansion over the forward move relation.
        preds = self._predecessors()
        while queue:
            pose = queue.popleft()
            d = dist[pose]
            for prev in preds.get(pose, ()):
                if prev not in dist:
                    dist[prev] = d + 1
                    queue.append(prev)
        return dist

    def _predecessors(self) -> dict[Pose, list[Pose]]:
        if not hasattr(self, "_preds"):
            preds: dict[Pose, list[Pose]] = {}
            grid = self.grid
            for y in range(grid.height):
                for x in range(grid.width):
                    if not is_walkable(grid, (x, y)):
                        continue
                    for o in ORIENTATIONS:
                        pose = (x, y, o)
                        for action in MOVE_ACTIONS:
                            nxt = _apply_move(grid, pose, action)
                            if nxt != pose:
                                preds.setdefault(nxt, []).append(pose)
            self._preds = preds
        return self._preds

    def next_action(
        self,
        pose: Pose | AgentPose,
        tile: tuple[int, int],
        avoid: tuple[int, int] | None = None,
    ) -> Action:
        """First action of the optimal single-agent path to `tile`.

        Interacts when already in the interact posture; stays when the goal is
        unreachable. Ties break in fixed action order for determinism. With
        `avoid` set, moves landing on that tile are dispreferred: an equal-cost
        detour is taken when one exists, otherwise the blocked move is issued
        anyway (the engine turns it into a rotation, i.e. waiting in place).
        """
        if isinstance(pose, AgentPose):
            pose = _pose(pose)
        if pose in self._goal_poses(tile):
            if self.grid.get(*tile) in BLOCKING:
                return Action.INTERACT
            return Action.STAY
        here = self.cost_to_tile(pose, tile)
        if here == INFEASIBLE:
            return Action.STAY
        candidates = []
        for rank, action in enumerate(MOVE_ACTIONS):
            nxt = _apply_move(self.grid, pose, action)
            c = self.cost_to_tile(nxt, tile)
            blocked = avoid is not None and (nxt[0], nxt[1]) == avoid
            candidates.append((c, rank, blocked, action, nxt))
        improving = [entry for entry in candidates if entry[0] < here]
        free_improving = [entry for entry in improving if not entry[2]]
        if free_improving:
            return min(free_improving)[3]
        if not improving:
            return Action.STAY
        # The only optimal step is occupied; sidestep through an equal-cost
        # tile when that opens an unoccupied path, else press the move and
        # wait in place.
        for c, _, blocked, action, ns in sorted(candidates):
            if c != here or blocked:
                continue
            opens = any(
                self.cost_to_tile(_apply_move(self.grid, ns, a2), tile) < here
                and _apply_move(self.grid, ns, a2)[:2] != avoid
                for a2 in MOVE_ACTIONS
            )
            if opens:
                return action
        return min(improving)[3]

    # -- joint -------------------------------------------------------------

    def joint_plan(
        self,
        poses: tuple[Pose | AgentPose, Pose | AgentPose],
        goals: tuple[tuple[int, int] | None, tuple[int, int] | None],
    ) -> "JointPlan":
        """Jointly optimal (makespan) collision-free plan.

        A `None` goal means the agent has nothing to do; it may still move to
        yield. An agent that has completed its goal keeps moving freely (the
        makespan objective only requires both goals to be met eventually)."""
        start = tuple(_pose(p) if isinstance(p, AgentPose) else p for p in poses)
        key = (start, goals)
        if key not in self._joint:
            self._joint[key] = self._joint_search(start, goals)
        return self._joint[key]

    def joint_cost(self, poses, goals) -> float:
        return self.joint_plan(poses, goals).cost

    def joint_cost_fast(self, poses, goals, node_cap: int = 20000) -> float:
        """Joint makespan with a cheap, usually-exact fast path.

        Greedily executes both single-agent optimal paths under the collision
        rules with the robot yielding (the same discipline the controllers
        use). Meeting the `max(single costs)` lower bound proves exactness;
        finishing within a small slack returns the achieved makespan (a tight
        upper bound — the planners use these values for cost ranking, not
        execution). Only tangled cases fall through to the exact product-space
        search; past `node_cap` expansions a conservative sequential estimate
        (sum of single costs plus a yield penalty) stands in.
        """
        start = tuple(_pose(p) if isinstance(p, AgentPose) else p for p in poses)
        key = ("fast", start, goals)
        if key in self._joint:
            return self._joint[key]
        singles = []
        extra = 0.0
        for i in (0, 1):
            if goals[i] is None:
                singles.append(0.0)
                continue
            c = self.cost_to_tile(start[i], goals[i])
            if c == INFEASIBLE:
                self._joint[key] = INFEASIBLE
                return INFEASIBLE
            if self.grid.get(*goals[i]) in BLOCKING:
                c -= 1.0
                extra = 1.0
            singles.append(c)
        span = self._greedy_makespan(start, goals, int(max(singles)) + 4)
        if span is not None:
            cost = float(span) + extra
        else:
            plan = self._joint_search_capped(start, goals, node_cap)
            cost = plan.cost if plan is not None else sum(singles) + extra + 2.0
        self._joint[key] = cost
        return cost

    def _greedy_makespan(self, start, goals, budget: int) -> int | None:
        """Ticks until both goals met when each agent follows its own optimal
        path and the robot side-steps the human; None if the budget runs out."""
        poses = [AgentPose((p[0], p[1]), p[2]) for p in start]
        done = [
            goals[i] is None or _pose(poses[i]) in self._goal_poses(goals[i])
            for i in (0, 1)
        ]
        for tick in range(budget):
            if all(done):
                return tick
            actions = []
            for i in (0, 1):
                if done[i]:
                    actions.append(Action.STAY)
                else:
                    avoid = poses[1 - i].position if i == 1 else None
                    a = self.next_action(poses[i], goals[i], avoid=avoid)
                    actions.append(Action.STAY if a == Action.INTERACT else a)
            poses = engine._resolve_moves(self.grid, poses, actions)
            for i in (0, 1):
                if not done[i] and _pose(poses[i]) in self._goal_poses(goals[i]):
                    done[i] = True
        return budget if all(done) else None

    def _joint_search_capped(self, start, goals, node_cap: int):
        try:
            return self._joint_search(start, goals, node_cap=node_cap)
        except _NodeCapExceeded:
            return None

    def _heuristic(self, state, goals, done) -> float:
        # Movement-only lower bound; the closing interact tick is added once
        # at reconstruction, so including it here would be inconsistent.
        h = 0.0
        for i in (0, 1):
            if goals[i] is not None and not done[i]:
                c = self.cost_to_tile(state[i], goals[i])
                if c == INFEASIBLE:
                    return INFEASIBLE
                if self.grid.get(*goals[i]) in BLOCKING:
                    c -= 1.0
                h = max(h, c)
        return h

    def _move_lut(self) -> dict:
        """(pose, action) -> pose for every walkable pose; mirrors the
        engine's single-agent move rule (blocked target rotates in place)."""
        if not hasattr(self, "_mlut"):
            lut = {}
            grid = self.grid
            for y in range(grid.height):
                for x in range(grid.width):
                    if not is_walkable(grid, (x, y)):
                        continue
                    for o in ORIENTATIONS:
                        pose = (x, y, o)
                        lut[(pose, Action.STAY)] = pose
                        for action in MOVE_ACTIONS:
                            lut[(pose, action)] = _apply_move(grid, pose, action)
            self._mlut = lut
        return self._mlut

    def _joint_search(self, start, goals, node_cap: int | None = None) -> "JointPlan":
        expanded = 0
        lut = self._move_lut()
        gs0 = self._goal_poses(goals[0]) if goals[0] is not None else frozenset()
        gs1 = self._goal_poses(goals[1]) if goals[1] is not None else frozenset()
        start_done = (
            goals[0] is None or start[0] in gs0,
            goals[1] is None or start[1] in gs1,
        )
        init = (start, start_done)
        h0 = self._heuristic(start, goals, start_done)
        if h0 == INFEASIBLE:
            return JointPlan(INFEASIBLE, [], [])
        frontier = [(h0, 0, 0.0, init, None, None)]
        came: dict = {}
        best: dict = {init: 0.0}
        counter = itertools.count(1)
        while frontier:
            f, _, g, node, parent, via = heapq.heappop(frontier)
            if node in came:
                continue
            came[node] = (parent, via)
            expanded += 1
            if node_cap is not None and expanded > node_cap:
                raise _NodeCapExceeded
            state, done = node
            if done[0] and done[1]:
                return self._reconstruct(came, node, g, goals)
            s0, s1 = state
            pos0 = (s0[0], s0[1])
            pos1 = (s1[0], s1[1])
            ng = g + 1
            for a0 in self._agent_actions(done[0]):
                m0 = lut[(s0, a0)]
                for a1 in self._agent_actions(done[1]):
                    n0 = m0
                    n1 = lut[(s1, a1)]
                    # Engine collision rules: no stepping into the tile the
                    # other agent currently occupies, then simultaneous
                    # same-tile moves cancel both translations.
                    if (n0[0], n0[1]) == pos1:
                        n0 = (s0[0], s0[1], n0[2])
                    if (n1[0], n1[1]) == pos0:
                        n1 = (s1[0], s1[1], n1[2])
                    if (n0[0], n0[1]) == (n1[0], n1[1]):
                        n0 = (s0[0], s0[1], n0[2])
                        n1 = (s1[0], s1[1], n1[2])
                    ndone = (done[0] or n0 in gs0, done[1] or n1 in gs1)
                    nnode = ((n0, n1), ndone)
                    if ng < best.get(nnode, INFEASIBLE):
                        best[nnode] = ng
                        h = self._heuristic((n0, n1), goals, ndone)
                        if h == INFEASIBLE:
                            continue
                        heapq.heappush(
                            frontier,
                            (ng + h, next(counter), ng, nnode, node, (a0, a1)),
                        )
        return JointPlan(INFEASIBLE, [], [])

    def _goal_poses(self, goal: tuple[int, int]) -> set[Pose]:
        key = ("goalposes", goal)
        if key not in self._joint:
            self._joint[key] = MotionGoal(goal).terminal_poses(self.grid)
        return self._joint[key]

    @staticmethod
    def _agent_actions(done: bool):
        # A finished agent may still yield; interact is only issued at goal.
        if done:
            return (Action.STAY,) + MOVE_ACTIONS
        return MOVE_ACTIONS + (Action.STAY,)

    def _reconstruct(self, came, node, cost, goals) -> "JointPlan":
        steps = []
        cur = node
        while came[cur][0] is not None:
            parent, via = came[cur]
            steps.append(via)
            cur = parent
        steps.reverse()
        # Station goals need a closing interact; walkable goals do not.
        extra = 0.0
        interact_mask = []
        for g in goals:
            needs = g is not None and self.grid.get(*g) in BLOCKING
            interact_mask.append(needs)
            if needs:
                extra = 1.0
        actions = [list(pair) for pair in steps]
        if extra:
            actions.append(
                [
                    Action.INTERACT if interact_mask[i] else Action.STAY
                    for i in (0, 1)
                ]
            )
        return JointPlan(cost + extra, actions, list(goals))


@dataclass
class JointPlan:
    cost: float
    actions: list[list[Action]]  # per tick: [human_action, robot_action]
    goals: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.cost != INFEASIBLE


def build_motion_table(grid: KitchenGrid) -> MotionPlanTable:
    return MotionPlanTable(grid)
