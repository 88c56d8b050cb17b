"""Planners: motion tables, myopic humans, centralized schedules, QMDP."""

from __future__ import annotations

import random
from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from kitchenforge import engine as eng
from kitchenforge import planning as pl
from kitchenforge.engine import Action, Held
from kitchenforge.grid import BLOCKING, parse_grid
from kitchenforge.planning import subtasks as sub
from kitchenforge.planning.motion import INFEASIBLE, MotionPlanTable
from kitchenforge.planning.qmdp import (
    BeliefState,
    QmdpModel,
    QmdpRobotController,
    initial_belief,
    mdp_robot,
    qmdp_robot,
    qmdp_update_belief,
)
from .conftest import MID_KITCHEN, TINY_KITCHEN, random_grid

# Long corridor: the onion sits far right, the dish far left, so walking
# toward one strictly walks away from the other (used by the belief tests).
HALLWAY = "ccccncc\ndheeerc\nccpsccc"

# Independent movement convention for the oracle below.
_DELTAS = {"up": (0, -1), "down": (0, 1), "left": (-1, 0), "right": (1, 0)}


def _walkable(grid, tile):
    x, y = tile
    return grid.in_bounds(x, y) and grid.get(x, y) not in BLOCKING


def _oracle_cost(grid, start, tile):
    """Forward BFS over (x, y, orientation) with the engine's move rule,
    written from scratch: blocked targets rotate in place, station goals
    need an adjacent facing pose plus one interact tick."""
    if _walkable(grid, tile):
        goal = {(tile[0], tile[1], o) for o in _DELTAS}
        base = 0
    else:
        goal = set()
        for o, (dx, dy) in _DELTAS.items():
            adj = (tile[0] - dx, tile[1] - dy)
            if _walkable(grid, adj):
                goal.add((adj[0], adj[1], o))
        base = 1
    if start in goal:
        return float(base)
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        (x, y, _), d = queue.popleft()
        for o, (dx, dy) in _DELTAS.items():
            nx, ny = x + dx, y + dy
            nxt = (nx, ny, o) if _walkable(grid, (nx, ny)) else (x, y, o)
            if nxt in seen:
                continue
            if nxt in goal:
                return float(d + 1 + base)
            seen.add(nxt)
            queue.append((nxt, d + 1))
    return INFEASIBLE


class TestMotionTable:
    @pytest.mark.parametrize("text", [TINY_KITCHEN, MID_KITCHEN, HALLWAY])
    def test_costs_match_bfs_oracle(self, text):
        grid = parse_grid(text)
        table = MotionPlanTable(grid)
        tiles = [
            (x, y)
            for y in range(grid.height)
            for x in range(grid.width)
            if grid.get(x, y) in "nsdp" or _walkable(grid, (x, y))
        ]
        for tile in tiles:
            for y in range(grid.height):
                for x in range(grid.width):
                    if not _walkable(grid, (x, y)):
                        continue
                    for o in _DELTAS:
                        pose = (x, y, o)
                        assert table.cost_to_tile(pose, tile) == _oracle_cost(
                            grid, pose, tile
                        ), (tile, pose)

    @given(
        st.builds(
            lambda w, h, seed: random_grid(random.Random(seed), w, h),
            st.integers(4, 7),
            st.integers(4, 6),
            st.integers(0, 5_000),
        )
    )
    @settings(max_examples=30, deadline=None)
    def test_costs_match_oracle_random_grids(self, grid):
        table = MotionPlanTable(grid)
        rng = random.Random(0)
        walk = [
            (x, y)
            for y in range(grid.height)
            for x in range(grid.width)
            if _walkable(grid, (x, y))
        ]
        if not walk:
            return
        for _ in range(5):
            x, y = rng.choice(walk)
            pose = (x, y, rng.choice(list(_DELTAS)))
            tile = (rng.randrange(grid.width), rng.randrange(grid.height))
            assert table.cost_to_tile(pose, tile) == _oracle_cost(grid, pose, tile)

    def test_next_action_descends_cost(self):
        grid = parse_grid(MID_KITCHEN)
        table = MotionPlanTable(grid)
        pose = (1, 1, "up")
        tile = (6, 4)  # far pot
        cost = table.cost_to_tile(pose, tile)
        while cost > 1.0:
            action = table.next_action(pose, tile)
            assert action in (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)
            from kitchenforge.planning.motion import _apply_move

            pose = _apply_move(grid, pose, action)
            nxt = table.cost_to_tile(pose, tile)
            assert nxt == cost - 1.0
            cost = nxt
        assert table.next_action(pose, tile) == Action.INTERACT

    def test_unreachable_is_infeasible(self):
        grid = parse_grid("ccccc\nchcnc\nccccc\ncersc\nccdpc")
        table = MotionPlanTable(grid)
        assert table.cost_to_tile((1, 1, "up"), (3, 1)) == INFEASIBLE


class TestJointPlanning:
    def test_joint_cost_at_least_max_single(self):
        grid = parse_grid(MID_KITCHEN)
        table = MotionPlanTable(grid)
        start = ((1, 1, "up"), (6, 3, "up"))
        goals = ((3, 0), (6, 4))
        singles = [table.cost_to_tile(start[i], goals[i]) for i in (0, 1)]
        exact = table.joint_cost(start, goals)
        fast = table.joint_cost_fast(start, goals)
        assert exact >= max(singles)
        assert fast >= exact  # fast path is exact or a tight upper bound

    def test_fast_matches_exact_on_untangled_case(self):
        grid = parse_grid(MID_KITCHEN)
        table = MotionPlanTable(grid)
        start = ((1, 1, "up"), (6, 3, "up"))
        goals = ((1, 4), (6, 4))  # opposite corners, no interference
        assert table.joint_cost_fast(start, goals) == table.joint_cost(start, goals)

    def test_none_goal_costs_other_agent_only(self):
        grid = parse_grid(MID_KITCHEN)
        table = MotionPlanTable(grid)
        start = ((1, 1, "up"), (6, 3, "up"))
        solo = table.cost_to_tile(start[0], (3, 0))
        assert table.joint_cost_fast(start, ((3, 0), None)) == solo

    def test_infeasible_goal_propagates(self):
        grid = parse_grid("ccccc\nchcnc\nccccc\ncersc\nccdpc")
        table = MotionPlanTable(grid)
        start = ((1, 1, "up"), (2, 3, "up"))
        assert table.joint_cost_fast(start, ((3, 1), None)) == INFEASIBLE


class TestMyopicHuman:
    def test_solo_human_delivers_both_orders(self):
        grid = parse_grid(MID_KITCHEN)
        human = pl.MyopicHuman(MotionPlanTable(grid))
        log = eng.run_episode(grid, 0, lambda s: (human.action(s), Action.STAY))
        assert len(log.delivery_times()) == eng.TOTAL_ORDERS

    def test_prefers_onion_until_pot_full(self):
        grid = parse_grid(HALLWAY)
        human = pl.MyopicHuman(MotionPlanTable(grid))
        state = eng.init_state(grid, 0)
        chosen = human.subtask(state)
        # The dish is one step away but useless while the pot is empty.
        assert chosen.kind == sub.PICK_ONION

    def test_epsilon_zero_matches_deterministic(self):
        grid = parse_grid(MID_KITCHEN)
        table = MotionPlanTable(grid)
        a = pl.MyopicHuman(table)
        b = pl.EpsilonMyopicHuman(table, 0.0)
        state = eng.init_state(grid, 5)
        for _ in range(30):
            ha, hb = a.action(state), b.action(state)
            assert ha == hb
            state, _ = eng.step(state, ha, Action.STAY)

    def test_epsilon_validated(self):
        table = MotionPlanTable(parse_grid(TINY_KITCHEN))
        with pytest.raises(ValueError):
            pl.EpsilonMyopicHuman(table, 1.5)


class TestCentralized:
    def test_completes_both_orders(self):
        grid = parse_grid(MID_KITCHEN)
        plan = pl.centralized_plan(grid, seed=0)
        assert plan.complete
        assert plan.orders_delivered == eng.TOTAL_ORDERS
        assert len(plan.log.delivery_times()) == eng.TOTAL_ORDERS

    def test_deterministic_per_seed(self):
        grid = parse_grid(MID_KITCHEN)
        a = pl.centralized_plan(grid, seed=3)
        b = pl.centralized_plan(grid, seed=3)
        assert a.actions == b.actions

    def test_no_faster_than_solo_human(self):
        # Two cooks are never slower than the myopic human alone.
        grid = parse_grid(MID_KITCHEN)
        human = pl.MyopicHuman(MotionPlanTable(grid))
        solo = eng.run_episode(grid, 0, lambda s: (human.action(s), Action.STAY))
        plan = pl.centralized_plan(grid, seed=0)
        assert plan.log.delivery_times()[-1] <= solo.delivery_times()[-1]


def _sample_states(grid, count, seed):
    """Random mid-episode states from an ε-noisy rollout."""
    table = MotionPlanTable(grid)
    human = pl.EpsilonMyopicHuman(table, 0.3)
    rng = random.Random(seed)
    states = []
    state = eng.init_state(grid, seed)
    while len(states) < count:
        if state.done or state.orders_remaining == 0:
            state = eng.init_state(grid, rng.randrange(10_000))
            human = pl.EpsilonMyopicHuman(table, 0.3)
        ha = human.action(state)
        ra = rng.choice(list(Action))
        state, _ = eng.step(state, ha, ra)
        if not state.done and state.orders_remaining > 0:
            states.append(state)
    return states


class TestQmdp:
    def test_belief_normalization(self):
        b = BeliefState({sub.Subtask(sub.PICK_ONION, (1, 0)): 2.0,
                         sub.Subtask(sub.PICK_DISH, (0, 1)): 6.0})
        n = b.normalized()
        assert abs(n.total() - 1.0) < 1e-9
        assert abs(n.probs[sub.Subtask(sub.PICK_ONION, (1, 0))] - 0.25) < 1e-9

    def test_degenerate_belief_rejected(self):
        with pytest.raises(ValueError):
            BeliefState({sub.Subtask(sub.PICK_ONION, (1, 0)): 0.0}).normalized()

    def test_update_stays_normalized(self):
        grid = parse_grid(HALLWAY)
        table = MotionPlanTable(grid)
        model = QmdpModel(table, num_pots=1)
        state = eng.init_state(grid, 0)
        belief = initial_belief(state)
        prev = (1, 1, "up")
        state, _ = eng.step(state, Action.RIGHT, Action.STAY)
        belief = qmdp_update_belief(model, belief, state, prev, (2, 1, "right"))
        assert abs(belief.total() - 1.0) < 1e-9

    def test_collapsed_belief_matches_mdp_choice(self):
        grid = parse_grid(MID_KITCHEN)
        table = MotionPlanTable(grid)
        model = QmdpModel(table, num_pots=2, joint_node_cap=1000)
        human = pl.MyopicHuman(table)
        for state in _sample_states(grid, 20, seed=11):
            truth = human.subtask(state)
            if truth is None:
                continue
            collapsed = qmdp_robot(model, state, BeliefState({truth: 1.0}))
            assert collapsed == mdp_robot(model, state, truth)

    def test_belief_concentrates_on_true_subtask(self):
        # Three optimal human steps toward the far onion, each strictly
        # raising its belief mass (the dish lies in the opposite direction).
        grid = parse_grid(HALLWAY)
        table = MotionPlanTable(grid)
        model = QmdpModel(table, num_pots=1)
        human = pl.MyopicHuman(table)
        state = eng.init_state(grid, 0)
        truth = human.subtask(state)
        assert truth.kind == sub.PICK_ONION
        belief = initial_belief(state)
        prob = belief.probs[truth]
        for _ in range(3):
            prev = pl.motion._pose(state.poses[0])
            action = human.action(state)
            state, _ = eng.step(state, action, Action.STAY)
            new = pl.motion._pose(state.poses[0])
            belief = qmdp_update_belief(model, belief, state, prev, new)
            assert belief.probs[truth] > prob
            prob = belief.probs[truth]

    def test_controller_full_episode(self):
        grid = parse_grid(MID_KITCHEN)
        table = MotionPlanTable(grid)
        human = pl.MyopicHuman(table)
        robot = QmdpRobotController(QmdpModel(table, num_pots=2, joint_node_cap=1000))
        log = eng.run_episode(grid, 0, lambda s: (human.action(s), robot.action(s)))
        assert len(log.delivery_times()) == eng.TOTAL_ORDERS

    def test_controller_idles_when_done(self):
        from dataclasses import replace

        grid = parse_grid(MID_KITCHEN)
        table = MotionPlanTable(grid)
        robot = QmdpRobotController(QmdpModel(table, num_pots=2))
        done_state = replace(eng.init_state(grid, 0), orders_remaining=0)
        assert robot.action(done_state) == Action.STAY
