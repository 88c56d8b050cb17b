"""Descriptors and analysis statistics computed from episode logs."""

from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import spearmanr

from kitchenforge import engine as eng
from kitchenforge.engine import Action
from kitchenforge.grid import parse_grid
from kitchenforge.metrics import (
    FLUENCY_RANGES,
    WORKLOAD_RANGES,
    RobustnessTable,
    fluency_bc,
    median_aggregate,
    robustness_analysis,
    spearman,
    workload_bc,
)
from .conftest import MID_KITCHEN

# Corridor where a scripted human can do everything while the robot idles.
CORRIDOR = "ccnccc\ndheerc\nccpscc"


def scripted_log(grid_text, pairs, seed=0):
    grid = parse_grid(grid_text)
    state = eng.init_state(grid, seed, horizon=max(eng.HORIZON, len(pairs)))
    log = eng.EpisodeLog(grid, seed)
    for ha, ra in pairs:
        state, events = eng.step(state, ha, ra)
        log.records.append(
            eng.TimestepRecord(
                clock=state.clock,
                actions=[ha.value, ra.value],
                poses=list(state.poses),
                held=[h.value for h in state.held],
                pots=dict(state.pots),
                events=events,
                unstuck=False,
            )
        )
    return log


class TestWorkload:
    def test_all_human_work_is_negative(self):
        # Human picks one onion while the robot stays: Δingredients = -1.
        pairs = [
            (Action.RIGHT, Action.STAY),
            (Action.UP, Action.STAY),
            (Action.INTERACT, Action.STAY),
        ]
        bc = workload_bc(scripted_log(CORRIDOR, pairs))
        assert bc.as_tuple() == (-1, 0, 0)

    def test_empty_log_is_origin(self):
        bc = workload_bc(scripted_log(CORRIDOR, []))
        assert bc.as_tuple() == (0, 0, 0)

    def test_range_covers_full_task_swing(self):
        # Six onions, two dishes, two deliveries swung entirely one way.
        assert WORKLOAD_RANGES == ((-6, 6), (-2, 2), (-2, 2))

    def test_full_episode_within_ranges(self):
        from kitchenforge import planning as pl

        grid = parse_grid(MID_KITCHEN)
        table = pl.MotionPlanTable(grid)
        human = pl.MyopicHuman(table)
        robot = pl.QmdpRobotController(
            pl.QmdpModel(table, num_pots=2, joint_node_cap=1000)
        )
        log = eng.run_episode(grid, 0, lambda s: (human.action(s), robot.action(s)))
        bc = workload_bc(log)
        for value, (lo, hi) in zip(bc.as_tuple(), WORKLOAD_RANGES):
            assert lo <= value <= hi


class TestFluency:
    def test_both_idle_scores_zero_concurrency(self):
        pairs = [(Action.STAY, Action.STAY)] * 4
        bc = fluency_bc(scripted_log(CORRIDOR, pairs))
        assert bc.concurrent_motion_pct == 0.0
        assert bc.stuck_timesteps == 4

    def test_both_moving_scores_full_concurrency(self):
        # Rotations count as motion; alternate so the pose changes each tick
        # (both agents start facing up, so the first rotation must differ).
        pairs = [(Action.LEFT, Action.DOWN), (Action.UP, Action.UP)] * 3
        bc = fluency_bc(scripted_log(CORRIDOR, pairs))
        assert bc.concurrent_motion_pct == 100.0
        assert bc.stuck_timesteps == 0

    def test_denominator_is_completion_time(self):
        # One active tick out of five logged ticks -> 20 %.
        pairs = [(Action.LEFT, Action.DOWN)] + [(Action.STAY, Action.STAY)] * 4
        bc = fluency_bc(scripted_log(CORRIDOR, pairs))
        assert bc.concurrent_motion_pct == pytest.approx(20.0)
        assert bc.stuck_timesteps == 4

    def test_interaction_counts_as_activity(self):
        pairs = [
            (Action.RIGHT, Action.DOWN),
            (Action.UP, Action.UP),
            (Action.INTERACT, Action.RIGHT),  # human interacts, robot rotates
        ]
        bc = fluency_bc(scripted_log(CORRIDOR, pairs))
        assert bc.concurrent_motion_pct == pytest.approx(100.0)

    def test_empty_log(self):
        bc = fluency_bc(scripted_log(CORRIDOR, []))
        assert bc.as_tuple() == (0.0, 0)
        assert FLUENCY_RANGES == ((0.0, 100.0), (0, 100))


class TestMedianAggregate:
    def test_scalar_odd(self):
        assert median_aggregate([3, 1, 2]) == 2

    def test_scalar_even_takes_lower(self):
        assert median_aggregate([4, 1, 2, 3]) == 2

    def test_componentwise(self):
        values = [(1, 10), (3, 30), (2, 20), (4, 40)]
        assert median_aggregate(values) == (2, 20)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            median_aggregate([])

    @given(st.lists(st.integers(-50, 50), min_size=1, max_size=21))
    def test_scalar_median_is_an_element(self, xs):
        m = median_aggregate(xs)
        assert m in xs
        below = sum(1 for x in xs if x < m)
        assert below <= (len(xs) - 1) // 2


class TestSpearman:
    def test_matches_scipy_on_varied_data(self):
        xs = [1.0, 4.0, 2.0, 8.0, 5.0]
        ys = [2.0, 3.0, 1.0, 9.0, 6.0]
        assert spearman(xs, ys) == pytest.approx(float(spearmanr(xs, ys).statistic))

    def test_perfect_inverse(self):
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)

    def test_identical_constant_sequences(self):
        # scipy yields nan here (zero variance); identical data is defined
        # to rank-correlate perfectly.
        assert spearman([2.0, 2.0, 2.0], [2.0, 2.0, 2.0]) == 1.0

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            spearman([1, 2], [1, 2])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            spearman([1, 2, 3], [1, 2])


class TestRobustness:
    def _entries(self, n=6):
        return [(k, (float(k), float(-k))) for k in range(n)]

    def test_identity_resimulation_gives_rho_one(self):
        entries = self._entries()

        def resim(key, eps, trial):
            return (float(key), float(-key))

        table = robustness_analysis(entries, [0.0, 0.1], resim, trials=3)
        assert all(v == 1.0 for row in table.rho for v in row)

    def test_noise_degrades_rho(self):
        entries = self._entries(10)
        rng = random.Random(0)

        def resim(key, eps, trial):
            return (key + eps * rng.gauss(0, 40), -key + eps * rng.gauss(0, 40))

        table = robustness_analysis(entries, [0.0, 1.0], resim, trials=5)
        assert all(v == 1.0 for v in table.rho[0])
        assert all(v < 1.0 for v in table.rho[1])

    def test_median_absorbs_outlier_trials(self):
        entries = self._entries()

        def resim(key, eps, trial):
            if trial == 0:  # single wild trial must not shift the median
                return (1000.0, -1000.0)
            return (float(key), float(-key))

        table = robustness_analysis(entries, [0.5], resim, trials=5)
        assert table.rho == [[1.0, 1.0]]

    def test_needs_three_cells(self):
        with pytest.raises(ValueError):
            robustness_analysis(self._entries(2), [0.0], lambda *a: (0.0, 0.0))

    def test_csv_layout(self):
        table = RobustnessTable([0.0, 0.5], ["a", "b"], [[1.0, 1.0], [0.25, -0.5]])
        lines = table.to_csv().splitlines()
        assert lines[0] == "epsilon,a,b"
        assert lines[1] == "0,1.0000,1.0000"
        assert lines[2] == "0.5,0.2500,-0.5000"

    def test_bc_name_mismatch_rejected(self):
        with pytest.raises(ValueError):
            robustness_analysis(
                self._entries(), [0.0], lambda *a: (0.0, 0.0), bc_names=["only-one"]
            )
