"""End-to-end candidate evaluation: decode, repair, simulate, summarize."""

from __future__ import annotations

import pickle
import random

import numpy as np
import pytest

from kitchenforge import planning as pl
from kitchenforge.evaluation import (
    EnvEvaluator,
    episode_descriptor,
    episode_performance,
    simulate_episode,
)
from kitchenforge.grid import check_solvability, parse_grid
from kitchenforge.metrics import fluency_bc, workload_bc
from .conftest import MID_KITCHEN, random_grid


@pytest.fixture(scope="module")
def mid_grid():
    return parse_grid(MID_KITCHEN)


class TestSimulateEpisode:
    def test_unknown_pair_rejected(self, mid_grid):
        with pytest.raises(ValueError):
            simulate_episode(mid_grid, 0, pair="psychic")

    def test_qmdp_pair_completes_orders(self, mid_grid):
        log = simulate_episode(mid_grid, 0, pair="qmdp", joint_node_cap=1000)
        assert len(log.delivery_times()) == 2
        assert episode_performance(log) > 0.5

    def test_descriptor_matches_metrics_module(self, mid_grid):
        log = simulate_episode(mid_grid, 0, pair="qmdp", joint_node_cap=1000)
        assert episode_descriptor(log, "workload") == tuple(
            float(v) for v in workload_bc(log).as_tuple()
        )
        f = fluency_bc(log)
        assert episode_descriptor(log, "fluency") == (
            f.concurrent_motion_pct,
            float(f.stuck_timesteps),
        )
        with pytest.raises(ValueError):
            episode_descriptor(log, "vibes")

    def test_mdp_outperforms_or_ties_qmdp_here(self, mid_grid):
        table = pl.MotionPlanTable(mid_grid)
        qmdp = simulate_episode(mid_grid, 0, "qmdp", table=table, joint_node_cap=1000)
        mdp = simulate_episode(mid_grid, 0, "mdp", table=table, joint_node_cap=1000)
        assert episode_performance(mdp) >= 0.0
        assert episode_performance(qmdp) >= 0.0


class TestEnvEvaluator:
    def _evaluator(self, **kw):
        base = dict(pair="qmdp", bc_set="workload", trials=1, seed=9,
                    width=8, height=6, joint_node_cap=1000)
        base.update(kw)
        return EnvEvaluator(**base)

    def test_trial_seed_schedule(self):
        ev = self._evaluator(seed=9)
        assert ev._trial_seed(0) == (9 * 1_000_003) % 2**32
        assert ev._trial_seed(3) == (9 * 1_000_003 + 3) % 2**32

    def test_evaluator_is_picklable(self):
        ev = self._evaluator()
        clone = pickle.loads(pickle.dumps(ev))
        assert clone.pair == ev.pair and clone.seed == ev.seed

    def test_latent_call_repairs_and_scores(self):
        ev = self._evaluator()
        z = np.random.default_rng(2).standard_normal(32)
        result = ev(z)
        assert check_solvability(result.grid).is_solvable
        assert 0.0 <= result.f <= 1.0
        assert len(result.b) == 3
        assert set(result.metadata) == {"repair_status", "repair_cost", "trials"}
        assert result.metadata["repair_cost"] >= 0

    def test_evaluate_grid_skips_repair_when_solvable(self, mid_grid):
        ev = self._evaluator()
        result = ev.evaluate_grid(mid_grid)
        assert result.metadata["repair_cost"] == 0
        assert result.grid == mid_grid

    def test_gap_objective_is_mdp_minus_qmdp(self, mid_grid):
        ev = self._evaluator(objective="mdp_qmdp_gap")
        seed = ev._trial_seed(0)
        table = pl.MotionPlanTable(mid_grid)
        mdp = episode_performance(
            simulate_episode(mid_grid, seed, "mdp", table=table, joint_node_cap=1000)
        )
        qmdp = episode_performance(
            simulate_episode(mid_grid, seed, "qmdp", table=table, joint_node_cap=1000)
        )
        result = ev.evaluate_grid(mid_grid)
        assert result.f == pytest.approx(mdp - qmdp)

    def test_validation_in_post_init(self):
        with pytest.raises(ValueError):
            self._evaluator(pair="nope")
        with pytest.raises(ValueError):
            self._evaluator(bc_set="nope")
        with pytest.raises(ValueError):
            self._evaluator(objective="nope")

    def test_random_grid_evaluation_is_deterministic(self):
        grid = random_grid(random.Random(5), 8, 6)
        ev = self._evaluator()
        a = ev.evaluate_grid(grid)
        b = ev.evaluate_grid(grid)
        assert (a.f, a.b, a.grid) == (b.f, b.b, b.grid)
