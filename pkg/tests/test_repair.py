"""Layout repair: edit costs, model construction, and the solver backends."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from kitchenforge.grid import TOKENS, check_solvability, parse_grid
from kitchenforge.repair import (
    EditCosts,
    brute_force_repair,
    build_model,
    canonical_rebuild,
    grid_edit_cost,
    grid_edit_summary,
    greedy_repair,
    match_type,
    model_size,
    parse_model,
    export_model,
    repair_grid,
)
from .conftest import MID_KITCHEN, random_grid

# Small solvable base whose single-tile mutations feed the optimality tests.
BASE_5X4 = "cncpc\ndehec\nceerc\nccscc"


def single_mutations(text):
    """Every grid obtained by rewriting one tile of `text` to another token."""
    grid = parse_grid(text)
    for y in range(grid.height):
        for x in range(grid.width):
            for token in TOKENS:
                if token != grid.get(x, y):
                    yield grid.with_tile(x, y, token)


class TestEditCosts:
    def test_pure_move_cost(self):
        cost, pairs = match_type([(0, 0)], [(3, 1)])
        assert cost == 4  # manhattan distance x move cost 1
        assert pairs == [((0, 0), (3, 1))]

    def test_delete_when_no_target(self):
        cost, pairs = match_type([(0, 0)], [])
        assert cost == EditCosts().delete
        assert pairs == [((0, 0), None)]

    def test_creation_is_free(self):
        cost, pairs = match_type([], [(2, 2)])
        assert cost == 0
        assert pairs == [(None, (2, 2))]

    def test_matching_is_minimal(self):
        # Crossed assignment costs 2+2; the optimal pairing costs
        # 1+1 by keeping each source on its own side.
        cost, _ = match_type([(0, 0), (3, 0)], [(1, 0), (2, 0)])
        assert cost == 2

    def test_identity_cost_zero(self):
        grid = parse_grid(BASE_5X4)
        assert grid_edit_cost(grid, grid) == 0
        assert grid_edit_summary(grid, grid).edits == []

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            grid_edit_cost(parse_grid(BASE_5X4), parse_grid(MID_KITCHEN))

    def test_single_swap_summary(self):
        grid = parse_grid(BASE_5X4)
        moved = grid.with_tile(1, 0, "c").with_tile(2, 0, "n")  # onion 1 right
        summary = grid_edit_summary(grid, moved)
        onion_moves = [e for e in summary.edits if e.token == "n"]
        assert len(onion_moves) == 1 and onion_moves[0].kind == "move"
        assert onion_moves[0].cost == 1


class TestModel:
    def test_published_size_at_default_resolution(self):
        # Reference value: the 15x10 formulation has 8850 variables.
        nvars, ncons = model_size(15, 10)
        assert nvars == 8850
        assert ncons == 3615

    def test_size_matches_built_model(self):
        grid = parse_grid(BASE_5X4)
        model = build_model(grid)
        nvars, ncons = model_size(grid.width, grid.height)
        assert model.num_variables == nvars
        assert model.num_constraints == ncons

    def test_export_parse_round_trip(self):
        model = build_model(parse_grid(BASE_5X4))
        text = export_model(model)
        back = parse_model(text)
        assert back.num_variables == model.num_variables
        assert back.num_constraints == model.num_constraints
        assert export_model(back) == text


class TestRepair:
    def test_solvable_input_is_untouched(self):
        grid = parse_grid(BASE_5X4)
        assert check_solvability(grid).is_solvable
        result = repair_grid(grid)
        assert result.edit_cost == 0
        assert result.repaired == grid
        assert result.is_optimal

    def test_greedy_always_valid(self):
        rng = random.Random(4)
        for _ in range(20):
            grid = random_grid(rng, 8, 6)
            assert check_solvability(greedy_repair(grid)).is_solvable

    def test_canonical_rebuild_valid(self):
        rng = random.Random(9)
        grid = canonical_rebuild(random_grid(rng, 7, 5))
        assert check_solvability(grid).is_solvable

    @given(
        st.builds(
            lambda seed: random_grid(random.Random(seed), 8, 6),
            st.integers(0, 100_000),
        )
    )
    @settings(max_examples=25, deadline=None)
    def test_repair_output_always_solvable(self, grid):
        result = repair_grid(grid, time_limit=5.0)
        assert check_solvability(result.repaired).is_solvable
        assert result.edit_cost >= 0
        assert result.edit_cost == grid_edit_cost(grid, result.repaired)

    def test_exact_matches_brute_force_on_mutations(self):
        # Full single-mutation sweep lives in the acceptance suite; this is
        # a fast sample across mutation positions and tokens.
        cases = [g for g in single_mutations(BASE_5X4)
                 if not check_solvability(g).is_solvable]
        rng = random.Random(1)
        for grid in rng.sample(cases, 10):
            result = repair_grid(grid, time_limit=30.0)
            assert result.is_optimal
            assert result.edit_cost == brute_force_repair(grid)

    def test_milp_backend_agrees(self):
        grid = parse_grid(BASE_5X4).with_tile(1, 0, "c")  # drop the onion
        assert not check_solvability(grid).is_solvable
        bnb = repair_grid(grid, time_limit=30.0)
        milp = repair_grid(grid, time_limit=60.0, backend="milp")
        assert check_solvability(milp.repaired).is_solvable
        assert milp.edit_cost == bnb.edit_cost

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            repair_grid(parse_grid(BASE_5X4).with_tile(1, 0, "c"), backend="x")

    def test_brute_force_rejects_large_grids(self):
        with pytest.raises(ValueError):
            brute_force_repair(parse_grid(MID_KITCHEN))
