"""Solver backends for minimum-edit kitchen repair.

Three routes produce repaired grids:

* ``solve`` — the package entry point. On small grids it runs an in-repo
  branch-and-bound over the per-tile assignment with count propagation,
  dead-target (flow feasibility) pruning, and matching-relaxation lower
  bounds; on large grids, or when the search budget expires, it falls back
  to an always-successful greedy repair and reports status ``feasible``.
* ``solve_milp`` — hands the explicit mixed-integer model to scipy's HiGHS
  backend; useful as an independent cross-check and for external solvers.
* ``brute_force_repair`` — an oracle for tiny grids that exhaustively
  enumerates connected walkable regions and station placements. Exact by
  construction; used to validate optimality of the other backends.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..grid import (
    BLOCKING,
    COUNTER,
    FLOOR,
    HUMAN,
    KitchenGrid,
    ROBOT,
    STATIONS,
    TOKENS,
    check_solvability,
    reachable_from_human,
)
from .costs import Edit, EditCosts, grid_edit_summary, manhattan, match_type
from .model import RepairModel, build_model, grid_from_values

Tile = tuple[int, int]

_INF = float("inf")

#: Per-type placement capacity in a valid kitchen.
_CAPACITY = {HUMAN: 1, ROBOT: 1, **{t: 2 for t in STATIONS}}

#: Tokens an agent can stand on.
_WALKABLE = frozenset((FLOOR, HUMAN, ROBOT))


@dataclass
class RepairResult:
    repaired: KitchenGrid
    edit_cost: int
    edit_list: list[Edit]
    solver_status: str  # optimal | feasible | infeasible | timeout

    @property
    def is_optimal(self) -> bool:
        return self.solver_status == "optimal"


def _result(original: KitchenGrid, repaired: KitchenGrid, status: str, costs: EditCosts) -> RepairResult:
    summary = grid_edit_summary(original, repaired, costs)
    return RepairResult(repaired, summary.cost, summary.edits, status)


# ---------------------------------------------------------------------------
# Greedy repair: always valid, input-preserving where possible.


def canonical_rebuild(grid: KitchenGrid) -> KitchenGrid:
    """A from-scratch valid layout sharing the input's dimensions."""
    w, h = grid.width, grid.height
    interior = [(x, y) for y in range(1, h - 1) for x in range(1, w - 1)]
    if len(interior) < 2:
        raise ValueError("grid too small to host a valid kitchen")
    tiles = {
        v: (COUNTER if _is_border(v, w, h) else FLOOR) for v in _scan(w, h)
    }
    tiles[interior[0]] = HUMAN
    tiles[interior[1]] = ROBOT
    slots = [
        v
        for v in _border_tiles(w, h)
        if _has_interior_neighbor(v, w, h)
    ]
    if len(slots) < len(STATIONS):
        raise ValueError("grid too small to host a valid kitchen")
    for token, slot in zip(STATIONS, slots):
        tiles[slot] = token
    return KitchenGrid(w, h, tuple(tiles[v] for v in _scan(w, h)))


def _nearest_tile(target: Tile, options: list[Tile]) -> Tile:
    return min(options, key=lambda t: (manhattan(target, t), t[1], t[0]))


def greedy_repair(grid: KitchenGrid, costs: EditCosts = EditCosts()) -> KitchenGrid:
    """Heuristic repair: fix the border, dedupe agents, clamp station counts,
    then restore reachability by relocating cut-off stations and carving
    floor corridors through interior counters. Always returns a valid grid.
    """
    w, h = grid.width, grid.height
    tiles = {(x, y): grid.get(x, y) for y in range(h) for x in range(w)}
    interior = [(x, y) for y in range(1, h - 1) for x in range(1, w - 1)]
    if len(interior) < 2:
        raise ValueError("grid too small to repair")

    # Border must be blocking; displaced agents are re-seated later.
    for v, t in tiles.items():
        if (v[0] in (0, w - 1) or v[1] in (0, h - 1)) and t not in BLOCKING:
            tiles[v] = COUNTER

    def positions(token):
        return [v for v, t in tiles.items() if t == token]

    # Exactly one human and one robot, on interior tiles.
    for token in (HUMAN, ROBOT):
        locs = positions(token)
        keep = locs[0] if locs else None
        for v in locs[1:]:
            tiles[v] = FLOOR
        if keep is None:
            want = grid.find_all(token)
            anchor = want[0] if want else (1, 1)
            free = [v for v in interior if tiles[v] in (COUNTER, FLOOR)]
            # A station-packed interior forces displacement; the station
            # count pass below restores any type this knocks out.
            free = free or [
                v for v in interior if tiles[v] not in (HUMAN, ROBOT)
            ]
            spot = _nearest_tile(anchor, free)
            tiles[spot] = token

    # Station counts within 1..2 each, joint cap 6.
    for token in STATIONS:
        locs = positions(token)
        for v in locs[2:]:
            tiles[v] = COUNTER
        if not locs:
            free = [
                v
                for v in interior + _border_tiles(w, h)
                if tiles[v] == COUNTER and _has_interior_neighbor(v, w, h)
            ]
            if not free:
                return canonical_rebuild(grid)
            anchor = grid.find_all(token) or [(w // 2, h // 2)]
            tiles[_nearest_tile(anchor[0], free)] = token
    while sum(len(positions(t)) for t in STATIONS) > 6:
        doubled = [t for t in STATIONS if len(positions(t)) > 1]
        tiles[positions(doubled[0])[1]] = COUNTER

    # Restore reachability.
    for _ in range(w * h):
        cur = KitchenGrid(w, h, tuple(tiles[v] for v in _scan(w, h)))
        reached = reachable_from_human(cur)
        fixed = False
        for token in STATIONS + (ROBOT,):
            for v in positions(token):
                if v in reached:
                    continue
                if _connectable(v, tiles, w, h):
                    _carve_to(v, tiles, reached, w, h)
                else:
                    # No interior route can exist (e.g. a corner station):
                    # relocate next to already-reached floor.
                    slots = [
                        u
                        for u in _scan(w, h)
                        if tiles[u] == COUNTER
                        and any(n in reached and tiles[n] not in BLOCKING
                                for n in _neighbors(u, w, h))
                    ]
                    if token == ROBOT:
                        slots = [
                            u
                            for u in interior
                            if tiles[u] in (COUNTER, FLOOR) and u in reached
                        ] or slots
                    if not slots:
                        return canonical_rebuild(grid)
                    tiles[v] = COUNTER if _is_border(v, w, h) else FLOOR
                    tiles[_nearest_tile(v, slots)] = token
                fixed = True
                break
            if fixed:
                break
        if not fixed:
            break

    # Any floor still cut off stops being floor.
    cur = KitchenGrid(w, h, tuple(tiles[v] for v in _scan(w, h)))
    reached = reachable_from_human(cur)
    for v in interior:
        if tiles[v] == FLOOR and v not in reached:
            tiles[v] = COUNTER

    out = KitchenGrid(w, h, tuple(tiles[v] for v in _scan(w, h)))
    if not check_solvability(out).is_solvable:
        out = canonical_rebuild(grid)
    return out


def _scan(w: int, h: int):
    return [(x, y) for y in range(h) for x in range(w)]


def _border_tiles(w: int, h: int) -> list[Tile]:
    return [v for v in _scan(w, h) if _is_border(v, w, h)]


def _is_border(v: Tile, w: int, h: int) -> bool:
    return v[0] in (0, w - 1) or v[1] in (0, h - 1)


def _neighbors(v: Tile, w: int, h: int) -> list[Tile]:
    out = []
    for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
        u = (v[0] + dx, v[1] + dy)
        if 0 <= u[0] < w and 0 <= u[1] < h:
            out.append(u)
    return out


def _has_interior_neighbor(v: Tile, w: int, h: int) -> bool:
    return any(not _is_border(u, w, h) for u in _neighbors(v, w, h))


def _connectable(v: Tile, tiles: dict, w: int, h: int) -> bool:
    return any(
        not _is_border(u, w, h) and tiles[u] in (COUNTER, FLOOR, HUMAN, ROBOT)
        for u in _neighbors(v, w, h)
    )


def _carve_to(v: Tile, tiles: dict, reached: set, w: int, h: int) -> None:
    """Convert interior counters to floor along a cheapest path that links
    the reached region to a walkable neighbor of `v` (0-1 BFS)."""
    import heapq

    starts = [u for u in reached if tiles[u] not in BLOCKING]
    dist: dict[Tile, int] = {}
    prev: dict[Tile, Tile] = {}
    counter = itertools.count()
    heap = [(0, next(counter), u, None) for u in starts]
    heapq.heapify(heap)
    goal = None
    while heap:
        d, _, u, p = heapq.heappop(heap)
        if u in dist:
            continue
        dist[u] = d
        if p is not None:
            prev[u] = p
        if u != v and v in _neighbors(u, w, h):
            goal = u
            break
        for nxt in _neighbors(u, w, h):
            if nxt in dist or _is_border(nxt, w, h):
                continue
            t = tiles[nxt]
            if t in (HUMAN, ROBOT, FLOOR):
                heapq.heappush(heap, (d, next(counter), nxt, u))
            elif t == COUNTER:
                heapq.heappush(heap, (d + 1, next(counter), nxt, u))
    if goal is None:
        return
    node = goal
    while node is not None:
        if tiles[node] == COUNTER:
            tiles[node] = FLOOR
        node = prev.get(node)


# ---------------------------------------------------------------------------
# Exact branch-and-bound over the per-tile assignment (reference backend).


def _suffix_nearest(tiles: list[Tile]) -> list[list[int]]:
    """nearest[d][i] = Manhattan distance from tiles[i] to the closest tile
    among tiles[d:], or a large sentinel when the suffix is empty."""
    n = len(tiles)
    out = [[0] * n for _ in range(n + 1)]
    for i in range(n):
        out[n][i] = 10 ** 6
    for d in range(n - 1, -1, -1):
        for i in range(n):
            out[d][i] = min(out[d + 1][i], manhattan(tiles[i], tiles[d]))
    return out


def _capped_match_lb(
    inputs: list[Tile],
    placed: list[Tile],
    wildcard: int,
    wildcard_dist,
    costs: EditCosts,
) -> int:
    """Admissible lower bound on one type's matching cost.

    Each input may use a placed target (mutually exclusive, |placed| <= 2),
    one of at most `wildcard` future placements charged at the input's
    nearest-undecided distance, or deletion. Capacities are enforced, so
    forced deletions (more inputs than remaining capacity) are priced in.
    """
    n = len(inputs)
    if n == 0:
        return 0
    wd = [
        min(costs.delete, costs.move * wildcard_dist(src)) for src in inputs
    ]

    def rest_cost(used: tuple[int, ...]) -> int:
        base = costs.delete * (n - len(used))
        gains = sorted(
            (costs.delete - wd[i] for i in range(n) if i not in used and wd[i] < costs.delete),
            reverse=True,
        )
        return base - sum(gains[:wildcard])

    options: list[tuple[tuple[int, ...], int]] = [((), 0)]
    if placed:
        d0 = [costs.move * manhattan(src, placed[0]) for src in inputs]
        options += [((a,), d0[a]) for a in range(n)]
        if len(placed) == 2:
            d1 = [costs.move * manhattan(src, placed[1]) for src in inputs]
            options += [((b,), d1[b]) for b in range(n)]
            options += [
                ((a, b), d0[a] + d1[b])
                for a in range(n)
                for b in range(n)
                if a != b
            ]
    return min(pc + rest_cost(used) for used, pc in options)


class _ExactSearch:
    """Depth-first branch-and-bound assigning one tile per level."""

    def __init__(self, grid: KitchenGrid, costs: EditCosts, deadline: float | None):
        self.grid = grid
        self.costs = costs
        self.deadline = deadline
        self.w, self.h = grid.width, grid.height
        # Interior first: the border is always blocking, so the walkable
        # region is fully determined once every interior tile is decided,
        # which lets connectivity prune the remaining border phase hard.
        self.interior = [
            v for v in _scan(self.w, self.h) if not _is_border(v, self.w, self.h)
        ]
        self.order = self.interior + _border_tiles(self.w, self.h)
        self.index = {v: i for i, v in enumerate(self.order)}
        self.nearest = _suffix_nearest(self.order)
        self.inputs = {t: grid.find_all(t) for t in TOKENS}
        self.assign: dict[Tile, str] = {}
        self.counts = {t: 0 for t in TOKENS}
        self.placed: dict[str, list[Tile]] = {
            t: [] for t in (HUMAN, ROBOT, COUNTER, FLOOR, *STATIONS)
        }
        self.displaced = {COUNTER: 0, FLOOR: 0}
        self.undecided_interior = [
            sum(1 for u in self.interior if self.index[u] >= d)
            for d in range(len(self.order) + 1)
        ]
        self.best_cost = _INF
        self.best_grid: KitchenGrid | None = None
        self.proven = True
        self.nodes = 0
        # Pigeonhole: every tile hosts exactly one object, so each mandatory
        # object the input lacks must be created, evicting (deleting) some
        # input object. A static, instance-level lower bound.
        self.static_lb = costs.delete * sum(
            max(0, 1 - len(self.inputs[t])) for t in (HUMAN, ROBOT, *STATIONS)
        )
        self._init_global_lap()

    def _init_global_lap(self) -> None:
        """Static pieces of the all-types assignment relaxation.

        Rows are every input object plus one "creation" row per mandatory
        object type the input grid lacks; creation rows sit anywhere legal
        for free but may never be wasted, so they evict an input (the
        pigeonhole argument) while move costs stay additive.
        """
        rows: list[tuple[Tile | None, str]] = []
        for t in TOKENS:
            rows += [(v, t) for v in self.inputs[t]]
        for t in (HUMAN, ROBOT, *STATIONS):
            if not self.inputs[t]:
                rows.append((None, t))
        self.row_tokens = [t for _, t in rows]
        n_cols = len(self.order)
        big = 10.0**6
        dist = np.zeros((len(rows), n_cols))
        for i, (src, _) in enumerate(rows):
            if src is not None:
                for j, v in enumerate(self.order):
                    dist[i, j] = self.costs.move * manhattan(src, v)
        self.lap_dist = dist
        waste = np.full((len(rows), len(rows)), big)
        for i, (src, _) in enumerate(rows):
            if src is not None:
                waste[i, :] = float(self.costs.delete)
        self.lap_waste = waste
        self.lap_big = big
        self.token_index = {t: i for i, t in enumerate(TOKENS)}
        self.row_type_idx = np.array(
            [self.token_index[t] for t in self.row_tokens]
        )
        self._mask_border = np.zeros(len(TOKENS), dtype=bool)
        for t in BLOCKING:
            self._mask_border[self.token_index[t]] = True
        self._station_idx = [self.token_index[t] for t in STATIONS]

    def _global_lap_lb(self) -> float:
        """Assignment relaxation over every object type at once: shared tile
        capacity, type-legality per tile, station tiles restricted to those
        with a still-possibly-walkable neighbor, forced creations included.
        """
        n_tok = len(TOKENS)
        masks = np.zeros((len(self.order), n_tok), dtype=bool)
        live_walk = set()
        for u in self.interior:
            t = self.assign.get(u)
            if t is None or t in _WALKABLE:
                live_walk.add(u)
        for j, v in enumerate(self.order):
            t = self.assign.get(v)
            if t is not None:
                masks[j, self.token_index[t]] = True
                continue
            if _is_border(v, self.w, self.h):
                masks[j] = self._mask_border
            else:
                masks[j] = True
            if not any(
                nb in live_walk for nb in _neighbors(v, self.w, self.h)
            ):
                for si in self._station_idx:
                    masks[j, si] = False
        allowed = masks[:, self.row_type_idx].T
        mat = np.where(allowed, self.lap_dist, self.lap_big)
        full = np.hstack([mat, self.lap_waste])
        rows, cols = linear_sum_assignment(full)
        return float(full[rows, cols].sum())

    def seed(self, candidate: KitchenGrid) -> None:
        cost = grid_edit_summary(self.grid, candidate, self.costs).cost
        if cost < self.best_cost:
            self.best_cost = cost
            self.best_grid = candidate

    # -- search ------------------------------------------------------------

    def run(self) -> tuple[KitchenGrid | None, bool]:
        self._dfs(0)
        return self.best_grid, self.proven and self.deadline_ok()

    def deadline_ok(self) -> bool:
        return self.deadline is None or time.monotonic() <= self.deadline

    def _dfs(self, depth: int) -> None:
        if not self.proven:
            return
        self.nodes += 1
        if self.nodes % 512 == 0 and not self.deadline_ok():
            self.proven = False
            return
        if depth == len(self.interior):
            self._complete_border()
            return
        v = self.order[depth]
        domain = self._domain(v, depth)
        own = self.grid.get(*v)
        for token in domain:
            self.assign[v] = token
            self.counts[token] += 1
            tracked = token in self.placed
            if tracked:
                self.placed[token].append(v)
            bumped = own in (COUNTER, FLOOR) and token != own
            if bumped:
                self.displaced[own] += 1
            if self._feasible(v, depth) and self._bound(depth + 1) < self.best_cost:
                self._dfs(depth + 1)
            if bumped:
                self.displaced[own] -= 1
            if tracked:
                self.placed[token].pop()
            self.counts[token] -= 1
            del self.assign[v]
            if not self.proven:
                return

    def _domain(self, v: Tile, depth: int) -> list[str]:
        border = _is_border(v, self.w, self.h)
        options = sorted(BLOCKING) if border else list(TOKENS)
        own = self.grid.get(*v)
        ordered = []
        for t in (own, COUNTER, FLOOR, *options):
            if t in options and t not in ordered:
                ordered.append(t)
        out = []
        for t in ordered:
            cap = _CAPACITY.get(t)
            if cap is not None and self.counts[t] >= cap:
                continue
            out.append(t)
        return out

    def _feasible(self, v: Tile, depth: int) -> bool:
        # Enough undecided interior room for mandatory objects.
        undecided_interior = self.undecided_interior[depth + 1]
        need_agents = (1 - self.counts[HUMAN]) + (1 - self.counts[ROBOT])
        if need_agents > undecided_interior:
            return False
        if sum(self.counts[t] for t in STATIONS) > 6:
            return False
        # Walkable structure. Every decided walkable tile must end up in one
        # connected region, and routes can only run through walkable or
        # still-undecided interior tiles ("live"). Flood from one decided
        # walkable tile; a second component means the layout is already cut.
        live: set[Tile] = set()
        walk: list[Tile] = []
        for u in self.interior:
            t = self.assign.get(u)
            if t is None:
                live.add(u)
            elif t in _WALKABLE:
                live.add(u)
                walk.append(u)
        if walk:
            comp = {walk[0]}
            stack = [walk[0]]
            while stack:
                cur = stack.pop()
                for nb in _neighbors(cur, self.w, self.h):
                    if nb in live and nb not in comp:
                        comp.add(nb)
                        stack.append(nb)
            if any(u not in comp for u in walk):
                return False
        else:
            comp = live
        # Decided stations must touch a tile that can still be walkable, and
        # (once any walkable tile exists) specifically the human's region.
        slots: set[Tile] = set()
        for u, t in self.assign.items():
            if t in STATIONS and not any(
                nb in comp for nb in _neighbors(u, self.w, self.h)
            ):
                return False
        # Missing station types need distinct undecided tiles next to the
        # walkable region.
        need_stations = sum(1 for t in STATIONS if self.counts[t] == 0)
        if need_stations:
            for u in self.order[depth + 1 :]:
                if any(nb in comp for nb in _neighbors(u, self.w, self.h)):
                    slots.add(u)
                    if len(slots) >= need_stations:
                        break
            if len(slots) < need_stations:
                return False
        return True

    def _lap_lb(
        self, inputs: list[Tile], exact: list[Tile], wild: list[Tile]
    ) -> float:
        """Assignment lower bound for one type: decided targets and undecided
        candidate tiles are capacity-one columns at true move cost, with
        deletion always available."""
        n = len(inputs)
        if n == 0:
            return 0.0
        cols = exact + wild
        if not cols:
            return float(self.costs.delete * n)
        mat = np.full((n, len(cols) + n), float(self.costs.delete))
        move = self.costs.move
        for i, s in enumerate(inputs):
            for j, t in enumerate(cols):
                mat[i, j] = move * manhattan(s, t)
        rows, picks = linear_sum_assignment(mat)
        return float(mat[rows, picks].sum())

    def _bound(self, depth: int) -> float:
        costs = self.costs
        glb = self._global_lap_lb()
        if glb >= self.best_cost:
            return glb
        ni = len(self.interior)
        undecided = self.order[depth:]
        wild_interior = self.order[depth:ni]
        need_agents = (1 - self.counts[HUMAN]) + (1 - self.counts[ROBOT])
        need_stations = sum(1 for t in STATIONS if self.counts[t] == 0)
        lb = 0.0
        # Counters and floors: the sharper of a capacity/displacement count
        # (which knows undecided slots are reserved for mandatory objects)
        # and an exact assignment relaxation over candidate tiles.
        for token, room, wild in (
            (COUNTER, len(undecided) - need_agents - need_stations, undecided),
            (FLOOR, len(wild_interior) - need_agents, wild_interior),
        ):
            capacity = self.counts[token] + max(0, room)
            forced = max(0, len(self.inputs[token]) - capacity)
            moved = max(0, self.displaced[token] - forced)
            counting = forced * costs.delete + moved * costs.move
            lap = self._lap_lb(self.inputs[token], self.placed[token], wild)
            lb += max(counting, lap)
            if lb >= self.best_cost:
                return lb
        # Agents and stations. Once the interior is decided the walkable
        # region is final, so station wildcards shrink to the undecided
        # border tiles adjacent to it.
        if depth >= ni:
            w_region = {u for u in self.interior if self.assign[u] in _WALKABLE}
            slots = [
                u
                for u in undecided
                if any(nb in w_region for nb in _neighbors(u, self.w, self.h))
            ]

            def dist_fn(src: Tile):
                return min(
                    (manhattan(src, t) for t in slots), default=10**6
                )

        else:

            def dist_fn(src: Tile):
                return self.nearest[depth][self.index[src]]

        for token, cap in _CAPACITY.items():
            placed = self.placed[token]
            wc = cap - len(placed) if undecided else 0
            lb += _capped_match_lb(
                self.inputs[token], placed, wc, dist_fn, costs
            )
            if lb >= self.best_cost:
                return lb
        return max(lb, glb, self.static_lb)

    def _complete_border(self) -> None:
        """Exact optimal border completion for a fully decided interior.

        The border is always blocking, so with the walkable region fixed the
        remaining choices are which border tiles (necessarily adjacent to the
        region, for reachability) take station instances; every other border
        tile is a counter. Enumerated per type in cost order with suffix-min
        and counter-relaxation pruning, so this is exact, not heuristic.
        """
        costs = self.costs
        region = {u for u in self.interior if self.assign[u] in _WALKABLE}
        border = [v for v in self.order[len(self.interior) :]]
        adj = [
            v
            for v in border
            if any(nb in region for nb in _neighbors(v, self.w, self.h))
        ]
        fixed = 0
        for token in (HUMAN, ROBOT, FLOOR):
            cost, _ = match_type(
                self.inputs[token], self.placed[token], costs
            )
            fixed += cost
        # Per station type: candidate border additions sorted by match cost.
        options: dict[str, list[tuple[int, tuple[Tile, ...]]]] = {}
        for token in STATIONS:
            have = self.placed[token]
            lst: list[tuple[int, tuple[Tile, ...]]] = []
            for size in range(max(0, 1 - len(have)), 3 - len(have)):
                if size == 0:
                    lst.append(
                        (_placement_cost(self.inputs[token], have, costs), ())
                    )
                elif size == 1:
                    for a in adj:
                        lst.append(
                            (
                                _placement_cost(
                                    self.inputs[token], have + [a], costs
                                ),
                                (a,),
                            )
                        )
                else:
                    for i, a in enumerate(adj):
                        for b in adj[i + 1 :]:
                            lst.append(
                                (
                                    _placement_cost(
                                        self.inputs[token], [a, b], costs
                                    ),
                                    (a, b),
                                )
                            )
            if not lst:
                return  # a station type cannot be placed: no valid completion
            lst.sort(key=lambda e: (e[0], e[1]))
            options[token] = lst
        # Expensive types first so partial sums climb quickly.
        type_order = sorted(STATIONS, key=lambda t: -options[t][0][0])
        inside = sum(len(self.placed[t]) for t in STATIONS)
        clb = self._lap_lb(self.inputs[COUNTER], self.placed[COUNTER], border)
        suffix = [0.0] * (len(type_order) + 1)
        for i in range(len(type_order) - 1, -1, -1):
            suffix[i] = suffix[i + 1] + options[type_order[i]][0][0]

        def rec(idx: int, used: frozenset, acc: float) -> None:
            self.nodes += 1
            if not self.deadline_ok():
                self.proven = False
                return
            if acc + suffix[idx] + clb >= self.best_cost:
                return
            if idx == len(type_order):
                counter_tiles = self.placed[COUNTER] + [
                    v for v in border if v not in used
                ]
                cost_c, _ = match_type(self.inputs[COUNTER], counter_tiles, costs)
                if acc + cost_c < self.best_cost:
                    self._record(used)
                return
            token = type_order[idx]
            need_later = sum(
                1
                for j in range(idx + 1, len(type_order))
                if not self.placed[type_order[j]]
            )
            for cost, tiles in options[token]:
                if acc + cost + suffix[idx + 1] + clb >= self.best_cost:
                    break
                if any(t in used for t in tiles):
                    continue
                if inside + len(used) + len(tiles) + need_later > 6:
                    continue
                self._station_pick[token] = tiles
                rec(idx + 1, used | frozenset(tiles), acc + cost)
            self._station_pick.pop(token, None)

        self._station_pick: dict[str, tuple[Tile, ...]] = {}
        rec(0, frozenset(), float(fixed))

    def _record(self, used: frozenset) -> None:
        """Materialise the current interior + station selection as a grid and
        keep it if it is valid and cheaper."""
        tiles: dict[Tile, str] = dict(self.assign)
        for token, sel in self._station_pick.items():
            for v in sel:
                tiles[v] = token
        for v in self.order[len(self.interior) :]:
            tiles.setdefault(v, COUNTER)
        candidate = KitchenGrid(
            self.w, self.h, tuple(tiles[v] for v in _scan(self.w, self.h))
        )
        if not check_solvability(candidate).is_solvable:
            return
        cost = grid_edit_summary(self.grid, candidate, self.costs).cost
        if cost < self.best_cost:
            self.best_cost = cost
            self.best_grid = candidate


# ---------------------------------------------------------------------------
# Brute-force oracle: enumerate connected walkable regions (tiny grids only).


def brute_force_repair(
    grid: KitchenGrid, costs: EditCosts = EditCosts()
) -> int:
    """Exact minimum edit cost for tiny grids.

    Enumerates every valid repaired layout by structure: a connected interior
    walkable region W hosting the two agents, stations on tiles adjacent to
    W, counters everywhere else. Independent of the branch-and-bound backend.
    """
    w, h = grid.width, grid.height
    interior = [(x, y) for y in range(1, h - 1) for x in range(1, w - 1)]
    if len(interior) > 12:
        raise ValueError("brute_force_repair is restricted to tiny grids")
    all_tiles = _scan(w, h)
    inputs = {t: grid.find_all(t) for t in TOKENS}
    # A valid incumbent tightens pruning from the start; its cost is an
    # upper bound on the optimum, so the final minimum is unaffected.
    seed = greedy_repair(grid, costs)
    assert check_solvability(seed).is_solvable
    best = grid_edit_summary(grid, seed, costs).cost

    for mask in range(1, 1 << len(interior)):
        region = [interior[i] for i in range(len(interior)) if mask >> i & 1]
        if len(region) < 2 or not _connected(region):
            continue
        rset = set(region)
        adjacent = [
            v
            for v in all_tiles
            if v not in rset and any(u in rset for u in _neighbors(v, w, h))
        ]
        if len(adjacent) < 4:
            continue
        candidates = _station_candidates(inputs, adjacent, costs)
        station_lb = sum(candidates[t][0][0] for t in STATIONS)
        counter_targets = [v for v in all_tiles if v not in rset]
        # counter_lb[k]: exact counter matching cost when the k least
        # damaging non-region tiles are ceded to stations.
        counter_lb = [
            _counter_cost_with_stolen(inputs[COUNTER], counter_targets, k, costs)
            for k in range(min(6, len(counter_targets)) + 1)
        ]
        pairs = []
        for hpos, rpos in itertools.permutations(region, 2):
            cost_h = _placement_cost(inputs[HUMAN], [hpos], costs)
            cost_r = _placement_cost(inputs[ROBOT], [rpos], costs)
            if cost_h + cost_r + station_lb + counter_lb[4] >= best:
                continue
            pairs.append((cost_h + cost_r, hpos, rpos))
        pairs.sort()
        for hr_cost, hpos, rpos in pairs:
            if hr_cost + station_lb + counter_lb[4] >= best:
                break
            floor_tiles = [v for v in region if v not in (hpos, rpos)]
            cost_e, _ = match_type(inputs[FLOOR], floor_tiles, costs)
            base = hr_cost + cost_e
            if base + station_lb + counter_lb[4] >= best:
                continue
            best = min(
                best,
                _best_station_assignment(
                    base,
                    candidates,
                    rset,
                    all_tiles,
                    inputs,
                    costs,
                    best,
                    counter_lb,
                ),
            )
    return int(best)


def _connected(region: list[Tile]) -> bool:
    rset = set(region)
    seen = {region[0]}
    stack = [region[0]]
    while stack:
        x, y = stack.pop()
        for u in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if u in rset and u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(region)


def _placement_cost(sources: list[Tile], targets: list[Tile], costs: EditCosts) -> int:
    """Exact matching cost for up to two targets, without scipy overhead."""
    n = len(sources)
    base = costs.delete * n
    if n == 0 or not targets:
        return base
    d0 = [costs.move * manhattan(s, targets[0]) for s in sources]
    best = min(base, base - costs.delete + min(d0))
    if len(targets) == 2:
        d1 = [costs.move * manhattan(s, targets[1]) for s in sources]
        best = min(best, base - costs.delete + min(d1))
        if n >= 2:
            for i in range(n):
                for j in range(n):
                    if i != j:
                        best = min(
                            best, base - 2 * costs.delete + d0[i] + d1[j]
                        )
    return best


def _counter_cost_with_stolen(
    sources: list[Tile], targets: list[Tile], stolen: int, costs: EditCosts
) -> float:
    """Exact matching cost when `stolen` targets (chosen as cheaply as
    possible) are unavailable — a sharp lower bound for station placement."""
    import numpy as np
    from scipy.optimize import linear_sum_assignment

    ns, nt = len(sources), len(targets)
    if ns == 0:
        return 0.0
    big = costs.delete * (ns + 1) * 10.0
    size = ns + stolen + max(0, nt - stolen)
    size = max(size, nt + ns)
    mat = np.zeros((size, size))
    # Real sources: distance to targets, delete cost to waste columns.
    for i, s in enumerate(sources):
        for j, t in enumerate(targets):
            mat[i, j] = costs.move * manhattan(s, t)
        mat[i, nt:] = costs.delete
    # Dummy "thief" rows grab targets for free but may never waste.
    for i in range(ns, ns + stolen):
        mat[i, :nt] = 0.0
        mat[i, nt:] = big
    rows, cols = linear_sum_assignment(mat)
    return float(sum(mat[i, j] for i, j in zip(rows, cols)))


def _station_candidates(inputs, adjacent: list[Tile], costs: EditCosts):
    """Per station type: placements of 1 or 2 adjacent tiles sorted by cost."""
    out = {}
    for token in STATIONS:
        lst = []
        for i, a in enumerate(adjacent):
            lst.append((_placement_cost(inputs[token], [a], costs), (a,)))
            for b in adjacent[i + 1 :]:
                lst.append(
                    (_placement_cost(inputs[token], [a, b], costs), (a, b))
                )
        lst.sort(key=lambda e: (e[0], e[1]))
        out[token] = lst
    return out


def _best_station_assignment(
    base, candidates, rset, all_tiles, inputs, costs, incumbent, counter_lb
):
    best = incumbent
    mins = [candidates[t][0][0] for t in STATIONS]
    suffix_min = [0.0] * (len(STATIONS) + 1)
    for i in range(len(STATIONS) - 1, -1, -1):
        suffix_min[i] = suffix_min[i + 1] + mins[i]

    def clb(stolen: int) -> float:
        return counter_lb[min(stolen, len(counter_lb) - 1)]

    def rec(idx: int, used: frozenset, acc: float):
        nonlocal best
        remaining = len(STATIONS) - idx
        if acc + suffix_min[idx] + clb(len(used) + remaining) >= best:
            return
        if idx == len(STATIONS):
            counter_tiles = [
                v for v in all_tiles if v not in rset and v not in used
            ]
            cost_c, _ = match_type(inputs[COUNTER], counter_tiles, costs)
            total = acc + cost_c
            if total < best:
                best = total
            return
        token = STATIONS[idx]
        for cost, tiles in candidates[token]:
            if acc + cost + suffix_min[idx + 1] + clb(len(used) + remaining) >= best:
                break
            if any(t in used for t in tiles):
                continue
            if len(used) + len(tiles) + (remaining - 1) > 6:
                continue
            rec(idx + 1, used | frozenset(tiles), acc + cost)

    rec(0, frozenset(), base)
    return best


# ---------------------------------------------------------------------------
# MILP backend (scipy / HiGHS).


def solve_milp(model: RepairModel, time_limit: float = 60.0) -> RepairResult:
    """Solve the explicit mixed-integer model with scipy's HiGHS backend."""
    import numpy as np
    from scipy import sparse
    from scipy.optimize import Bounds, LinearConstraint, milp

    if model.grid is None:
        raise ValueError("model must carry its source grid")
    names = list(model.variables)
    col = {n: i for i, n in enumerate(names)}
    c = np.zeros(len(names))
    for n, coeff in model.objective.items():
        c[col[n]] = coeff
    rows, cols, data, lo, hi = [], [], [], [], []
    for i, con in enumerate(model.constraints):
        for n, coeff in con.coeffs.items():
            rows.append(i)
            cols.append(col[n])
            data.append(coeff)
        if con.sense == "<=":
            lo.append(-np.inf)
            hi.append(con.rhs)
        elif con.sense == ">=":
            lo.append(con.rhs)
            hi.append(np.inf)
        else:
            lo.append(con.rhs)
            hi.append(con.rhs)
    a = sparse.csr_matrix(
        (data, (rows, cols)), shape=(len(model.constraints), len(names))
    )
    bounds = Bounds(
        [model.variables[n].lower for n in names],
        [model.variables[n].upper for n in names],
    )
    integrality = np.array(
        [1 if model.variables[n].integer else 0 for n in names]
    )
    res = milp(
        c,
        constraints=LinearConstraint(a, lo, hi),
        bounds=bounds,
        integrality=integrality,
        options={"time_limit": time_limit},
    )
    if res.x is None:
        if res.status == 2:
            # Impossible by construction for repairable sizes; surface the
            # backend bug instead of masking it.
            raise RuntimeError("repair model reported infeasible")
        # Timed out with no incumbent: fall back to the heuristic repair.
        fallback = greedy_repair(model.grid, model.costs)
        return _result(model.grid, fallback, "feasible", model.costs)
    values = {n: float(res.x[col[n]]) for n in names}
    repaired = grid_from_values(model, values)
    if not check_solvability(repaired).is_solvable:
        repaired = greedy_repair(model.grid, model.costs)
        return _result(model.grid, repaired, "feasible", model.costs)
    status = "optimal" if res.status == 0 else "feasible"
    return _result(model.grid, repaired, status, model.costs)


# ---------------------------------------------------------------------------
# Entry points.

#: Interior sizes up to this bound get the exact branch-and-bound search.
EXACT_INTERIOR_LIMIT = 8


def solve(
    model: RepairModel,
    time_limit: float = 10.0,
    backend: str = "branch-and-bound",
) -> RepairResult:
    """Repair the model's source grid; see module docstring for backends."""
    if model.grid is None:
        raise ValueError("model must carry its source grid")
    grid = model.grid
    if check_solvability(grid).is_solvable:
        return _result(grid, grid, "optimal", model.costs)
    if backend == "milp":
        return solve_milp(model, time_limit)
    if backend != "branch-and-bound":
        raise ValueError(f"unknown backend {backend!r}")

    incumbent = greedy_repair(grid, model.costs)
    interior = (grid.width - 2) * (grid.height - 2)
    if interior > EXACT_INTERIOR_LIMIT:
        return _result(grid, incumbent, "feasible", model.costs)
    search = _ExactSearch(
        grid, model.costs, time.monotonic() + time_limit
    )
    search.seed(incumbent)
    best, proven = search.run()
    status = "optimal" if proven else "feasible"
    return _result(grid, best if best is not None else incumbent, status, model.costs)


def repair_grid(
    grid: KitchenGrid,
    costs: EditCosts = EditCosts(),
    time_limit: float = 10.0,
    backend: str = "branch-and-bound",
) -> RepairResult:
    """Convenience wrapper: build the model and solve it."""
    return solve(build_model(grid, costs), time_limit, backend)
