"""Edit-distance accounting between two kitchen layouts.

An edit is either moving an object along a path in the 4-connected space
graph (cost C_m per step; the grid is fully rectangular, so shortest path
length equals Manhattan distance), deleting an object (cost C_d), or
creating an object (free). Every tile holds exactly one object — floors and
counters included — so the edit distance between two same-shape grids
decomposes into one minimum-cost matching per object type between the
type's tiles in the original and in the edited grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..grid import KitchenGrid, TOKENS

C_DELETE = 20
C_MOVE = 1

Tile = tuple[int, int]


@dataclass(frozen=True)
class EditCosts:
    delete: int = C_DELETE
    move: int = C_MOVE


@dataclass
class Edit:
    """A single edit: kind is 'move', 'delete', or 'create'."""

    kind: str
    token: str
    source: Tile | None
    target: Tile | None
    cost: int


@dataclass
class EditSummary:
    cost: int
    edits: list[Edit] = field(default_factory=list)


def manhattan(a: Tile, b: Tile) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def match_type(
    sources: list[Tile], targets: list[Tile], costs: EditCosts = EditCosts()
) -> tuple[int, list[tuple[Tile | None, Tile | None]]]:
    """Minimum-cost matching for one object type.

    Every source is either moved to a target (cost = move * distance) or
    deleted (cost = delete); targets left unmatched are free creations.
    Returns (cost, pairs) where pairs maps source->target, source->None for
    deletions, and None->target for creations.
    """
    ns, nt = len(sources), len(targets)
    if ns == 0:
        return 0, [(None, t) for t in targets]
    # Square matrix: real sources may use per-source waste columns; dummy
    # rows absorb unmatched targets at zero cost (free creation).
    size = ns + nt
    mat = np.zeros((size, size))
    for i, s in enumerate(sources):
        for j, t in enumerate(targets):
            mat[i, j] = costs.move * manhattan(s, t)
        mat[i, nt:] = costs.delete
    rows, cols = linear_sum_assignment(mat)
    total = 0
    pairs: list[tuple[Tile | None, Tile | None]] = []
    matched_targets = set()
    for i, j in zip(rows, cols):
        if i < ns:
            if j < nt:
                pairs.append((sources[i], targets[j]))
                matched_targets.add(j)
                total += int(mat[i, j])
            else:
                pairs.append((sources[i], None))
                total += costs.delete
    for j, t in enumerate(targets):
        if j not in matched_targets:
            pairs.append((None, t))
    return total, pairs


def grid_edit_summary(
    original: KitchenGrid, edited: KitchenGrid, costs: EditCosts = EditCosts()
) -> EditSummary:
    """Full edit list and total cost converting `original` into `edited`."""
    if (original.width, original.height) != (edited.width, edited.height):
        raise ValueError("grids must share dimensions")
    summary = EditSummary(0)
    for token in TOKENS:
        cost, pairs = match_type(
            original.find_all(token), edited.find_all(token), costs
        )
        summary.cost += cost
        for src, dst in pairs:
            if src is not None and dst is not None:
                if src != dst:
                    summary.edits.append(
                        Edit(
                            "move",
                            token,
                            src,
                            dst,
                            costs.move * manhattan(src, dst),
                        )
                    )
            elif src is not None:
                summary.edits.append(
                    Edit("delete", token, src, None, costs.delete)
                )
            else:
                summary.edits.append(Edit("create", token, None, dst, 0))
    return summary


def grid_edit_cost(
    original: KitchenGrid, edited: KitchenGrid, costs: EditCosts = EditCosts()
) -> int:
    return grid_edit_summary(original, edited, costs).cost
