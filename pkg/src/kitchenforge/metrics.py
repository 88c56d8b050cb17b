"""Behavior characteristics and analysis statistics over episode logs.

Workload descriptors count who did the work (robot minus human); fluency
descriptors measure how smoothly the team moved. Both are computed from the
engine's EpisodeLog, so any logged session — simulated or interactive — can
be scored identically. The module also provides the median aggregation used
across repeated trials and the ε-robustness rank-correlation harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from scipy.stats import spearmanr

from .engine import AgentPose, EpisodeLog
from .grid import HUMAN, KitchenGrid, ROBOT

#: Inclusive descriptor ranges under the two-order task: six onions, two
#: dishes, and two deliveries can each swing entirely to one agent.
WORKLOAD_RANGES = ((-6, 6), (-2, 2), (-2, 2))
FLUENCY_RANGES = ((0.0, 100.0), (0, 100))

_INGREDIENT_EVENTS = ("pickup_onion",)
_PLATE_EVENTS = ("pickup_dish",)
_ORDER_EVENTS = ("deliver",)


@dataclass(frozen=True)
class WorkloadBC:
    """Robot-minus-human work split: onions picked, plates picked, orders
    delivered."""

    d_ingredients: int
    d_plates: int
    d_orders: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.d_ingredients, self.d_plates, self.d_orders)


@dataclass(frozen=True)
class FluencyBC:
    concurrent_motion_pct: float
    stuck_timesteps: int

    def as_tuple(self) -> tuple[float, int]:
        return (self.concurrent_motion_pct, self.stuck_timesteps)


def _event_delta(log: EpisodeLog, kinds: Sequence[str]) -> int:
    robot = human = 0
    for ev in log.events():
        if ev.kind in kinds:
            if ev.agent == 1:
                robot += 1
            else:
                human += 1
    return robot - human


def workload_bc(log: EpisodeLog) -> WorkloadBC:
    """Count work events per agent and return robot − human per category."""
    return WorkloadBC(
        d_ingredients=_event_delta(log, _INGREDIENT_EVENTS),
        d_plates=_event_delta(log, _PLATE_EVENTS),
        d_orders=_event_delta(log, _ORDER_EVENTS),
    )


def _initial_poses(grid: KitchenGrid) -> list[AgentPose]:
    return [
        AgentPose(grid.find_all(HUMAN)[0], "up"),
        AgentPose(grid.find_all(ROBOT)[0], "up"),
    ]


def fluency_bc(log: EpisodeLog) -> FluencyBC:
    """Concurrent activity percentage and stuck-timestep count.

    An agent is active at a tick when its pose changed (rotation included)
    or it performed a successful interaction. The denominator is the task's
    completion time — the episode's logged length — not the full horizon.
    A tick is stuck when neither agent's pose changed from the previous tick
    (mirrors the engine's deadlock detector).
    """
    if not log.records:
        return FluencyBC(0.0, 0)
    prev = _initial_poses(log.grid)
    concurrent = stuck = 0
    for rec in log.records:
        moved = [rec.poses[i] != prev[i] for i in (0, 1)]
        interacted = [
            any(ev.agent == i for ev in rec.events) for i in (0, 1)
        ]
        active = [moved[i] or interacted[i] for i in (0, 1)]
        if all(active):
            concurrent += 1
        if not moved[0] and not moved[1]:
            stuck += 1
        prev = rec.poses
    total = len(log.records)
    return FluencyBC(100.0 * concurrent / total, stuck)


def median_aggregate(values: Sequence):
    """Component-wise median across trials; even counts take the lower
    median so integer descriptors stay on integer bins."""
    if not values:
        raise ValueError("median of no trials")
    first = values[0]
    if isinstance(first, (int, float)):
        return sorted(values)[(len(values) - 1) // 2]
    pivots = zip(*[tuple(v) for v in values])
    return tuple(sorted(col)[(len(values) - 1) // 2] for col in pivots)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation; identical sequences rank-correlate at 1
    even when constant (scipy reports nan on zero variance)."""
    if len(xs) != len(ys):
        raise ValueError("length mismatch")
    if len(xs) < 3:
        raise ValueError("need at least 3 points for rank correlation")
    if list(xs) == list(ys):
        return 1.0
    rho = spearmanr(xs, ys).statistic
    return float(rho)


@dataclass
class RobustnessTable:
    """Spearman ρ per behavior dimension (columns) per ε (rows)."""

    epsilons: list[float]
    bc_names: list[str]
    rho: list[list[float]]  # rho[i][j] for epsilons[i] x bc_names[j]

    def to_csv(self) -> str:
        lines = ["epsilon," + ",".join(self.bc_names)]
        for eps, row in zip(self.epsilons, self.rho):
            lines.append(
                f"{eps:g}," + ",".join(f"{v:.4f}" for v in row)
            )
        return "\n".join(lines) + "\n"


def robustness_analysis(
    entries: Sequence[tuple[object, Sequence[float]]],
    epsilons: Sequence[float],
    resimulate: Callable[[object, float, int], Sequence[float]],
    trials: int = 50,
    bc_names: Sequence[str] | None = None,
) -> RobustnessTable:
    """Rank-stability of archive positions under a noisier human.

    ``entries`` holds (cell key, original descriptor vector) pairs;
    ``resimulate(key, epsilon, trial)`` returns one trial's descriptor
    vector for that cell's environment with the ε-random human. Per ε and
    per descriptor dimension, the Spearman ρ between original and median
    re-simulated values is reported (Table layout: ε rows × BC columns).
    """
    if len(entries) < 3:
        raise ValueError("need at least 3 archive cells for rank correlation")
    dims = len(entries[0][1])
    names = list(bc_names) if bc_names else [f"bc{j}" for j in range(dims)]
    if len(names) != dims:
        raise ValueError("bc_names length mismatch")
    table: list[list[float]] = []
    for eps in epsilons:
        new_vectors = []
        for key, _ in entries:
            samples = [resimulate(key, eps, t) for t in range(trials)]
            new_vectors.append(median_aggregate(samples))
        row = []
        for j in range(dims):
            row.append(
                spearman(
                    [vec[j] for _, vec in entries],
                    [vec[j] for vec in new_vectors],
                )
            )
        table.append(row)
    return RobustnessTable(list(epsilons), names, table)
