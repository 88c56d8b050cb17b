"""Candidate evaluation: latent vector or raw grid -> objective + descriptor.

This is the glue the search loops are parameterized over: decode the
candidate to a layout, repair it to a solvable kitchen, simulate the agent
pair, and summarize the episodes into an objective value and a behavior
descriptor. Evaluators are plain picklable dataclasses so a worker pool can
run them; per-call planner state (motion tables, beliefs) is rebuilt inside
the call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engine as eng
from . import generator as gen
from . import planning as pl
from .grid import DEFAULT_HEIGHT, DEFAULT_WIDTH, KitchenGrid, POT
from .metrics import fluency_bc, median_aggregate, workload_bc
from .qd import Evaluation
from .repair import EditCosts, repair_grid

PAIRS = ("centralized", "qmdp", "mdp")
BC_SETS = ("workload", "fluency")
OBJECTIVES = ("performance", "mdp_qmdp_gap")


def simulate_episode(
    grid: KitchenGrid,
    seed: int,
    pair: str = "qmdp",
    epsilon: float = 0.0,
    horizon: int = eng.HORIZON,
    table: pl.MotionPlanTable | None = None,
    joint_node_cap: int = 20000,
) -> eng.EpisodeLog:
    """One episode of the named agent pairing on a solvable grid.

    ``centralized`` compiles and replays the joint plan; ``qmdp`` pairs the
    belief-tracking robot with a (possibly ε-random) myopic human; ``mdp``
    gives the same robot oracle access to the human's true subtask.
    """
    if pair not in PAIRS:
        raise ValueError(f"unknown agent pair {pair!r}")
    # The centralized planner keeps its own (large) node cap: its plan
    # quality is the objective being measured, so starving its motion
    # search distorts results rather than just slowing them.
    if pair == "centralized":
        return pl.centralized_plan(grid, seed=seed, horizon=horizon, table=table).log
    table = table or pl.MotionPlanTable(grid)
    if epsilon > 0:
        human = pl.EpsilonMyopicHuman(table, epsilon)
    else:
        human = pl.MyopicHuman(table)
    model = pl.QmdpModel(
        table, num_pots=len(grid.find_all(POT)), joint_node_cap=joint_node_cap
    )
    oracle = human.inner.subtask if epsilon > 0 else human.subtask
    robot = pl.QmdpRobotController(model, oracle=oracle if pair == "mdp" else None)

    def controller(state):
        return (human.action(state), robot.action(state))

    return eng.run_episode(grid, seed, controller, horizon=horizon)


def episode_performance(log: eng.EpisodeLog, horizon: int = eng.HORIZON) -> float:
    times = log.delivery_times()
    return eng.performance(times, len(times), horizon)


def episode_descriptor(log: eng.EpisodeLog, bc_set: str) -> tuple[float, ...]:
    if bc_set == "workload":
        return tuple(float(v) for v in workload_bc(log).as_tuple())
    if bc_set == "fluency":
        f = fluency_bc(log)
        return (f.concurrent_motion_pct, float(f.stuck_timesteps))
    raise ValueError(f"unknown descriptor set {bc_set!r}")


@dataclass
class EnvEvaluator:
    """decode -> repair -> simulate, median-aggregated over trials.

    ``objective="performance"`` scores the configured pair directly;
    ``"mdp_qmdp_gap"`` scores perf(MDP pair) − perf(QMDP pair) per trial,
    so maximizing it surfaces environments where hidden intent hurts.
    Trials differ only in episode seed; deterministic pairs need one trial.
    """

    pair: str = "qmdp"
    bc_set: str = "workload"
    objective: str = "performance"
    trials: int = 1
    epsilon: float = 0.0
    seed: int = 0
    horizon: int = eng.HORIZON
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    repair_time_limit: float = 10.0
    repair_backend: str = "branch-and-bound"
    # Node budget for the robot's joint motion queries; past it a
    # conservative sequential estimate stands in. 1000 keeps deadlocked
    # episodes from dominating wall time without changing plan rankings in
    # practice.
    joint_node_cap: int = 1000
    weights_path: str | None = None
    costs: EditCosts = field(default_factory=EditCosts)

    def __post_init__(self):
        if self.pair not in PAIRS:
            raise ValueError(f"unknown agent pair {self.pair!r}")
        if self.bc_set not in BC_SETS:
            raise ValueError(f"unknown descriptor set {self.bc_set!r}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")
        self._weights = None

    def decode(self, z: np.ndarray) -> KitchenGrid:
        if self.weights_path is None:
            return gen.direct_decode(z, self.width, self.height)
        if self._weights is None:
            self._weights = gen.load_weights(self.weights_path)
        return gen.decode(z, self._weights, self.width, self.height)

    def _trial_seed(self, trial: int) -> int:
        return (self.seed * 1_000_003 + trial) % 2**32

    def evaluate_grid(self, grid: KitchenGrid, z=None) -> Evaluation:
        """Repair then simulate; shared by the latent and tile paths."""
        repair = repair_grid(
            grid,
            self.costs,
            time_limit=self.repair_time_limit,
            backend=self.repair_backend,
        )
        fixed = repair.repaired
        table = pl.MotionPlanTable(fixed)
        fs: list[float] = []
        bs: list[tuple[float, ...]] = []
        for trial in range(self.trials):
            seed = self._trial_seed(trial)
            log = simulate_episode(
                fixed, seed, self.pair, self.epsilon, self.horizon, table,
                self.joint_node_cap,
            )
            if self.objective == "mdp_qmdp_gap":
                other = "mdp" if self.pair == "qmdp" else "qmdp"
                log2 = simulate_episode(
                    fixed, seed, other, self.epsilon, self.horizon, table,
                    self.joint_node_cap,
                )
                mdp_log, qmdp_log = (log2, log) if self.pair == "qmdp" else (log, log2)
                fs.append(
                    episode_performance(mdp_log, self.horizon)
                    - episode_performance(qmdp_log, self.horizon)
                )
            else:
                fs.append(episode_performance(log, self.horizon))
            bs.append(episode_descriptor(log, self.bc_set))
        f = median_aggregate(fs)
        b = median_aggregate(bs)
        meta = {
            "repair_status": repair.solver_status,
            "repair_cost": repair.edit_cost,
            "trials": self.trials,
        }
        return Evaluation(f=float(f), b=tuple(b), grid=fixed, metadata=meta)

    def __call__(self, z: np.ndarray) -> Evaluation:
        return self.evaluate_grid(self.decode(z), z)
