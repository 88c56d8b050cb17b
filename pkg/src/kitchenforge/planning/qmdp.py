"""Belief-space robot planner and its full-observability counterpart.

The robot chooses subtasks, not low-level actions. The hidden variable is the
human's current subtask; everything else (held items, pot fill, remaining
orders) is observable. Each tick the robot:

1. updates its belief from the human's last motion (a subtask becomes more
   likely when the move shortened the motion-plan cost to it),
2. scores every robot subtask by expected immediate motion cost plus the
   value of the resulting abstract state, and
3. takes one step of the single-agent optimal path toward the winner.

The value function is computed by value iteration over abstract task states
where both agents complete one subtask per round at a nominal tick cost; the
hidden subtask evolves uniformly over feasible successors on completion.
The full-observability variant is the same scoring with the belief collapsed
onto the true human subtask.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from ..engine import Action, GameState, Held, POT_CAPACITY
from . import subtasks as st
from .motion import INFEASIBLE, MotionPlanTable

#: Nominal ticks per subtask round in the abstract model.
ROUND_COST = 10.0
#: Value ceiling for dead-end abstract states (no-drop deadlocks etc.).
VALUE_CAP = 1000.0
VI_TOLERANCE = 1e-6
VI_MAX_ITERS = 500

BETA_DEFAULT = 1.0
LIKELIHOOD_FLOOR = 1e-6

AbstractState = tuple[str, str, tuple[int, ...], int]  # h_held, r_held, pots, orders

_HELD_VALUES = ("nothing", "onion", "dish", "soup")

_HUMAN_KINDS = {
    "nothing": (st.PICK_ONION, st.PICK_DISH),
    "onion": (st.DROP_ONION,),
    "dish": (st.SCOOP_SOUP,),
    "soup": (st.DELIVER_SOUP,),
}

_ROBOT_KINDS = {
    "nothing": (st.PICK_ONION, st.PICK_DISH, st.WAIT),
    "onion": (st.DROP_ONION, st.WAIT),
    "dish": (st.SCOOP_SOUP, st.WAIT),
    "soup": (st.DELIVER_SOUP, st.WAIT),
}


def _apply_kind(
    kind: str, held: str, pots: tuple[int, ...], orders: int
) -> tuple[str, tuple[int, ...], int, bool]:
    """Abstract subtask effect; returns (held', pots', orders', completed)."""
    if kind == st.PICK_ONION and held == "nothing":
        return "onion", pots, orders, True
    if kind == st.PICK_DISH and held == "nothing":
        return "dish", pots, orders, True
    if kind == st.DROP_ONION and held == "onion":
        open_pots = [c for c in pots if c < POT_CAPACITY]
        if open_pots:
            target = max(open_pots)
            out = list(pots)
            out[out.index(target)] = target + 1
            return "nothing", tuple(sorted(out)), orders, True
    if kind == st.SCOOP_SOUP and held == "dish":
        if POT_CAPACITY in pots:
            out = list(pots)
            out[out.index(POT_CAPACITY)] = 0
            return "soup", tuple(sorted(out)), orders, True
    if kind == st.DELIVER_SOUP and held == "soup" and orders > 0:
        return "nothing", pots, orders - 1, True
    return held, pots, orders, False


class ValueFunction:
    """Expected ticks-to-completion over (abstract state, human subtask kind)."""

    def __init__(self, num_pots: int, round_cost: float = ROUND_COST):
        self.num_pots = num_pots
        self.round_cost = round_cost
        self.residual = math.inf
        self.iterations = 0
        self._values: dict[tuple[AbstractState, str], float] = {}
        self._iterate()

    def _states(self):
        pot_combos = sorted(
            set(
                tuple(sorted(c))
                for c in itertools.product(
                    range(POT_CAPACITY + 1), repeat=self.num_pots
                )
            )
        )
        for h_held in _HELD_VALUES:
            for r_held in _HELD_VALUES:
                for pots in pot_combos:
                    for orders in range(3):
                        for hs in _HUMAN_KINDS[h_held]:
                            yield ((h_held, r_held, pots, orders), hs)

    def _step(self, sigma: AbstractState, hs: str, ra: str):
        h_held, r_held, pots, orders = sigma
        r_held, pots, orders, _ = _apply_kind(ra, r_held, pots, orders)
        h_held, pots, orders, h_done = _apply_kind(hs, h_held, pots, orders)
        return (h_held, r_held, pots, orders), h_done

    def _future(self, sigma: AbstractState, hs: str, h_done: bool) -> float:
        if sigma[3] == 0:
            return 0.0
        if h_done:
            kinds = _HUMAN_KINDS[sigma[0]]
            return sum(self._values[(sigma, k)] for k in kinds) / len(kinds)
        return self._values[(sigma, hs)]

    def _iterate(self):
        states = list(self._states())
        self._values = {key: 0.0 for key in states}
        for it in range(VI_MAX_ITERS):
            residual = 0.0
            for key in states:
                sigma, hs = key
                if sigma[3] == 0:
                    continue
                best = VALUE_CAP
                for ra in _ROBOT_KINDS[sigma[1]]:
                    nxt, h_done = self._step(sigma, hs, ra)
                    v = self.round_cost + self._future(nxt, hs, h_done)
                    best = min(best, v)
                best = min(best, VALUE_CAP)
                residual = max(residual, abs(best - self._values[key]))
                self._values[key] = best
            self.residual = residual
            self.iterations = it + 1
            if residual < VI_TOLERANCE:
                break

    def value(self, sigma: AbstractState, hs: str) -> float:
        if sigma[3] == 0:
            return 0.0
        return self._values[(sigma, hs)]

    def expected_value(self, sigma: AbstractState) -> float:
        return self._future(sigma, hs="", h_done=True)


def abstract_state(state: GameState) -> AbstractState:
    pots = tuple(
        sorted(p.onion_count for p in state.pots.values())
    )
    return (
        state.held[0].value,
        state.held[1].value,
        pots,
        state.orders_remaining,
    )


@dataclass
class BeliefState:
    """Probability per feasible concrete human subtask."""

    probs: dict[st.Subtask, float] = field(default_factory=dict)

    def normalized(self) -> "BeliefState":
        total = sum(self.probs.values())
        if total <= 0:
            raise ValueError("degenerate belief")
        return BeliefState({k: v / total for k, v in self.probs.items()})

    def total(self) -> float:
        return sum(self.probs.values())

    @staticmethod
    def uniform(support: list[st.Subtask]) -> "BeliefState":
        if not support:
            return BeliefState({})
        p = 1.0 / len(support)
        return BeliefState({s: p for s in support})


class QmdpModel:
    """Shared pieces of the belief planner: motion costs, value function,
    observation weighting."""

    def __init__(
        self,
        table: MotionPlanTable,
        num_pots: int,
        beta: float = BETA_DEFAULT,
        round_cost: float = ROUND_COST,
        joint_node_cap: int = 20000,
    ):
        self.table = table
        self.beta = beta
        self.values = _shared_value_function(num_pots, round_cost)
        self.joint_node_cap = joint_node_cap

    def motion_cost(self, state: GameState, robot_goal, human_goal) -> float:
        return self.table.joint_cost_fast(
            (state.poses[0], state.poses[1]),
            (human_goal, robot_goal),
            node_cap=self.joint_node_cap,
        )


_VALUE_CACHE: dict[tuple[int, float], ValueFunction] = {}


def _shared_value_function(num_pots: int, round_cost: float) -> ValueFunction:
    key = (num_pots, round_cost)
    if key not in _VALUE_CACHE:
        _VALUE_CACHE[key] = ValueFunction(num_pots, round_cost)
    return _VALUE_CACHE[key]


def initial_belief(state: GameState) -> BeliefState:
    return BeliefState.uniform(st.feasible_subtasks(state.held[0], state))


def qmdp_update_belief(
    model: QmdpModel,
    belief: BeliefState,
    state: GameState,
    prev_pose,
    new_pose,
    completed: st.Subtask | None = None,
) -> BeliefState:
    """Bayesian update from one human motion.

    Likelihood of a subtask is exp(beta * (cost before move - cost after)),
    so moves that shorten the path to a subtask raise its probability. On
    completion the belief resets to uniform over feasible successors.
    """
    feasible = st.feasible_subtasks(state.held[0], state)
    if completed is not None or not belief.probs:
        return BeliefState.uniform(feasible)
    feasible_set = set(feasible)
    posterior: dict[st.Subtask, float] = {}
    for sub, prior in belief.probs.items():
        if sub not in feasible_set:
            continue
        before = model.table.cost_to_tile(prev_pose, sub.tile)
        after = model.table.cost_to_tile(new_pose, sub.tile)
        if before == INFEASIBLE or after == INFEASIBLE:
            like = LIKELIHOOD_FLOOR
        else:
            like = max(math.exp(model.beta * (before - after)), LIKELIHOOD_FLOOR)
        posterior[sub] = prior * like
    # Feasible subtasks that entered the support this tick start at the floor.
    for sub in feasible:
        posterior.setdefault(sub, LIKELIHOOD_FLOOR)
    total = sum(posterior.values())
    if total <= 0:
        return BeliefState.uniform(feasible)
    return BeliefState({k: v / total for k, v in posterior.items()})


def robot_subtask_candidates(state: GameState) -> list[st.Subtask]:
    out = []
    for kind in _ROBOT_KINDS[state.held[1].value]:
        if kind == st.WAIT:
            out.append(st.Subtask(st.WAIT, None))
        else:
            for tile in st.candidate_tiles(state, kind):
                out.append(st.Subtask(kind, tile))
    return out


def _q_value(
    model: QmdpModel, state: GameState, action: st.Subtask, human: st.Subtask
) -> float:
    sigma = abstract_state(state)
    h_held, r_held, pots, orders = sigma
    r_held, pots, orders, _ = _apply_kind(action.kind, r_held, pots, orders)
    h_held, pots, orders, h_done = _apply_kind(human.kind, h_held, pots, orders)
    if human.kind == st.WAIT:
        h_done = True  # idle human: average over whatever it may do next
    nxt = (h_held, r_held, pots, orders)
    robot_goal = action.tile if action.kind != st.WAIT else None
    cost = model.motion_cost(state, robot_goal, human.tile)
    if cost == INFEASIBLE:
        return INFEASIBLE
    if orders == 0:
        future = 0.0
    elif h_done:
        kinds = _HUMAN_KINDS[h_held]
        future = sum(model.values.value(nxt, k) for k in kinds) / len(kinds)
    else:
        future = model.values.value(nxt, human.kind)
    return cost + future


def qmdp_robot(
    model: QmdpModel, state: GameState, belief: BeliefState
) -> st.Subtask:
    """Robot subtask minimizing expected cost-to-go under the belief."""
    if state.orders_remaining == 0:
        return st.Subtask(st.WAIT, None)
    belief = belief.normalized()
    best = None
    for action in sorted(robot_subtask_candidates(state), key=lambda s: s.sort_key):
        q = 0.0
        for human, prob in belief.probs.items():
            if prob == 0.0:
                continue
            qa = _q_value(model, state, action, human)
            if qa == INFEASIBLE:
                q = INFEASIBLE
                break
            q += prob * qa
        if q == INFEASIBLE:
            continue
        if best is None or q < best[0] - 1e-9:
            best = (q, action)
    if best is None:
        return st.Subtask(st.WAIT, None)
    return best[1]


def mdp_robot(
    model: QmdpModel, state: GameState, true_human_subtask: st.Subtask
) -> st.Subtask:
    """Full-observability variant: the belief collapses to the true subtask."""
    return qmdp_robot(
        model, state, BeliefState({true_human_subtask: 1.0})
    )


class QmdpRobotController:
    """Stateful per-episode wrapper driving the robot agent (index 1)."""

    def __init__(self, model: QmdpModel, oracle=None):
        self.model = model
        self.oracle = oracle  # callable(state) -> true human Subtask, MDP mode
        self.belief: BeliefState | None = None
        self._prev_pose = None
        self._prev_held: Held | None = None
        self.current: st.Subtask | None = None

    def action(self, state: GameState) -> Action:
        if state.orders_remaining == 0:
            return Action.STAY
        if self.belief is None:
            self.belief = initial_belief(state)
        else:
            completed = None
            if self._prev_held is not None and state.held[0] != self._prev_held:
                completed = st.Subtask(st.WAIT, None)  # marker: reset belief
            self.belief = qmdp_update_belief(
                self.model,
                self.belief,
                state,
                self._prev_pose,
                state.poses[0],
                completed,
            )
        self._prev_pose = state.poses[0]
        self._prev_held = state.held[0]

        if not self.belief.probs:
            # Human has nothing feasible (e.g. waiting at a full pot); plan
            # against an idle human so the robot can unblock the task.
            idle = BeliefState({st.Subtask(st.WAIT, None): 1.0})
            self.current = qmdp_robot(self.model, state, idle)
        elif self.oracle is not None:
            self.current = mdp_robot(self.model, state, self.oracle(state))
        else:
            self.current = qmdp_robot(self.model, state, self.belief)

        if self.current.kind == st.WAIT or self.current.tile is None:
            return Action.STAY
        return self.model.table.next_action(
            state.poses[1], self.current.tile, avoid=state.poses[0].position
        )
