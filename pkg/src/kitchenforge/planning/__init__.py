"""Agent controllers: motion planning, human models, belief-space robot, and
the centralized joint planner."""

from .motion import INFEASIBLE, JointPlan, MotionPlanTable, build_motion_table
from .subtasks import Subtask
from .humans import EpsilonMyopicHuman, MyopicHuman
from .qmdp import (
    BeliefState,
    QmdpModel,
    QmdpRobotController,
    initial_belief,
    mdp_robot,
    qmdp_robot,
    qmdp_update_belief,
)
from .centralized import CentralizedPlan, centralized_plan

__all__ = [
    "INFEASIBLE",
    "JointPlan",
    "MotionPlanTable",
    "build_motion_table",
    "Subtask",
    "EpsilonMyopicHuman",
    "MyopicHuman",
    "BeliefState",
    "QmdpModel",
    "QmdpRobotController",
    "initial_belief",
    "mdp_robot",
    "qmdp_robot",
    "qmdp_update_belief",
    "CentralizedPlan",
    "centralized_plan",
]
